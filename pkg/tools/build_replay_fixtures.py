#!/usr/bin/env python3
"""Regenerate tests/fixtures/replay/: blueprints, canned replies and the expected tally.

Each canned reply is written to produce one intended outcome (correct, or
one failure mode). The expected report is tallied from those intended labels
by plain counting, so it never goes through the scoring or aggregation code.
"""
import json
from collections import Counter, defaultdict
from pathlib import Path

from fmscope.analysis import AoKind, AoShape, run_ao
from fmscope.blueprint import load_blueprint
from fmscope.harness.contract import ANSWER_TAGS, format_answer
from fmscope.model import Completeness, Configuration

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "replay"

KIOSK = """\
The root feature is Kiosk.
Feature Kiosk must have Feature Display.
Feature Kiosk can have Feature Printer.
Feature Kiosk can have Feature Scanner.
Feature Display can be Feature LCD or Feature Projector.
Feature Kiosk can be Feature Card, Feature Cash, or both.
Feature Projector excludes Feature Display.
Feature Kiosk requires Feature Printer.
"""
KIOSK_PAIR = KIOSK.replace("Feature Kiosk can have Feature Scanner.",
                           "Feature Kiosk must have Feature Scanner.")
CAR = """\
The root feature is Car.
Feature Car must have Feature Engine.
Feature Car can have Feature GPS.
Feature Engine can be Feature Gas or Feature Electric.
Feature GPS requires Feature Electric.
"""
CAR_PAIR = CAR.replace("Feature Car must have Feature Engine.",
                       "Feature Car can have Feature Engine.")
BLUEPRINTS = {
    "kiosk": (KIOSK, Configuration({"Projector"}), KIOSK_PAIR),
    "car": (CAR, Configuration({"Car", "Engine", "Electric", "GPS"}, {"Gas"}, Completeness.FULL), CAR_PAIR),
}
MODELS = {"alpha": "general", "beta": "general", "gamma": "reasoning"}

# intended outcome per (model, blueprint, AO); unlisted triples are answered correctly
U, T, H, W = "unparseable", "partial_truncated", "hallucinated_elements", "format_correct_but_wrong"
FAULTS = {
    ("alpha", "kiosk"): {"AO2": W, "AO4": W, "AO12": T, "AO14": H, "AO15": W},
    ("alpha", "car"): {"AO4": W, "AO13": U},
    ("beta", "kiosk"): {"AO3": U, "AO5": W, "AO9": W, "AO12": W, "AO13": H, "AO16": W},
    ("beta", "car"): {"AO2": W, "AO11": T, "AO15": H},
    ("gamma", "kiosk"): {"AO4": W},
    ("gamma", "car"): {"AO12": T},
}


def oracle(bp: str, ao: AoKind):
    text, config, pair = BLUEPRINTS[bp]
    fm = load_blueprint(text)
    extra = config if ao is AoKind.AO11 else load_blueprint(pair) if ao is AoKind.AO16 else None
    return fm, run_ao(ao, fm, extra)


def wrong_value(fm, res):
    v = res.value
    if res.ao.shape is AoShape.BOOL:
        return not v
    if res.ao.shape is AoShape.FEATURE_SET:
        extra = sorted(set(fm.names) - v)
        return v | {extra[0]} if extra else v - {sorted(v)[0]}
    return v + 1


def reply(model: str, bp: str, ao: AoKind, label: str) -> str:
    fm, res = oracle(bp, ao)
    tag = ANSWER_TAGS[ao]
    if label == "correct":
        body = format_answer(res, "Checked each statement.")
        # vary presentation: prose before the XML, reversed list order
        if ao.shape is AoShape.FEATURE_SET and len(res.value) > 1:
            names = sorted(res.value, reverse=True)
            body = body.replace("\n".join(sorted(res.value)), "\n".join(names))
        return f"Let me work through the blueprint.\n{body}" if model == "beta" else body
    if label == U:
        return f"After analysis, the answer is {res.text() or 'none'}."
    if label == T:
        full = format_answer(res, "partial")
        return full[:full.index(f"<{tag}>") + len(tag) + 2] + "\n"
    if label == H:
        return format_answer(type(res)(ao, res.value | {"Warp Drive"}), "Guessing.")
    return format_answer(type(res)(ao, wrong_value(fm, res)), "Counted carefully.")


def main() -> None:
    bp_dir = OUT / "blueprints"
    bp_dir.mkdir(parents=True, exist_ok=True)
    for name, (text, config, pair) in BLUEPRINTS.items():
        (bp_dir / f"{name}.bp").write_text(text)
        (bp_dir / f"{name}.pair.bp").write_text(pair)
        (bp_dir / f"{name}.config.json").write_text(json.dumps(config.to_json(), indent=2) + "\n")
    (OUT / "models.json").write_text(json.dumps(
        {m: {"family": fam, "temperature": 0.0} for m, fam in MODELS.items()}, indent=2) + "\n")

    responses = []
    cells = defaultdict(lambda: [0, 0])
    bp_cells = defaultdict(lambda: [0, 0])
    failures = defaultdict(Counter)
    for model in MODELS:
        for bp in BLUEPRINTS:
            for ao in AoKind:
                label = FAULTS.get((model, bp), {}).get(ao.code, "correct")
                responses.append({"model_id": model, "blueprint": bp, "ao": ao.code,
                                  "intended": label, "response": reply(model, bp, ao, label)})
                ok = label == "correct"
                for table, key in ((cells, (model, ao.code)), (bp_cells, (model, bp))):
                    table[key][0] += ok
                    table[key][1] += 1
                failures[(model, ao.code)]["none" if ok else label] += 1
    (OUT / "responses.json").write_text(json.dumps({"responses": responses}, indent=2) + "\n")

    def pct(c):
        return round(100.0 * c[0] / c[1], 4)

    per_model = {m: [sum(cells[(m, a.code)][0] for a in AoKind),
                     sum(cells[(m, a.code)][1] for a in AoKind)] for m in MODELS}
    fam_scores = defaultdict(list)
    for m, fam in MODELS.items():
        fam_scores[fam].append(100.0 * per_model[m][0] / per_model[m][1])
    modes = ["none", U, T, H, W]
    expected = {
        "accuracy": {m: {a.code: pct(cells[(m, a.code)]) for a in AoKind} for m in sorted(MODELS)},
        "blueprint_accuracy": {m: {bp: pct(bp_cells[(m, bp)]) for bp in sorted(BLUEPRINTS)}
                               for m in sorted(MODELS)},
        "model_accuracy": {m: pct(per_model[m]) for m in sorted(MODELS)},
        "family_accuracy": {f: round(sum(v) / len(v), 4) for f, v in sorted(fam_scores.items())},
        "failures": {m: {a.code: {mode: failures[(m, a.code)][mode] for mode in modes}
                         for a in AoKind} for m in sorted(MODELS)},
    }
    (OUT / "expected_report.json").write_text(json.dumps(expected, indent=2, sort_keys=True) + "\n")
    print(f"{len(responses)} responses; model accuracy {expected['model_accuracy']}; "
          f"families {expected['family_accuracy']}")


if __name__ == "__main__":
    main()
