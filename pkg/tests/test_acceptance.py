"""Acceptance criteria 1-8.

Every criterion records one PASS/FAIL/SKIP line; the lines are printed in the
pytest terminal summary (see conftest.py) and by running this file directly.
"""
from __future__ import annotations

import json
import os
import random
import string
import sys
import time
from pathlib import Path

import pytest

from fmscope.analysis import AoKind, ao3_tree_depth, run_ao, run_all
from fmscope.blueprint import generate_variant, load_blueprint, render_blueprint
from fmscope.harness.contract import FailureMode, format_answer, parse_answer
from fmscope.harness.providers import MockProvider, load_model_configs
from fmscope.harness.report import aggregate
from fmscope.harness.runner import load_cases, read_records, run_matrix
from fmscope.model import Configuration, RelKind, enumerate_configurations, isomorphic, semantics
from fmscope.solver import compile_cnf, count_models
from fmscope.uvl import parse_uvl, render_uvl
from support import (ACCEPTANCE, FIXTURE_DIR, FIXTURES, brute_configs, brute_generalizes,
                     brute_vector, random_model)

CORPUS_ENV = "FMSCOPE_CORPUS_DIR"
# features / relationships / cross-tree constraints / tree depth per corpus model
CORPUS_METRICS = {
    "SW": (6, 4, 1, 2), "SMW": (13, 8, 2, 2), "IDE": (14, 11, 2, 2), "SMG": (33, 19, 4, 3),
    "COM": (48, 25, 21, 3), "SEA": (145, 73, 13, 10), "CVE": (169, 15, 153, 4),
    "BDB": (117, 54, 282, 5), "CNNl": (3296, 1561, 76, 10), "CNNf": (6867, 3516, 9, 11),
}


def record(n: int, ok: bool | None, detail: str) -> None:
    status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
    ACCEPTANCE[n] = f"criterion {n}: {status} - {detail}"
    print(ACCEPTANCE[n])


def corpus(count: int, seed: int, **kw):
    rng = random.Random(seed)
    return [random_model(rng, **kw) for _ in range(count)]


def random_partial_config(rng: random.Random, fm) -> Configuration:
    names = fm.names
    picked = rng.sample(names, rng.randint(0, min(3, len(names))))
    cut = rng.randint(0, len(picked))
    return Configuration(frozenset(picked[:cut]), frozenset(picked[cut:]))


# ---------------------------------------------------------------------------

def test_criterion_1_brute_force_oracle_equivalence():
    start = time.perf_counter()
    models = corpus(200, seed=101, max_features=12, max_constraints=4)
    rng = random.Random(7)
    mismatches = []
    for i, fm in enumerate(models):
        got = run_all(fm)
        configs = brute_configs(fm)
        for code, value in brute_vector(fm).items():
            if got[AoKind.parse(code)].value != value:
                mismatches.append((i, code))
        cfg = random_partial_config(rng, fm)
        expected = any(cfg.selected <= c and not cfg.deselected & c for c in configs)
        if run_ao(AoKind.AO11, fm, cfg).value != expected:
            mismatches.append((i, "AO11"))
    pairs = 0
    for i, fm in enumerate(models):
        if pairs == 100:
            break
        if not fm.relationships:
            continue
        v = generate_variant(fm, rng.randrange(10**6), rng.randint(1, len(fm.relationships)))
        general, special = (v, fm) if rng.random() < 0.5 else (fm, v)
        if run_ao(AoKind.AO16, general, special).value != brute_generalizes(general, special):
            mismatches.append((i, "AO16"))
        pairs += 1
    elapsed = time.perf_counter() - start
    ok = not mismatches and pairs == 100 and elapsed < 60
    record(1, ok, f"{len(models)} models, {pairs} AO16 pairs, {len(mismatches)} mismatches, "
                  f"{elapsed:.1f}s (limit 60s)")
    assert ok, mismatches[:10]


def test_criterion_2_counting_exactness():
    models = corpus(200, seed=101, max_features=12, max_constraints=4)
    bad = sum(count_models(compile_cnf(semantics(fm), len(fm.features)))
              != len(enumerate_configurations(fm)) for fm in models)
    rng = random.Random(202)
    slowest = 0.0
    sparse = 0
    while sparse < 50:
        fm = random_model(rng, max_features=20, max_constraints=3)
        if len(fm.features) < 15:
            continue
        sparse += 1
        t0 = time.perf_counter()
        count_models(compile_cnf(semantics(fm), len(fm.features)))
        slowest = max(slowest, time.perf_counter() - t0)
    ok = bad == 0 and slowest < 10
    record(2, ok, f"{200 - bad}/200 counts equal enumeration; slowest of {sparse} sparse "
                  f"15-20 feature models {slowest:.3f}s (limit 10s)")
    assert ok


def test_criterion_3_generalization_property():
    models = corpus(100, seed=303, max_features=12, max_constraints=4)
    checked = failures = 0
    for fm in models:
        base = count_models(compile_cnf(semantics(fm), len(fm.features)))
        for i, rel in enumerate(fm.relationships):
            if rel.kind not in (RelKind.MANDATORY, RelKind.ALTERNATIVE):
                continue
            rels = list(fm.relationships)
            rels[i] = type(rel)(rel.parent, rel.kind.flipped(), rel.children)
            variant = fm.replace(relationships=tuple(rels))
            checked += 1
            if not run_ao(AoKind.AO16, variant, fm).value:
                failures += 1
            grown = count_models(compile_cnf(semantics(variant), len(fm.features))) > base
            if grown and run_ao(AoKind.AO16, fm, variant).value:
                failures += 1
    ok = failures == 0 and checked > 0
    record(3, ok, f"{checked} single relaxing swaps over 100 models, {failures} violations")
    assert ok


EXPECTED_FIXTURES = {
    "E0": {"AO1": 1, "AO2": 1, "AO3": 0, "AO4": 0, "AO5": 0, "AO6": 0, "AO7": 0, "AO8": 0,
           "AO9": 0, "AO10": True, "AO12": 1, "AO13": {"A"}, "AO14": set(), "AO15": set()},
    "E1": {"AO1": 5, "AO2": 3, "AO3": 2, "AO4": 1, "AO5": 1, "AO6": 0, "AO7": 1, "AO8": 1,
           "AO9": 0, "AO10": True, "AO12": 3, "AO13": {"Car", "Engine"}, "AO14": set(),
           "AO15": set()},
    "E2": {"AO4": 2, "AO9": 1, "AO10": False, "AO12": 0},
    "E3": {"AO5": 1, "AO8": 1, "AO13": {"A", "B"}, "AO15": {"B"}},
    "E4": {"AO2": 2, "AO6": 1, "AO7": 0, "AO12": 3},
}


def test_criterion_4_fixture_ground_truth():
    wrong = []
    for name, expected in EXPECTED_FIXTURES.items():
        fm = FIXTURES[name]
        got = {k.code: v.value for k, v in run_all(fm).items()}
        brute = brute_vector(fm)
        for code, value in expected.items():
            if got[code] != value or (code in brute and brute[code] != value):
                wrong.append(f"{name}.{code}")
    ok = not wrong
    record(4, ok, f"E0-E4: {sum(map(len, EXPECTED_FIXTURES.values())) - len(wrong)}/"
                  f"{sum(map(len, EXPECTED_FIXTURES.values()))} stated values reproduced "
                  f"and confirmed by enumeration")
    assert ok, wrong


def test_criterion_5_corpus_calibration():
    root = os.environ.get(CORPUS_ENV)
    files = {code: Path(root) / f"{code}.uvl" for code in CORPUS_METRICS} if root else {}
    present = {code: p for code, p in files.items() if p.exists()}
    if not present:
        record(5, None, f"no UVL corpus available (set {CORPUS_ENV} to a directory holding "
                        "SW.uvl, SMW.uvl, ...); calibration not run")
        pytest.skip("reference UVL corpus not available offline")
    mismatches = []
    for code, path in sorted(present.items()):
        doc = parse_uvl(path.read_text(encoding="utf-8"), code)
        fm = doc.model
        got = (len(fm.features), len(fm.relationships), doc.constraint_lines, ao3_tree_depth(fm))
        if got != CORPUS_METRICS[code]:
            mismatches.append(f"{code}: got {got}, expected {CORPUS_METRICS[code]}")
    ok = not mismatches
    record(5, ok, f"{len(present)}/{len(CORPUS_METRICS)} corpus models checked; "
                  + ("all match" if ok else "; ".join(mismatches)))
    assert ok, mismatches


def test_criterion_6_round_trips():
    models = corpus(100, seed=606, max_features=12, max_constraints=4, general_constraints=True)
    rng = random.Random(66)
    bad = 0
    for fm in models:
        via_bp = load_blueprint(render_blueprint(fm))
        via_uvl = parse_uvl(render_uvl(fm)).model
        if not (isomorphic(via_bp, fm) and isomorphic(via_uvl, fm)):
            bad += 1
            continue
        cfg = random_partial_config(rng, fm)
        special = generate_variant(fm, rng.randrange(1000)) if fm.relationships else fm
        vectors = [{k.code: r.value for k, r in run_all(m, cfg, special).items()}
                   for m in (fm, via_bp, via_uvl)]
        if not vectors[0] == vectors[1] == vectors[2] or len(vectors[0]) != 16:
            bad += 1
    ok = bad == 0
    record(6, ok, f"{100 - bad}/100 models round-trip through blueprint and UVL with identical "
                  "16-AO vectors")
    assert ok


def test_criterion_7_offline_replay_and_resume(tmp_path):
    replay = FIXTURE_DIR / "replay"
    responses = json.loads((replay / "responses.json").read_text())["responses"]
    modes = {r["intended"] for r in responses}
    aos = {r["ao"] for r in responses}
    out = tmp_path / "records.jsonl"
    models = load_model_configs(replay / "models.json")
    cases = load_cases(replay / "blueprints")
    provider = MockProvider.from_file(replay / "responses.json")
    list(run_matrix(models, cases, list(AoKind), provider, out))
    report = aggregate(read_records(out)).to_json()
    expected = json.loads((replay / "expected_report.json").read_text())
    replay_ok = (report == expected and len(responses) >= 40 and len(aos) == 16
                 and {m.value for m in FailureMode} - {"none"} <= modes)

    class Interrupt(BaseException):
        pass

    class Flaky:
        def __init__(self, limit):
            self.limit, self.calls = limit, []

        def complete(self, config, system, user, *, blueprint, ao):
            if self.limit is not None and len(self.calls) >= self.limit:
                raise Interrupt
            self.calls.append((config.model_id, blueprint, ao.code))
            return provider.complete(config, system, user, blueprint=blueprint, ao=ao)

    resume_out = tmp_path / "resume.jsonl"
    first = Flaky(limit=20)
    try:
        list(run_matrix(models, cases, list(AoKind), first, resume_out, concurrency=1))
    except Interrupt:
        pass
    done = {r.key for r in read_records(resume_out)}
    second = Flaky(limit=None)
    list(run_matrix(models, cases, list(AoKind), second, resume_out, concurrency=1))
    keys = [r.key for r in read_records(resume_out)]
    resume_ok = (len(done) == 20 and not set(second.calls) & done
                 and len(second.calls) == len(responses) - 20 and len(keys) == len(set(keys)))
    ok = replay_ok and resume_ok
    record(7, ok, f"{len(responses)} canned replies over {len(aos)} AOs and "
                  f"{len(modes - {'correct'})} failure modes; report "
                  f"{'matches' if replay_ok else 'DIFFERS from'} hand tally; resume after 20 "
                  f"records made {len(second.calls)} calls, "
                  f"{len(set(second.calls) & done)} duplicates")
    assert ok


def _fuzz_corpus(rng: random.Random, n: int) -> list[str]:
    tags = ["count", "satisfiable", "configuration_satisfiable", "valid_configurations",
            "core_features", "dead_features", "false_optional_features", "generalization",
            "feature", "feature_model_analysis", "rationale"]
    alphabet = string.printable + "<>/&\"'  éß中\x00"
    out = []
    for i in range(n):
        kind = i % 3
        if kind == 0:  # random text
            out.append("".join(rng.choice(alphabet) for _ in range(rng.randint(0, 200))))
        elif kind == 1:  # truncated well-formed answers
            ao = rng.choice(list(AoKind))
            res = run_ao(ao, FIXTURES["E1"], Configuration({"GPS"}) if ao is AoKind.AO11
                         else FIXTURES["E1"] if ao is AoKind.AO16 else None)
            full = format_answer(res, "because")
            out.append(full[:rng.randint(0, len(full))])
        else:  # nested garbage
            depth = rng.randint(1, 6)
            s = "".join(rng.choice(["", "x", "12", "true", "\n", "<", ">"]) for _ in range(5))
            for _ in range(depth):
                t = rng.choice(tags)
                opener = rng.choice([f"<{t}>", f"<{t} >", f"<{t}/>", f"<{t}", f"</{t}>"])
                closer = rng.choice([f"</{t}>", "", f"</{rng.choice(tags)}>", "</"])
                s = opener + s + closer
            out.append(s)
    return out


def test_criterion_8_contract_robustness():
    rng = random.Random(808)
    corpus_ = _fuzz_corpus(rng, 3000)
    allowed = (FailureMode.UNPARSEABLE, FailureMode.PARTIAL_TRUNCATED)
    crashes = bad = 0
    for text in corpus_:
        for ao in AoKind:
            try:
                out = parse_answer(ao, text)
            except Exception:  # noqa: BLE001 - any exception counts as a crash
                crashes += 1
                continue
            if not (out in allowed or (out.__class__.__name__ == "AoResult" and out.ao is ao)):
                bad += 1
    ok = crashes == 0 and bad == 0
    record(8, ok, f"{len(corpus_) * len(AoKind)} parses of {len(corpus_)} fuzz strings: "
                  f"{crashes} crashes, {bad} out-of-contract results")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
