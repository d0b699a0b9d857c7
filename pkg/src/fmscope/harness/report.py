"""Aggregate run records into accuracy tables, cost figures and failure tallies."""
from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Iterable

from ..analysis import AoKind
from .contract import FailureMode
from .runner import RunRecord


@dataclass(frozen=True)
class Cell:
    correct: int
    attempted: int

    @property
    def accuracy(self) -> float:
        return 100.0 * self.correct / self.attempted if self.attempted else 0.0


@dataclass(frozen=True)
class ModelCost:
    mean_runtime: float
    prompt_tokens: int
    completion_tokens: int

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens


@dataclass(frozen=True)
class EvalReport:
    by_model_ao: dict[tuple[str, str], Cell] = field(default_factory=dict)
    by_model_blueprint: dict[tuple[str, str], Cell] = field(default_factory=dict)
    by_model: dict[str, Cell] = field(default_factory=dict)
    families: dict[str, str] = field(default_factory=dict)  # model -> family
    family_accuracy: dict[str, float] = field(default_factory=dict)
    costs: dict[str, ModelCost] = field(default_factory=dict)
    failures: dict[tuple[str, str], dict[FailureMode, int]] = field(default_factory=dict)

    @property
    def models(self) -> list[str]:
        return sorted(self.by_model)

    @property
    def aos(self) -> list[str]:
        codes = {ao for _, ao in self.by_model_ao}
        return sorted(codes, key=lambda c: AoKind.parse(c).number)

    @property
    def blueprints(self) -> list[str]:
        return sorted({bp for _, bp in self.by_model_blueprint})

    def accuracy(self, model: str, ao: str) -> float:
        return self.by_model_ao[(model, ao)].accuracy

    def to_json(self) -> dict:
        """Plain-data view used by golden-file comparisons."""
        return {
            "accuracy": {m: {ao: round(self.by_model_ao[(m, ao)].accuracy, 4)
                             for ao in self.aos if (m, ao) in self.by_model_ao}
                         for m in self.models},
            "blueprint_accuracy": {m: {bp: round(self.by_model_blueprint[(m, bp)].accuracy, 4)
                                       for bp in self.blueprints
                                       if (m, bp) in self.by_model_blueprint}
                                   for m in self.models},
            "model_accuracy": {m: round(self.by_model[m].accuracy, 4) for m in self.models},
            "family_accuracy": {f: round(v, 4) for f, v in sorted(self.family_accuracy.items())},
            "failures": {m: {ao: {fm.value: n for fm, n in self.failures[(m, ao)].items()}
                             for ao in self.aos if (m, ao) in self.failures}
                         for m in self.models},
        }


def aggregate(records: Iterable[RunRecord]) -> EvalReport:
    counts: dict[str, dict] = {"ao": defaultdict(lambda: [0, 0]), "bp": defaultdict(lambda: [0, 0]),
                               "model": defaultdict(lambda: [0, 0])}
    failures: dict[tuple[str, str], dict[FailureMode, int]] = {}
    families: dict[str, str] = {}
    runtimes: dict[str, list[float]] = defaultdict(list)
    tokens: dict[str, list[int]] = defaultdict(lambda: [0, 0])
    for r in records:
        hit = int(r.correct)
        for table, key in (("ao", (r.model_id, r.ao.code)), ("bp", (r.model_id, r.blueprint)),
                           ("model", r.model_id)):
            counts[table][key][0] += hit
            counts[table][key][1] += 1
        tally = failures.setdefault((r.model_id, r.ao.code), {m: 0 for m in FailureMode})
        tally[r.failure] += 1
        families[r.model_id] = r.model_family
        runtimes[r.model_id].append(r.exchange.wall_time)
        tokens[r.model_id][0] += r.exchange.prompt_tokens
        tokens[r.model_id][1] += r.exchange.completion_tokens

    def cells(table):
        return {k: Cell(c, n) for k, (c, n) in sorted(counts[table].items())}

    by_model = cells("model")
    per_family: dict[str, list[float]] = defaultdict(list)
    for model, cell in by_model.items():
        per_family[families[model]].append(cell.accuracy)
    return EvalReport(
        by_model_ao=cells("ao"),
        by_model_blueprint=cells("bp"),
        by_model=by_model,
        families=dict(sorted(families.items())),
        family_accuracy={f: fmean(v) for f, v in sorted(per_family.items())},
        costs={m: ModelCost(fmean(runtimes[m]), *tokens[m]) for m in sorted(runtimes)},
        failures=dict(sorted(failures.items())),
    )


def _csv(header: list[str], rows: Iterable[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _pct(cell: Cell | None) -> str:
    return "" if cell is None else f"{cell.accuracy:.1f}"


def ao_table_csv(report: EvalReport) -> str:
    aos = report.aos
    return _csv(["model", *aos, "overall"],
                ([m, *(_pct(report.by_model_ao.get((m, ao))) for ao in aos),
                  _pct(report.by_model[m])] for m in report.models))


def blueprint_table_csv(report: EvalReport) -> str:
    bps = report.blueprints
    return _csv(["model", *bps],
                ([m, *(_pct(report.by_model_blueprint.get((m, bp))) for bp in bps)]
                 for m in report.models))


def failures_csv(report: EvalReport) -> str:
    modes = list(FailureMode)
    return _csv(["model", "ao", "attempted", *(m.value for m in modes)],
                ([m, ao, sum(report.failures[(m, ao)].values()),
                  *(report.failures[(m, ao)][fm] for fm in modes)]
                 for (m, ao) in sorted(report.failures,
                                       key=lambda k: (k[0], AoKind.parse(k[1]).number))))


def cost_csv(report: EvalReport) -> str:
    return _csv(["model", "family", "mean_runtime_s", "prompt_tokens", "completion_tokens",
                 "total_tokens", "accuracy"],
                ([m, report.families[m], f"{c.mean_runtime:.3f}", c.prompt_tokens,
                  c.completion_tokens, c.total_tokens, _pct(report.by_model[m])]
                 for m, c in report.costs.items()))


def summary_text(report: EvalReport) -> str:
    if not report.by_model:
        return "no records\n"
    attempts = sum(c.attempted for c in report.by_model.values())
    lines = [f"records: {attempts}", f"models: {len(report.models)}", ""]
    for m in report.models:
        cell, cost = report.by_model[m], report.costs[m]
        lines.append(f"{m} [{report.families[m]}]: {cell.correct}/{cell.attempted} correct "
                     f"({cell.accuracy:.1f}%), mean runtime {cost.mean_runtime:.3f}s, "
                     f"tokens {cost.total_tokens}")
        totals = {fm: 0 for fm in FailureMode}
        for (model, _), tally in report.failures.items():
            if model == m:
                for fm, n in tally.items():
                    totals[fm] += n
        lines.append("  failures: " + ", ".join(f"{fm.value}={n}" for fm, n in totals.items()
                                                if fm is not FailureMode.NONE))
    lines.append("")
    for fam, acc in report.family_accuracy.items():
        lines.append(f"family {fam}: {acc:.1f}%")
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, directory: str | Path) -> list[Path]:
    """Write all CSV tables and the summary into ``directory``; returns the paths."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    files = {"accuracy_by_ao.csv": ao_table_csv(report),
             "accuracy_by_blueprint.csv": blueprint_table_csv(report),
             "failures.csv": failures_csv(report),
             "cost.csv": cost_csv(report),
             "summary.txt": summary_text(report)}
    paths = []
    for name, text in files.items():
        p = out / name
        p.write_text(text, encoding="utf-8")
        paths.append(p)
    return paths
