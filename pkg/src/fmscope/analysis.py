"""The sixteen analysis operations (AO1-AO16) over a :class:`FeatureModel`.

AO1-AO9 are tree/syntax walks; AO10-AO16 go through the CNF solver.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

from . import solver
from .model import (And, Completeness, Configuration, FeatureModel, FmError, Implies, Not,
                    RelKind, Var, ensure_valid, evaluate, map_vars, semantics)


class AoShape(enum.Enum):
    COUNT = "count"
    BOOL = "bool"
    BIG_COUNT = "big_count"
    FEATURE_SET = "feature_set"


class AoKind(enum.Enum):
    AO1 = ("AO1", "#Features", AoShape.COUNT)
    AO2 = ("AO2", "#Leaf Features", AoShape.COUNT)
    AO3 = ("AO3", "Tree Depth", AoShape.COUNT)
    AO4 = ("AO4", "#Mandatory Features", AoShape.COUNT)
    AO5 = ("AO5", "#Optional Features", AoShape.COUNT)
    AO6 = ("AO6", "#Or Groups", AoShape.COUNT)
    AO7 = ("AO7", "#Alternative Groups", AoShape.COUNT)
    AO8 = ("AO8", "#Requires", AoShape.COUNT)
    AO9 = ("AO9", "#Excludes", AoShape.COUNT)
    AO10 = ("AO10", "Satisfiable/Void", AoShape.BOOL)
    AO11 = ("AO11", "Configuration Satisfiable", AoShape.BOOL)
    AO12 = ("AO12", "#Valid Configurations", AoShape.BIG_COUNT)
    AO13 = ("AO13", "Core Features", AoShape.FEATURE_SET)
    AO14 = ("AO14", "Dead Features", AoShape.FEATURE_SET)
    AO15 = ("AO15", "False Optional Features", AoShape.FEATURE_SET)
    AO16 = ("AO16", "Generalization", AoShape.BOOL)

    def __init__(self, code: str, title: str, shape: AoShape):
        self.code = code
        self.title = title
        self.shape = shape

    @property
    def number(self) -> int:
        return int(self.code[2:])

    @property
    def solver_based(self) -> bool:
        return self.number >= 10

    @property
    def needs_config(self) -> bool:
        return self is AoKind.AO11

    @property
    def needs_pair(self) -> bool:
        return self is AoKind.AO16

    @classmethod
    def parse(cls, code: str) -> "AoKind":
        try:
            return cls[code.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown analysis operation {code!r}") from None

    @classmethod
    def parse_list(cls, codes: str) -> list["AoKind"]:
        if codes.strip().lower() == "all":
            return list(cls)
        return [cls.parse(c) for c in codes.split(",") if c.strip()]


Value = Union[int, bool, frozenset, None]


@dataclass(frozen=True)
class AoResult:
    """Answer to one AO. ``value`` is None only for an uncomputed AO12."""

    ao: AoKind
    value: Value
    void: bool = False

    @property
    def computed(self) -> bool:
        return self.value is not None

    def __post_init__(self):
        shape, v = self.ao.shape, self.value
        ok = {
            AoShape.COUNT: isinstance(v, int) and not isinstance(v, bool) and v >= 0,
            AoShape.BIG_COUNT: v is None or (isinstance(v, int) and not isinstance(v, bool) and v >= 0),
            AoShape.BOOL: isinstance(v, bool),
            AoShape.FEATURE_SET: isinstance(v, frozenset),
        }[shape]
        if not ok:
            raise TypeError(f"{self.ao.code} expects a {shape.value} result, got {v!r}")

    def text(self) -> str:
        """Single-line rendering used by the CLI."""
        if self.value is None:
            return "not-computed"
        if isinstance(self.value, bool):
            return "true" if self.value else "false"
        if isinstance(self.value, frozenset):
            return ",".join(sorted(self.value))
        return str(self.value)

    def to_json(self):
        if isinstance(self.value, frozenset):
            return sorted(self.value)
        if self.ao.shape is AoShape.BIG_COUNT and self.value is not None:
            return str(self.value)
        return self.value

    @classmethod
    def from_json(cls, ao: AoKind, data, void: bool = False) -> "AoResult":
        if ao.shape is AoShape.FEATURE_SET:
            return cls(ao, frozenset(data), void)
        if ao.shape is AoShape.BIG_COUNT and data is not None:
            return cls(ao, int(data), void)
        return cls(ao, data, void)


class AnalysisError(FmError):
    pass


# ---------------------------------------------------------------------------
# solver-free operations

def ao1_features(fm: FeatureModel) -> int:
    return len(fm.features)


def ao2_leaf_features(fm: FeatureModel) -> int:
    parents = {r.parent for r in fm.relationships}
    return sum(1 for f in fm.features if f.id not in parents)


def ao3_tree_depth(fm: FeatureModel) -> int:
    depth = {fm.root: 0}
    for f in fm.preorder():
        for c in fm.children_of(f):
            depth[c] = depth[f] + 1
    return max(depth.values())


def ao4_mandatory(fm: FeatureModel) -> int:
    return sum(len(r.children) for r in fm.relationships if r.kind is RelKind.MANDATORY)


def ao5_optional(fm: FeatureModel) -> int:
    return sum(len(r.children) for r in fm.relationships if r.kind is RelKind.OPTIONAL)


def ao6_or_groups(fm: FeatureModel) -> int:
    return sum(1 for r in fm.relationships if r.kind is RelKind.OR)


def ao7_alt_groups(fm: FeatureModel) -> int:
    return sum(1 for r in fm.relationships if r.kind is RelKind.ALTERNATIVE)


def is_requires(c) -> bool:
    return isinstance(c, Implies) and isinstance(c.left, Var) and isinstance(c.right, Var)


def is_excludes(c) -> bool:
    if isinstance(c, Not) and isinstance(c.operand, And):
        ops = c.operand.operands
        return len(ops) == 2 and all(isinstance(o, Var) for o in ops)
    return (isinstance(c, Implies) and isinstance(c.left, Var)
            and isinstance(c.right, Not) and isinstance(c.right.operand, Var))


def ao8_requires(fm: FeatureModel) -> int:
    return sum(1 for c in fm.constraints if is_requires(c))


def ao9_excludes(fm: FeatureModel) -> int:
    return sum(1 for c in fm.constraints if is_excludes(c))


# ---------------------------------------------------------------------------
# solver-based operations

class Oracle:
    """Compiled model shared by the solver-based operations."""

    def __init__(self, fm: FeatureModel):
        self.fm = ensure_valid(fm)
        self.formula = semantics(fm)
        self.cnf = solver.compile_cnf(self.formula, len(fm.features))
        self._void: bool | None = None

    def sat(self, assumptions=()) -> solver.SolveOutcome:
        return solver.sat(self.cnf, assumptions)

    @property
    def void(self) -> bool:
        if self._void is None:
            self._void = not self.sat().satisfiable
        return self._void

    def features_never(self, value: bool) -> frozenset[str]:
        """Features that cannot take ``value`` in any configuration.

        A witness in which a feature takes ``value`` settles that feature
        without a dedicated solver call.
        """
        fm = self.fm
        settled: set[int] = set()
        out = set()
        for fid in range(len(fm.features)):
            if fid in settled:
                continue
            res = self.sat([solver.feature_lit(fid, value)])
            if res.satisfiable:
                settled.update(i for i in range(len(fm.features))
                               if res.value(i + 1) == value)
            else:
                out.add(fm.name_of(fid))
        return frozenset(out)


def _oracle(fm_or_oracle) -> Oracle:
    return fm_or_oracle if isinstance(fm_or_oracle, Oracle) else Oracle(fm_or_oracle)


def ao10_satisfiable(fm) -> bool:
    return not _oracle(fm).void


def ao11_config_satisfiable(fm, config: Configuration) -> bool:
    o = _oracle(fm)
    model = o.fm
    unknown = sorted(n for n in config.selected | config.deselected if not model.has_feature(n))
    if unknown:
        raise AnalysisError(f"configuration names unknown features: {unknown}")
    if config.completeness is Completeness.FULL:
        missing = set(model.names) - config.selected - config.deselected
        if missing:
            raise AnalysisError(f"full configuration leaves features unassigned: {sorted(missing)}")
        chosen = {model.id_of(n) for n in config.selected}
        return evaluate(o.formula, lambda i: i in chosen)
    lits = [solver.feature_lit(model.id_of(n)) for n in sorted(config.selected)]
    lits += [solver.feature_lit(model.id_of(n), False) for n in sorted(config.deselected)]
    return o.sat(lits).satisfiable


def ao12_count_configurations(fm, node_budget: int = solver.DEFAULT_NODE_BUDGET) -> int | None:
    """Exact configuration count, or None when the counting budget runs out."""
    try:
        return solver.count_models(_oracle(fm).cnf, node_budget)
    except solver.BudgetExhausted:
        return None


def ao13_core_features(fm) -> frozenset[str]:
    return _oracle(fm).features_never(False)


def ao14_dead_features(fm) -> frozenset[str]:
    return _oracle(fm).features_never(True)


def ao15_false_optional(fm) -> frozenset[str]:
    """Non-mandatory features present in every configuration that has their parent.

    Features whose parent is dead are excluded on satisfiable models: they
    occur in no configuration, so calling them false-optional would be vacuous.
    On a void model every candidate qualifies vacuously.
    """
    o = _oracle(fm)
    model = o.fm
    void = o.void
    out = set()
    for child, rel in sorted(model.parent_of().items()):
        if rel.kind is RelKind.MANDATORY:
            continue
        p = solver.feature_lit(rel.parent)
        if void:
            out.add(model.name_of(child))
            continue
        if not o.sat([p]).satisfiable:
            continue
        if not o.sat([p, solver.feature_lit(child, False)]).satisfiable:
            out.add(model.name_of(child))
    return frozenset(out)


def ao16_generalization(general: FeatureModel, special: FeatureModel) -> bool:
    """True iff every configuration of ``special`` is a configuration of ``general``."""
    ensure_valid(general)
    ensure_valid(special)
    if set(general.names) != set(special.names):
        diff = sorted(set(general.names) ^ set(special.names))
        raise AnalysisError(f"generalization needs identical feature sets; differing: {diff}")
    aligned = map_vars(semantics(general), lambda i: special.id_of(general.name_of(i)))
    query = And((semantics(special), Not(aligned)))
    cnf = solver.compile_cnf(query, len(special.features))
    return not solver.sat(cnf).satisfiable


# ---------------------------------------------------------------------------
# dispatch

_STRUCTURAL = {
    AoKind.AO1: ao1_features,
    AoKind.AO2: ao2_leaf_features,
    AoKind.AO3: ao3_tree_depth,
    AoKind.AO4: ao4_mandatory,
    AoKind.AO5: ao5_optional,
    AoKind.AO6: ao6_or_groups,
    AoKind.AO7: ao7_alt_groups,
    AoKind.AO8: ao8_requires,
    AoKind.AO9: ao9_excludes,
}


def run_ao(kind: AoKind, fm, extra=None, node_budget: int = solver.DEFAULT_NODE_BUDGET) -> AoResult:
    """Run one operation. ``extra`` is a Configuration for AO11, the special model for AO16."""
    if kind.needs_config:
        if not isinstance(extra, Configuration):
            raise AnalysisError(f"{kind.code} requires a configuration")
    elif kind.needs_pair:
        if not isinstance(extra, FeatureModel):
            raise AnalysisError(f"{kind.code} requires a second feature model")
    elif extra is not None:
        raise AnalysisError(f"{kind.code} takes no extra input")
    if kind in _STRUCTURAL:
        model = fm.fm if isinstance(fm, Oracle) else ensure_valid(fm)
        return AoResult(kind, _STRUCTURAL[kind](model))
    if kind is AoKind.AO16:
        model = fm.fm if isinstance(fm, Oracle) else fm
        return AoResult(kind, ao16_generalization(model, extra))
    o = _oracle(fm)
    if kind is AoKind.AO10:
        return AoResult(kind, not o.void)
    if kind is AoKind.AO11:
        return AoResult(kind, ao11_config_satisfiable(o, extra))
    if kind is AoKind.AO12:
        return AoResult(kind, ao12_count_configurations(o, node_budget))
    fn = {AoKind.AO13: ao13_core_features, AoKind.AO14: ao14_dead_features,
          AoKind.AO15: ao15_false_optional}[kind]
    return AoResult(kind, fn(o), void=o.void)


def run_all(fm: FeatureModel, config: Configuration | None = None,
            special: FeatureModel | None = None, kinds=None) -> dict[AoKind, AoResult]:
    """Run ``kinds`` (default all 16); AO11/AO16 are skipped when their input is missing."""
    o = Oracle(fm)
    out = {}
    for kind in kinds or list(AoKind):
        if kind.needs_config and config is None or kind.needs_pair and special is None:
            continue
        extra = config if kind.needs_config else special if kind.needs_pair else None
        out[kind] = run_ao(kind, o, extra)
    return out
