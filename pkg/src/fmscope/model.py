"""Feature-model IR, structural validation and propositional semantics.

A :class:`FeatureModel` is a rooted feature tree (typed relationships) plus
cross-tree constraint formulas. Every other module consumes this IR.
"""
from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, Union


class FmError(Exception):
    """Base class for domain errors raised by this package."""


class InvalidModelError(FmError):
    def __init__(self, violations: Sequence["Violation"]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


# ---------------------------------------------------------------------------
# constraint formulas

@dataclass(frozen=True)
class Var:
    feature: int


@dataclass(frozen=True)
class Not:
    operand: "Formula"


@dataclass(frozen=True)
class And:
    operands: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    operands: tuple["Formula", ...]


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


Formula = Union[Var, Not, And, Or, Implies]


def conj(parts: Sequence[Formula]) -> Formula:
    return parts[0] if len(parts) == 1 else And(tuple(parts))


def disj(parts: Sequence[Formula]) -> Formula:
    return parts[0] if len(parts) == 1 else Or(tuple(parts))


def requires(a: int, b: int) -> Formula:
    return Implies(Var(a), Var(b))


def excludes(a: int, b: int) -> Formula:
    return Not(And((Var(a), Var(b))))


def formula_vars(f: Formula) -> Iterator[int]:
    if isinstance(f, Var):
        yield f.feature
    elif isinstance(f, Not):
        yield from formula_vars(f.operand)
    elif isinstance(f, (And, Or)):
        for op in f.operands:
            yield from formula_vars(op)
    elif isinstance(f, Implies):
        yield from formula_vars(f.left)
        yield from formula_vars(f.right)
    else:
        raise TypeError(f"not a formula node: {f!r}")


def evaluate(f: Formula, value) -> bool:
    """Evaluate ``f`` where ``value(feature_id)`` gives each variable's truth."""
    if isinstance(f, Var):
        return bool(value(f.feature))
    if isinstance(f, Not):
        return not evaluate(f.operand, value)
    if isinstance(f, And):
        return all(evaluate(op, value) for op in f.operands)
    if isinstance(f, Or):
        return any(evaluate(op, value) for op in f.operands)
    if isinstance(f, Implies):
        return (not evaluate(f.left, value)) or evaluate(f.right, value)
    raise TypeError(f"not a formula node: {f!r}")


def map_vars(f: Formula, mapping) -> Formula:
    """Rebuild ``f`` with every variable id replaced by ``mapping(id)``."""
    if isinstance(f, Var):
        return Var(mapping(f.feature))
    if isinstance(f, Not):
        return Not(map_vars(f.operand, mapping))
    if isinstance(f, And):
        return And(tuple(map_vars(op, mapping) for op in f.operands))
    if isinstance(f, Or):
        return Or(tuple(map_vars(op, mapping) for op in f.operands))
    if isinstance(f, Implies):
        return Implies(map_vars(f.left, mapping), map_vars(f.right, mapping))
    raise TypeError(f"not a formula node: {f!r}")


def _formula_shape_errors(f: Formula) -> Iterator[str]:
    if isinstance(f, Var):
        return
    if isinstance(f, Not):
        yield from _formula_shape_errors(f.operand)
    elif isinstance(f, (And, Or)):
        if len(f.operands) < 2:
            yield f"{type(f).__name__} needs at least 2 operands"
        for op in f.operands:
            yield from _formula_shape_errors(op)
    elif isinstance(f, Implies):
        yield from _formula_shape_errors(f.left)
        yield from _formula_shape_errors(f.right)
    else:
        yield f"unknown formula node {type(f).__name__}"


# ---------------------------------------------------------------------------
# feature tree

class RelKind(enum.Enum):
    MANDATORY = "mandatory"
    OPTIONAL = "optional"
    OR = "or"
    ALTERNATIVE = "alternative"

    @property
    def is_group(self) -> bool:
        return self in (RelKind.OR, RelKind.ALTERNATIVE)

    def flipped(self) -> "RelKind":
        return _FLIP[self]


_FLIP = {
    RelKind.MANDATORY: RelKind.OPTIONAL,
    RelKind.OPTIONAL: RelKind.MANDATORY,
    RelKind.OR: RelKind.ALTERNATIVE,
    RelKind.ALTERNATIVE: RelKind.OR,
}

_NAME_RE = re.compile(r"^[\w\- ]+$")


def valid_name(name: str) -> bool:
    return bool(name) and name == name.strip() and _NAME_RE.match(name) is not None


@dataclass(frozen=True)
class Feature:
    id: int
    name: str


@dataclass(frozen=True)
class Relationship:
    parent: int
    kind: RelKind
    children: tuple[int, ...]


@dataclass(frozen=True)
class Violation:
    rule: str
    subject: str

    def __str__(self) -> str:
        return f"{self.rule}: {self.subject}"


@dataclass(frozen=True)
class FeatureModel:
    """Immutable feature model.

    Feature ids are dense indices into ``features`` in insertion order.
    Construction does not validate; call :func:`validate_model`.
    """

    features: tuple[Feature, ...]
    root: int
    relationships: tuple[Relationship, ...] = ()
    constraints: tuple[Formula, ...] = ()
    name: str = ""
    _by_name: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_name", {f.name: f.id for f in self.features})

    @classmethod
    def build(cls, names: Sequence[str], root: str,
              relationships: Iterable[tuple[str, RelKind, Sequence[str]]] = (),
              constraints: Iterable[Formula] = (), name: str = "") -> "FeatureModel":
        """Convenience constructor working on names rather than ids.

        ``constraints`` must already reference ids (position in ``names``).
        """
        idx = {n: i for i, n in enumerate(names)}
        rels = tuple(Relationship(idx[p], k, tuple(idx[c] for c in cs))
                     for p, k, cs in relationships)
        return cls(tuple(Feature(i, n) for i, n in enumerate(names)), idx[root],
                   rels, tuple(constraints), name)

    def __len__(self) -> int:
        return len(self.features)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def name_of(self, fid: int) -> str:
        return self.features[fid].name

    def id_of(self, name: str) -> int:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"unknown feature {name!r}") from None

    def has_feature(self, name: str) -> bool:
        return name in self._by_name

    def parent_of(self) -> dict[int, Relationship]:
        """Map child id -> the relationship it hangs from (first one wins)."""
        out: dict[int, Relationship] = {}
        for rel in self.relationships:
            for c in rel.children:
                out.setdefault(c, rel)
        return out

    def relationships_of(self, parent: int) -> list[Relationship]:
        return [r for r in self.relationships if r.parent == parent]

    def children_of(self, parent: int) -> list[int]:
        return [c for r in self.relationships_of(parent) for c in r.children]

    def preorder(self) -> list[int]:
        """Feature ids reachable from the root, depth-first pre-order."""
        out, stack, seen = [], [self.root], set()
        while stack:
            f = stack.pop()
            if f in seen:
                continue
            seen.add(f)
            out.append(f)
            stack.extend(reversed(self.children_of(f)))
        return out

    def replace(self, **changes) -> "FeatureModel":
        fields = dict(features=self.features, root=self.root,
                      relationships=self.relationships,
                      constraints=self.constraints, name=self.name)
        fields.update(changes)
        return FeatureModel(**fields)


class Completeness(enum.Enum):
    FULL = "full"
    PARTIAL = "partial"


@dataclass(frozen=True)
class Configuration:
    """Selected/deselected feature *names*; partial configs leave features free."""

    selected: frozenset[str]
    deselected: frozenset[str] = frozenset()
    completeness: Completeness = Completeness.PARTIAL

    def __post_init__(self):
        object.__setattr__(self, "selected", frozenset(self.selected))
        object.__setattr__(self, "deselected", frozenset(self.deselected))
        overlap = self.selected & self.deselected
        if overlap:
            raise ValueError(f"features both selected and deselected: {sorted(overlap)}")

    @classmethod
    def full(cls, fm: FeatureModel, selected: Iterable[str]) -> "Configuration":
        sel = frozenset(selected)
        return cls(sel, frozenset(fm.names) - sel, Completeness.FULL)

    def to_json(self) -> dict:
        return {"selected": sorted(self.selected), "deselected": sorted(self.deselected),
                "completeness": self.completeness.value}

    @classmethod
    def from_json(cls, data: Mapping) -> "Configuration":
        return cls(frozenset(data.get("selected", ())),
                   frozenset(data.get("deselected", ())),
                   Completeness(data.get("completeness", "partial")))


# ---------------------------------------------------------------------------
# validation and semantics

def validate_model(fm: FeatureModel) -> list[Violation]:
    out: list[Violation] = []
    n = len(fm.features)
    for i, f in enumerate(fm.features):
        if f.id != i:
            out.append(Violation("feature id out of order", f.name))
        if not valid_name(f.name):
            out.append(Violation("invalid feature name", repr(f.name)))
    seen: set[str] = set()
    for f in fm.features:
        if f.name in seen:
            out.append(Violation("duplicate feature name", f.name))
        seen.add(f.name)
    if not 0 <= fm.root < n:
        out.append(Violation("root is not a feature", str(fm.root)))
        return out

    def label(fid: int) -> str:
        return fm.features[fid].name if 0 <= fid < n else f"#{fid}"

    parents: dict[int, list[int]] = {}
    for rel in fm.relationships:
        desc = f"{label(rel.parent)} {rel.kind.value} {[label(c) for c in rel.children]}"
        ids = (rel.parent, *rel.children)
        if any(not 0 <= i < n for i in ids):
            out.append(Violation("unknown feature in relationship", desc))
            continue
        if rel.kind.is_group and len(rel.children) < 2:
            out.append(Violation("group needs at least 2 children", desc))
        if not rel.kind.is_group and len(rel.children) != 1:
            out.append(Violation("mandatory/optional needs exactly 1 child", desc))
        if rel.parent in rel.children:
            out.append(Violation("feature is its own child", label(rel.parent)))
        if len(set(rel.children)) != len(rel.children):
            out.append(Violation("repeated child in relationship", desc))
        for c in rel.children:
            parents.setdefault(c, []).append(rel.parent)
    for c, ps in parents.items():
        if len(ps) > 1:
            out.append(Violation("multiple parents", label(c)))
    if fm.root in parents:
        out.append(Violation("root has a parent", label(fm.root)))
    reachable = set(fm.preorder())
    for f in fm.features:
        if f.id == fm.root or f.id in reachable:
            continue
        if f.id not in parents:
            out.append(Violation("orphan feature", f.name))
        else:
            out.append(Violation("not reachable from root (cycle)", f.name))
    for k, c in enumerate(fm.constraints):
        for msg in _formula_shape_errors(c):
            out.append(Violation("malformed constraint", f"#{k}: {msg}"))
        try:
            bad = [v for v in formula_vars(c) if not 0 <= v < n]
        except TypeError as exc:
            out.append(Violation("malformed constraint", f"#{k}: {exc}"))
            continue
        if bad:
            out.append(Violation("unknown feature in constraint", f"#{k}: ids {bad}"))
    return out


def ensure_valid(fm: FeatureModel) -> FeatureModel:
    violations = validate_model(fm)
    if violations:
        raise InvalidModelError(violations)
    return fm


def relationship_formulas(rel: Relationship) -> list[Formula]:
    p = Var(rel.parent)
    kids = [Var(c) for c in rel.children]
    if rel.kind is RelKind.MANDATORY:
        return [Implies(kids[0], p), Implies(p, kids[0])]
    if rel.kind is RelKind.OPTIONAL:
        return [Implies(kids[0], p)]
    out: list[Formula] = [Implies(k, p) for k in kids]
    out.append(Implies(p, Or(tuple(kids))))
    if rel.kind is RelKind.ALTERNATIVE:
        out.extend(excludes(a.feature, b.feature) for a, b in itertools.combinations(kids, 2))
    return out


def semantics(fm: FeatureModel) -> Formula:
    """Propositional encoding of ``fm`` as one conjunction over feature ids."""
    ensure_valid(fm)
    parts: list[Formula] = [Var(fm.root)]
    for rel in fm.relationships:
        parts.extend(relationship_formulas(rel))
    parts.extend(fm.constraints)
    return conj(parts)


MAX_ENUMERATION_FEATURES = 25


class EnumerationLimitError(FmError):
    pass


def enumerate_configurations(fm: FeatureModel, limit: int = 1 << 20,
                             truncate: bool = False) -> list[frozenset[str]]:
    """Brute-force every total assignment and keep those satisfying the model.

    Assignments are visited in increasing order of the bit vector whose bit
    ``i`` is feature ``i`` (so feature 0 is the least significant bit).
    Returns the selected-name sets. Raises if more than ``limit`` configs
    exist, unless ``truncate`` is set.
    """
    if limit < 1:
        raise ValueError("limit must be positive")
    n = len(fm.features)
    if n > MAX_ENUMERATION_FEATURES:
        raise EnumerationLimitError(f"{n} features exceeds the enumeration guard "
                                    f"of {MAX_ENUMERATION_FEATURES}")
    formula = semantics(fm)
    names = fm.names
    out: list[frozenset[str]] = []
    for bits in range(1 << n):
        if not evaluate(formula, lambda i: bits >> i & 1):
            continue
        if len(out) == limit:
            if truncate:
                break
            raise EnumerationLimitError(f"more than {limit} configurations")
        out.append(frozenset(names[i] for i in range(n) if bits >> i & 1))
    return out


def structure_key(fm: FeatureModel):
    """Name-based structural fingerprint; equal keys mean equal up to id relabeling."""
    nm = fm.name_of
    rels = sorted((nm(r.parent), r.kind.value, tuple(nm(c) for c in r.children))
                  for r in fm.relationships)
    cons = tuple(map_vars(c, nm) for c in fm.constraints)
    return (nm(fm.root), frozenset(fm.names), tuple(rels), cons)


def isomorphic(a: FeatureModel, b: FeatureModel) -> bool:
    return structure_key(a) == structure_key(b)
