"""CNF compilation, SAT decision and exact model counting.

Variables are DIMACS-style positive integers. Feature ``i`` of a model is
variable ``i + 1``; Tseitin auxiliaries follow the feature block.
"""
from __future__ import annotations

import os
import shlex
import subprocess
import sys
import tempfile
from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import And, FmError, Formula, Implies, Not, Or, Var

Clause = tuple[int, ...]


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple[Clause, ...]
    num_features: int

    @property
    def feature_vars(self) -> range:
        return range(1, self.num_features + 1)


@dataclass(frozen=True)
class SolveOutcome:
    satisfiable: bool
    witness: tuple[int, ...] | None = None  # signed literal for every variable

    def value(self, var: int) -> bool:
        if self.witness is None:
            raise ValueError("no witness for an unsatisfiable outcome")
        return self.witness[var - 1] > 0

    def selected_features(self, cnf: CnfFormula) -> list[int]:
        """0-based feature ids set true in the witness."""
        return [v - 1 for v in cnf.feature_vars if self.value(v)]


class BudgetExhausted(FmError):
    """Model counting hit its node budget; no count is available."""


class ExternalSolverError(FmError):
    pass


def feature_lit(fid: int, positive: bool = True) -> int:
    return fid + 1 if positive else -(fid + 1)


# ---------------------------------------------------------------------------
# Tseitin

class _Encoder:
    def __init__(self, num_features: int):
        self.num_vars = num_features
        self.clauses: list[Clause] = []
        self._defs: dict[Formula, int] = {}

    def add(self, lits: Iterable[int]) -> None:
        clause = tuple(dict.fromkeys(lits))
        if any(-l in clause for l in clause):
            return
        self.clauses.append(clause)

    def lit(self, node: Formula) -> int:
        """Literal equivalent to ``node``; auxiliaries are fully defined (both polarities)."""
        if isinstance(node, Var):
            return node.feature + 1
        if isinstance(node, Not):
            return -self.lit(node.operand)
        if node in self._defs:
            return self._defs[node]
        if isinstance(node, Implies):
            kids = [-self.lit(node.left), self.lit(node.right)]
            is_and = False
        elif isinstance(node, (And, Or)):
            kids = [self.lit(op) for op in node.operands]
            is_and = isinstance(node, And)
        else:
            raise TypeError(f"not a formula node: {node!r}")
        self.num_vars += 1
        aux = self.num_vars
        self._defs[node] = aux
        if is_and:
            for k in kids:
                self.add((-aux, k))
            self.add([aux] + [-k for k in kids])
        else:
            self.add([-aux] + kids)
            for k in kids:
                self.add((aux, -k))
        return aux

    def require(self, node: Formula, positive: bool = True) -> None:
        """Add clauses forcing ``node`` (or its negation) to hold."""
        if isinstance(node, Not):
            self.require(node.operand, not positive)
        elif isinstance(node, Var):
            self.add((self.lit(node) if positive else -self.lit(node),))
        elif isinstance(node, And) and positive or isinstance(node, Or) and not positive:
            for op in node.operands:
                self.require(op, positive)
        elif isinstance(node, Or):
            self.add(self.lit(op) for op in node.operands)
        elif isinstance(node, And):
            self.add(-self.lit(op) for op in node.operands)
        elif isinstance(node, Implies):
            if positive:
                self.add((-self.lit(node.left), self.lit(node.right)))
            else:
                self.require(node.left, True)
                self.require(node.right, False)
        else:
            raise TypeError(f"not a formula node: {node!r}")


def compile_cnf(formula: Formula, num_features: int) -> CnfFormula:
    """Equisatisfiable CNF whose auxiliaries are functions of the feature variables.

    Because every auxiliary is defined in both directions, the number of
    total models equals the number of models projected on the features.
    """
    enc = _Encoder(num_features)
    enc.require(formula)
    return CnfFormula(enc.num_vars, tuple(enc.clauses), num_features)


def conjoin(cnf: CnfFormula, extra: Iterable[Sequence[int]]) -> CnfFormula:
    return CnfFormula(cnf.num_vars, cnf.clauses + tuple(tuple(c) for c in extra), cnf.num_features)


# ---------------------------------------------------------------------------
# CDCL decision procedure

class _Cdcl:
    """Conflict-driven search, 1-UIP learning, no restarts.

    Branching is fixed: lowest-index unassigned variable, true first. With
    no randomness and no activity heuristics, outcomes and witnesses are
    fully determined by the input.
    """

    def __init__(self, cnf: CnfFormula):
        n = cnf.num_vars
        self.n = n
        self.val = [0] * (n + 1)
        self.level = [0] * (n + 1)
        self.reason: list[list[int] | None] = [None] * (n + 1)
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.hint = 1
        self.watches: dict[int, list[list[int]]] = {}
        self.units: list[int] = []
        self.empty = False
        for c in cnf.clauses:
            if not c:
                self.empty = True
            elif len(c) == 1:
                self.units.append(c[0])
            else:
                self._watch(list(c))

    def _watch(self, c: list[int]) -> None:
        self.watches.setdefault(c[0], []).append(c)
        self.watches.setdefault(c[1], []).append(c)

    def value(self, lit: int) -> int:
        v = self.val[abs(lit)]
        return v if lit > 0 else -v

    def assign(self, lit: int, reason) -> None:
        var = abs(lit)
        self.val[var] = 1 if lit > 0 else -1
        self.level[var] = len(self.trail_lim)
        self.reason[var] = reason
        self.trail.append(lit)

    def enqueue(self, lit: int) -> bool:
        v = self.value(lit)
        if v == 0:
            self.assign(lit, None)
        return v != -1

    def propagate(self):
        while self.qhead < len(self.trail):
            false_lit = -self.trail[self.qhead]
            self.qhead += 1
            ws = self.watches.get(false_lit)
            if not ws:
                continue
            keep = []
            for idx, c in enumerate(ws):
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                if self.value(c[0]) == 1:
                    keep.append(c)
                    continue
                for k in range(2, len(c)):
                    if self.value(c[k]) != -1:
                        c[1], c[k] = c[k], c[1]
                        self.watches.setdefault(c[1], []).append(c)
                        break
                else:
                    keep.append(c)
                    if self.value(c[0]) == -1:
                        keep.extend(ws[idx + 1:])
                        self.watches[false_lit] = keep
                        return c
                    self.assign(c[0], c)
            self.watches[false_lit] = keep
        return None

    def analyze(self, conflict: list[int]) -> tuple[list[int], int]:
        seen = set()
        learnt = [0]
        counter = 0
        p = None
        idx = len(self.trail) - 1
        clause = conflict
        current = len(self.trail_lim)
        while True:
            for q in clause:
                if q == p:
                    continue
                v = abs(q)
                if v not in seen and self.level[v] > 0:
                    seen.add(v)
                    if self.level[v] >= current:
                        counter += 1
                    else:
                        learnt.append(q)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            seen.discard(abs(p))
            counter -= 1
            if counter == 0:
                break
            clause = self.reason[abs(p)]
        learnt[0] = -p
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda i: self.level[abs(learnt[i])])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, self.level[abs(learnt[1])]

    def backtrack(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        start = self.trail_lim[lvl]
        for lit in self.trail[start:]:
            var = abs(lit)
            self.val[var] = 0
            self.reason[var] = None
            if var < self.hint:
                self.hint = var
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = start

    def pick(self) -> int:
        v = self.hint
        while v <= self.n and self.val[v] != 0:
            v += 1
        self.hint = v
        return v

    def solve(self, assumptions: Sequence[int]) -> SolveOutcome:
        if self.empty:
            return SolveOutcome(False)
        for lit in (*self.units, *assumptions):
            if not self.enqueue(lit):
                return SolveOutcome(False)
        if self.propagate() is not None:
            return SolveOutcome(False)
        while True:
            v = self.pick()
            if v > self.n:
                witness = tuple(i if self.val[i] > 0 else -i for i in range(1, self.n + 1))
                return SolveOutcome(True, witness)
            self.trail_lim.append(len(self.trail))
            self.assign(v, None)
            while (conflict := self.propagate()) is not None:
                if not self.trail_lim:
                    return SolveOutcome(False)
                learnt, lvl = self.analyze(conflict)
                self.backtrack(lvl)
                if len(learnt) == 1:
                    self.assign(learnt[0], None)
                else:
                    self._watch(learnt)
                    self.assign(learnt[0], learnt)


def sat(cnf: CnfFormula, assumptions: Sequence[int] = ()) -> SolveOutcome:
    for lit in assumptions:
        if not 0 < abs(lit) <= cnf.num_vars:
            raise ValueError(f"assumption literal {lit} out of range")
    out = _Cdcl(cnf).solve(list(assumptions))
    if out.satisfiable:
        check_witness(cnf, out.witness)
    return out


def check_witness(cnf: CnfFormula, witness: Sequence[int]) -> None:
    truth = {l for l in witness}
    for c in cnf.clauses:
        if not any(l in truth for l in c):
            raise AssertionError(f"witness violates clause {c}")


# ---------------------------------------------------------------------------
# counting

DEFAULT_NODE_BUDGET = 2_000_000


class _Counter:
    def __init__(self, budget: int):
        self.budget = budget
        self.nodes = 0
        self.cache: dict[tuple, int] = {}

    def count(self, clauses: list[Clause], free: set[int]) -> int:
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetExhausted(f"model counting exceeded {self.budget} nodes")
        clauses, free = _propagate_units(clauses, free)
        if clauses is None:
            return 0
        if not clauses:
            return 1 << len(free)
        comps = _components(clauses)
        used = set().union(*(vs for _, vs in comps))
        total = 1 << len(free - used)
        for comp, vs in comps:
            key = tuple(sorted(comp))
            cached = self.cache.get(key)
            if cached is None:
                v = min(vs)
                cached = (self.count(comp + [(v,)], set(vs))
                          + self.count(comp + [(-v,)], set(vs)))
                self.cache[key] = cached
            if cached == 0:
                return 0
            total *= cached
        return total


def _propagate_units(clauses: list[Clause], free: set[int]):
    free = set(free)
    while True:
        unit = next((c[0] for c in clauses if len(c) == 1), None)
        if unit is None:
            return clauses, free
        free.discard(abs(unit))
        out = []
        for c in clauses:
            if unit in c:
                continue
            if -unit in c:
                c = tuple(l for l in c if l != -unit)
                if not c:
                    return None, free
            out.append(c)
        clauses = out


def _components(clauses: list[Clause]) -> list[tuple[list[Clause], set[int]]]:
    parent: dict[int, int] = {}

    def find(x: int) -> int:
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for c in clauses:
        r = find(abs(c[0]))
        for l in c[1:]:
            s = find(abs(l))
            if s != r:
                parent[s] = r
    groups: dict[int, tuple[list[Clause], set[int]]] = {}
    for c in clauses:
        cs, vs = groups.setdefault(find(abs(c[0])), ([], set()))
        cs.append(tuple(sorted(c)))
        vs.update(abs(l) for l in c)
    return [groups[k] for k in sorted(groups, key=lambda k: min(groups[k][1]))]


def count_models(cnf: CnfFormula, node_budget: int = DEFAULT_NODE_BUDGET) -> int:
    """Exact number of models, which equals the count projected on the features.

    Counting DPLL with unit propagation, connected-component splitting and a
    component cache; each fully satisfied branch contributes ``2**k`` for its
    ``k`` unconstrained variables. Raises :class:`BudgetExhausted` when more
    than ``node_budget`` search nodes are needed.
    """
    if any(not c for c in cnf.clauses):
        return 0
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * cnf.num_vars + 1000))
    try:
        return _Counter(node_budget).count(list(cnf.clauses), set(range(1, cnf.num_vars + 1)))
    finally:
        sys.setrecursionlimit(old)


# ---------------------------------------------------------------------------
# DIMACS and external solvers

SOLVER_ENV = "FMSCOPE_SAT_SOLVER"


def to_dimacs(cnf: CnfFormula, comments: Sequence[str] = ()) -> str:
    lines = [f"c {c}" for c in comments]
    lines.append(f"p cnf {cnf.num_vars} {len(cnf.clauses)}")
    lines.extend(" ".join(map(str, c)) + " 0" for c in cnf.clauses)
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str, num_features: int | None = None) -> CnfFormula:
    num_vars = None
    clauses: list[Clause] = []
    current: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad problem line: {line!r}")
            num_vars = int(parts[2])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            else:
                current.append(lit)
    if current:
        clauses.append(tuple(current))
    if num_vars is None:
        raise ValueError("missing 'p cnf' header")
    return CnfFormula(num_vars, tuple(clauses), num_vars if num_features is None else num_features)


def external_solver_hook(cnf: CnfFormula, command: str | None = None,
                         timeout: float | None = None) -> SolveOutcome:
    """Run a DIMACS solver speaking the competition output format (``s``/``v`` lines).

    The command comes from ``command`` or the ``FMSCOPE_SAT_SOLVER``
    environment variable; ``{cnf}`` in it is replaced by the input path,
    otherwise the path is appended.
    """
    command = command or os.environ.get(SOLVER_ENV)
    if not command:
        raise ExternalSolverError(f"no external solver configured (set {SOLVER_ENV})")
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "input.cnf")
        with open(path, "w", encoding="ascii") as fh:
            fh.write(to_dimacs(cnf))
        argv = shlex.split(command)
        if any("{cnf}" in a for a in argv):
            argv = [a.replace("{cnf}", path) for a in argv]
        else:
            argv.append(path)
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise ExternalSolverError(f"external solver failed: {exc}") from exc
    return _parse_solver_output(cnf, proc.stdout, proc.returncode)


def _parse_solver_output(cnf: CnfFormula, out: str, returncode: int) -> SolveOutcome:
    status = None
    lits: list[int] = []
    for line in out.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "s" and len(parts) > 1:
            status = parts[1]
        elif parts[0] == "v":
            try:
                lits.extend(int(t) for t in parts[1:])
            except ValueError:
                raise ExternalSolverError(f"malformed value line: {line!r}") from None
    if status == "UNSATISFIABLE":
        return SolveOutcome(False)
    if status != "SATISFIABLE":
        raise ExternalSolverError(f"no solution line in solver output (exit code {returncode})")
    truth = {abs(l): l > 0 for l in lits if l != 0}
    witness = tuple(v if truth.get(v, False) else -v for v in range(1, cnf.num_vars + 1))
    try:
        check_witness(cnf, witness)
    except AssertionError as exc:
        raise ExternalSolverError(f"external witness rejected: {exc}") from None
    return SolveOutcome(True, witness)
