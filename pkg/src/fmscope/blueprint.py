"""Semi-formal blueprint language.

One statement per line, ``#`` comments, trailing period optional::

    The root feature is Car.
    Feature Car must have Feature Engine.
    Feature Car can have Feature GPS.
    Feature Engine can be Feature Gas or Feature Electric.
    Feature Media can be Feature Radio, Feature Phone, or both.
    Feature GPS requires Feature Electric.
    Feature Gas excludes Feature GPS.
    Constraint: GPS => (Electric | !Gas).

``must have`` with two or more ``or``-joined members is an alternative group,
as is ``can be ... or ...``; ``can be ..., or both`` (or ``any combination``)
is an or-group. Keywords are case-insensitive.
"""
from __future__ import annotations

import enum
import random
import re
from dataclasses import dataclass

from . import propexpr
from .model import (And, Feature, FeatureModel, FmError, Formula, Implies, Not, RelKind,
                    Relationship, Var, ensure_valid, excludes, formula_vars, map_vars,
                    requires, validate_model)


class StmtKind(enum.Enum):
    ROOT = "RootDecl"
    MUST_HAVE = "MustHave"
    CAN_HAVE = "CanHave"
    ALTERNATIVE = "AlternativeGroup"
    OR_GROUP = "OrGroup"
    REQUIRES = "Requires"
    EXCLUDES = "Excludes"
    RAW = "RawConstraint"


_TREE_KINDS = {
    StmtKind.MUST_HAVE: RelKind.MANDATORY,
    StmtKind.CAN_HAVE: RelKind.OPTIONAL,
    StmtKind.ALTERNATIVE: RelKind.ALTERNATIVE,
    StmtKind.OR_GROUP: RelKind.OR,
}


@dataclass(frozen=True)
class Statement:
    kind: StmtKind
    subject: str
    objects: tuple[str, ...] = ()
    line: int = 0
    span: tuple[int, int] = (0, 0)
    formulas: tuple[Formula, ...] = ()  # RawConstraint only; Vars hold names


@dataclass(frozen=True)
class BlueprintDoc:
    statements: tuple[Statement, ...]
    source: str = ""
    model_name: str = ""


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.message}"


class BlueprintSyntaxError(FmError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


class ResolveError(FmError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


# ---------------------------------------------------------------------------
# parsing

_LINE_TOKEN = re.compile(r'\s*(?:(?P<q>"[^"]*")|(?P<w>[\w\-]+)|(?P<p>[,.])|(?P<bad>\S))')
_CONSTRAINT_RE = re.compile(r"^constraint\s*:", re.IGNORECASE)
_NAME_STOPWORDS = {"feature", "or", "requires", "excludes"}

_FORMS = ("expected one of: 'The root feature is X', 'Feature X must have Feature Y', "
          "'Feature X can have Feature Y', 'Feature X can be Feature Y or Feature Z', "
          "'Feature X can be Feature Y, Feature Z, or both', 'Feature X requires Feature Y', "
          "'Feature X excludes Feature Y', 'Constraint: <expr>'")


class _LineError(Exception):
    def __init__(self, col: int, message: str):
        self.col = col
        self.message = message


@dataclass
class _Tok:
    kind: str  # w, q, ",", ".", end
    text: str
    col: int

    @property
    def low(self) -> str:
        return self.text.lower() if self.kind == "w" else ""


def _tokens(line: str) -> list[_Tok]:
    out, pos = [], 0
    while pos < len(line):
        m = _LINE_TOKEN.match(line, pos)
        if m is None:  # only trailing whitespace left
            break
        col = m.start(m.lastgroup) + 1
        if m.lastgroup == "bad":
            raise _LineError(col, f"unexpected character {m.group('bad')!r}")
        if m.lastgroup == "q":
            out.append(_Tok("q", m.group("q")[1:-1], col))
        elif m.lastgroup == "w":
            out.append(_Tok("w", m.group("w"), col))
        else:
            out.append(_Tok(m.group("p"), m.group("p"), col))
        pos = m.end()
    if out and out[-1].kind == ".":
        out.pop()
    if any(t.kind == "." for t in out):
        bad = next(t for t in out if t.kind == ".")
        raise _LineError(bad.col, "period only allowed at end of statement")
    out.append(_Tok("end", "", len(line.rstrip()) + 1))
    return out


class _LineParser:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.i = 0

    def peek(self, k: int = 0) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def word(self, *words: str) -> bool:
        """True if the next tokens are exactly ``words`` (case-insensitive)."""
        return all(self.peek(k).low == w for k, w in enumerate(words))

    def expect(self, *words: str) -> None:
        if not self.word(*words):
            tok = self.peek()
            raise _LineError(tok.col, f"expected {' '.join(words)!r}, got {tok.text or 'end of line'!r}")
        self.i += len(words)

    def at_verb(self) -> bool:
        return (self.word("must", "have") or self.word("can", "have") or self.word("can", "be")
                or self.word("requires") or self.word("excludes"))

    def name(self, stop) -> str:
        tok = self.peek()
        if tok.kind == "q":
            self.i += 1
            if not tok.text.strip():
                raise _LineError(tok.col, "empty feature name")
            return tok.text
        words = []
        while True:
            tok = self.peek()
            if tok.kind != "w" or stop(self):
                break
            if tok.low in _NAME_STOPWORDS:
                raise _LineError(tok.col, f"keyword {tok.text!r} inside a bare name; quote the name")
            words.append(tok.text)
            self.i += 1
        if not words:
            raise _LineError(tok.col, f"expected a feature name, got {tok.text or 'end of line'!r}")
        return " ".join(words)

    def end(self) -> None:
        tok = self.peek()
        if tok.kind != "end":
            raise _LineError(tok.col, f"unexpected {tok.text!r} after statement")

    def statement(self) -> tuple[StmtKind, str, tuple[str, ...]]:
        if self.word("the", "root", "feature", "is"):
            self.i += 4
            root = self.name(lambda p: False)
            self.end()
            return StmtKind.ROOT, root, ()
        if not self.word("feature"):
            raise _LineError(self.peek().col, _FORMS)
        self.i += 1
        subject = self.name(lambda p: p.at_verb())
        if self.word("requires") or self.word("excludes"):
            kind = StmtKind.REQUIRES if self.word("requires") else StmtKind.EXCLUDES
            self.i += 1
            self.expect("feature")
            obj = self.name(lambda p: False)
            self.end()
            return kind, subject, (obj,)
        for verb in (("must", "have"), ("can", "have"), ("can", "be")):
            if self.word(*verb):
                self.i += 2
                items, has_or, tail = self.items()
                return self.classify(" ".join(verb), subject, items, has_or, tail)
        raise _LineError(self.peek().col, "expected 'must have', 'can have', 'can be', "
                                          "'requires' or 'excludes'")

    def items(self) -> tuple[list[str], bool, bool]:
        items, has_or, tail = [], False, False
        item_stop = lambda p: p.word("or")
        self.expect("feature")
        items.append(self.name(item_stop))
        while self.peek().kind != "end":
            joined_by_or = False
            if self.peek().kind == ",":
                self.i += 1
            if self.word("or"):
                self.i += 1
                joined_by_or = True
            elif self.peek(-1).kind != ",":
                raise _LineError(self.peek().col, "expected ',' or 'or' between features")
            if joined_by_or and self.word("both") and self.peek(1).kind == "end":
                self.i += 1
                tail = True
                break
            if joined_by_or and self.word("any", "combination") and self.peek(2).kind == "end":
                self.i += 2
                tail = True
                break
            if has_or:
                raise _LineError(self.peek().col, "'or' must precede only the last feature")
            has_or = has_or or joined_by_or
            self.expect("feature")
            items.append(self.name(item_stop))
        return items, has_or, tail

    def classify(self, verb: str, subject: str, items: list[str], has_or: bool,
                 tail: bool) -> tuple[StmtKind, str, tuple[str, ...]]:
        col = self.peek().col
        if tail:
            if verb != "can be" or len(items) < 2:
                raise _LineError(col, "'or both'/'or any combination' needs 'can be' and 2+ features")
            return StmtKind.OR_GROUP, subject, tuple(items)
        if len(items) == 1:
            if verb == "can be":
                raise _LineError(col, "'can be' needs at least 2 features")
            kind = StmtKind.MUST_HAVE if verb == "must have" else StmtKind.CAN_HAVE
            return kind, subject, tuple(items)
        if verb == "can have":
            raise _LineError(col, "'can have' takes exactly one feature")
        if not has_or:
            raise _LineError(col, "feature list must end with 'or Feature X'")
        return StmtKind.ALTERNATIVE, subject, tuple(items)


def parse_blueprint(text: str | bytes, model_name: str = "") -> BlueprintDoc:
    """Parse blueprint text; raises :class:`BlueprintSyntaxError` listing every bad line."""
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    statements: list[Statement] = []
    diags: list[Diagnostic] = []
    root_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        start = len(raw) - len(raw.lstrip()) + 1
        span = (start, start + len(stripped))
        try:
            stmt = _parse_line(raw, lineno, span)
        except _LineError as exc:
            diags.append(Diagnostic(lineno, exc.col, exc.message))
            continue
        if stmt.kind is StmtKind.ROOT:
            if root_line is not None:
                diags.append(Diagnostic(lineno, start, f"duplicate root declaration "
                                                       f"(first on line {root_line})"))
                continue
            root_line = lineno
        statements.append(stmt)
    if diags:
        raise BlueprintSyntaxError(diags)
    return BlueprintDoc(tuple(statements), text, model_name)


def _parse_line(raw: str, lineno: int, span: tuple[int, int]) -> Statement:
    stripped = raw.strip()
    m = _CONSTRAINT_RE.match(stripped)
    if m:
        body = stripped[m.end():].strip()
        if body.endswith("."):
            body = body[:-1]
        offset = span[0] + m.end()
        try:
            formulas = propexpr.parse_expr(body, lambda n: n, multiword=True)
        except propexpr.ExprSyntaxError as exc:
            raise _LineError(offset + exc.column, str(exc).split(": ", 1)[-1]) from None
        except RecursionError:
            raise _LineError(offset, "expression nested too deeply") from None
        for f in formulas:
            for n in formula_vars(f):
                if not n.strip():
                    raise _LineError(offset, "empty feature name")
        return Statement(StmtKind.RAW, "", (), lineno, span, tuple(formulas))
    kind, subject, objects = _LineParser(_tokens(raw)).statement()
    return Statement(kind, subject, objects, lineno, span)


# ---------------------------------------------------------------------------
# resolution to the IR

def resolve(doc: BlueprintDoc) -> FeatureModel:
    names: dict[str, int] = {}
    order: list[str] = []
    parent: dict[str, str] = {}
    problems: list[str] = []
    rels: list[tuple[str, RelKind, tuple[str, ...]]] = []
    constraints: list[Formula] = []
    root = None

    def fid(name: str) -> int:
        if name not in names:
            names[name] = len(order)
            order.append(name)
        return names[name]

    for st in doc.statements:
        if st.kind is StmtKind.ROOT:
            root = st.subject
            fid(root)
        elif st.kind in _TREE_KINDS:
            fid(st.subject)
            for child in st.objects:
                fid(child)
                if child in parent:
                    problems.append(f"multiple parents: {child} (line {st.line})")
                else:
                    parent[child] = st.subject
            rels.append((st.subject, _TREE_KINDS[st.kind], st.objects))
        elif st.kind is StmtKind.REQUIRES:
            constraints.append(requires(fid(st.subject), fid(st.objects[0])))
        elif st.kind is StmtKind.EXCLUDES:
            constraints.append(excludes(fid(st.subject), fid(st.objects[0])))
        else:
            constraints.extend(map_vars(f, fid) for f in st.formulas)
    if root is None:
        problems.append("missing root declaration ('The root feature is X.')")
    else:
        for n in order:
            if n != root and n not in parent:
                problems.append(f"orphan feature: {n}")
        if root in parent:
            problems.append(f"root has a parent: {root}")
    if problems:
        raise ResolveError(problems)
    fm = FeatureModel(
        tuple(Feature(i, n) for i, n in enumerate(order)), names[root],
        tuple(Relationship(names[p], k, tuple(names[c] for c in cs)) for p, k, cs in rels),
        tuple(constraints), doc.model_name)
    violations = validate_model(fm)
    if violations:
        raise ResolveError([str(v) for v in violations])
    return fm


def load_blueprint(text: str, model_name: str = "") -> FeatureModel:
    return resolve(parse_blueprint(text, model_name))


# ---------------------------------------------------------------------------
# printing

_QUOTE_WORDS = {"feature", "or", "requires", "excludes", "must", "can", "both", "any",
                "the", "constraint"}


def quote_name(name: str) -> str:
    words = name.split(" ")
    if (any(not w or w.lower() in _QUOTE_WORDS for w in words)
            or not re.fullmatch(r"[\w\-]+(?: [\w\-]+)*", name)):
        return f'"{name}"'
    return name


def _expr_name(name: str) -> str:
    return name if re.fullmatch(r"[\w\-]+", name) else f'"{name}"'


def _flist(names: list[str]) -> str:
    return ", ".join(f"Feature {n}" for n in names)


def render_statement_for(fm: FeatureModel, rel: Relationship) -> str:
    p = quote_name(fm.name_of(rel.parent))
    kids = [quote_name(fm.name_of(c)) for c in rel.children]
    if rel.kind is RelKind.MANDATORY:
        return f"Feature {p} must have Feature {kids[0]}."
    if rel.kind is RelKind.OPTIONAL:
        return f"Feature {p} can have Feature {kids[0]}."
    if rel.kind is RelKind.ALTERNATIVE:
        if len(kids) == 2:
            return f"Feature {p} can be Feature {kids[0]} or Feature {kids[1]}."
        return f"Feature {p} can be {_flist(kids[:-1])}, or Feature {kids[-1]}."
    tail = "both" if len(kids) == 2 else "any combination"
    return f"Feature {p} can be {_flist(kids)}, or {tail}."


def render_constraint(fm: FeatureModel, f: Formula) -> str:
    if isinstance(f, Implies) and isinstance(f.left, Var) and isinstance(f.right, Var):
        return (f"Feature {quote_name(fm.name_of(f.left.feature))} requires "
                f"Feature {quote_name(fm.name_of(f.right.feature))}.")
    if (isinstance(f, Not) and isinstance(f.operand, And) and len(f.operand.operands) == 2
            and all(isinstance(v, Var) for v in f.operand.operands)):
        a, b = f.operand.operands
        return (f"Feature {quote_name(fm.name_of(a.feature))} excludes "
                f"Feature {quote_name(fm.name_of(b.feature))}.")
    body = propexpr.format_expr(f, lambda i: _expr_name(fm.name_of(i)))
    return f"Constraint: {body}."


def render_blueprint(fm: FeatureModel) -> str:
    """Canonical blueprint text: root, relationships in pre-order, constraints."""
    ensure_valid(fm)
    lines = [f"The root feature is {quote_name(fm.name_of(fm.root))}."]
    for f in fm.preorder():
        for rel in fm.relationships_of(f):
            lines.append(render_statement_for(fm, rel))
    lines.extend(render_constraint(fm, c) for c in fm.constraints)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# variants and statistics

def generate_variant(fm: FeatureModel, seed: int, swaps: int = 1) -> FeatureModel:
    """Flip the kind of ``swaps`` relationships (mandatory<->optional, or<->alternative).

    The relationships are picked with ``random.Random(seed).sample`` over the
    relationship indices, so the choice is uniform without replacement and
    reproducible for a given seed.
    """
    if swaps < 1:
        raise ValueError("swaps must be positive")
    if swaps > len(fm.relationships):
        raise ValueError(f"cannot swap {swaps} of {len(fm.relationships)} relationships")
    picked = set(random.Random(seed).sample(range(len(fm.relationships)), swaps))
    rels = tuple(Relationship(r.parent, r.kind.flipped(), r.children) if i in picked else r
                 for i, r in enumerate(fm.relationships))
    return fm.replace(relationships=rels)


def token_count(text: str) -> int:
    return len(text.split())
