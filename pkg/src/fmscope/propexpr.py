"""Propositional constraint expressions: ``!``, ``&``, ``|``, ``=>``, ``<=>``.

Precedence from tightest: ``!``, ``&``, ``|``, ``=>`` (right associative),
``<=>``. ``<=>`` has no IR node and is desugared to a conjunction of two
implications. Names are bare identifiers or double-quoted strings; with
``multiword=True`` consecutive bare words form one name (``Voice Control``).
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .model import And, Formula, FmError, Implies, Not, Or, Var

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<op><=>|=>|[!&|()])
  | (?P<quoted>"[^"\n]*")
  | (?P<word>[\w\-]+)
""", re.VERBOSE)


class ExprSyntaxError(FmError):
    def __init__(self, message: str, column: int):
        self.column = column
        super().__init__(f"column {column}: {message}")


@dataclass(frozen=True)
class _Tok:
    kind: str  # "op", "name", "end"
    text: str
    col: int


def _tokenize(text: str, multiword: bool) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    last_word = False
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos + 1)
        kind = m.lastgroup
        if kind == "ws":
            pos = m.end()
            continue
        if kind == "op":
            toks.append(_Tok("op", m.group(), pos + 1))
            last_word = False
        elif kind == "quoted":
            toks.append(_Tok("name", m.group()[1:-1], pos + 1))
            last_word = False
        else:
            if last_word and multiword:
                prev = toks.pop()
                toks.append(_Tok("name", prev.text + " " + m.group(), prev.col))
            else:
                toks.append(_Tok("name", m.group(), pos + 1))
            last_word = True
        pos = m.end()
    toks.append(_Tok("end", "", len(text) + 1))
    return toks


class _Parser:
    def __init__(self, toks: list[_Tok], resolve):
        self.toks = toks
        self.i = 0
        self.resolve = resolve

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self, text: str | None = None) -> _Tok:
        tok = self.toks[self.i]
        if text is not None and (tok.kind != "op" or tok.text != text):
            raise ExprSyntaxError(f"expected {text!r}, got {tok.text or 'end'!r}", tok.col)
        self.i += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.text == text

    def equiv(self):
        left = self.implies()
        if self.at("<=>"):
            self.take()
            right = self.equiv()
            return ("iff", left, right)
        return left

    def implies(self):
        left = self.disj()
        if self.at("=>"):
            self.take()
            return Implies(_plain(left), _plain(self.implies()))
        return left

    def disj(self):
        parts = [self.conj()]
        while self.at("|"):
            self.take()
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else Or(tuple(_plain(p) for p in parts))

    def conj(self):
        parts = [self.unary()]
        while self.at("&"):
            self.take()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(_plain(p) for p in parts))

    def unary(self):
        if self.at("!"):
            self.take()
            return Not(_plain(self.unary()))
        if self.at("("):
            self.take()
            inner = self.equiv()
            self.take(")")
            return _Group(_plain(inner))
        tok = self.peek()
        if tok.kind != "name":
            raise ExprSyntaxError(f"expected a feature name, got {tok.text or 'end'!r}", tok.col)
        self.take()
        return Var(self.resolve(tok.text))


@dataclass(frozen=True)
class _Group:
    """Parenthesised sub-expression; stops n-ary flattening across parens."""
    inner: Formula


def _plain(node) -> Formula:
    if isinstance(node, _Group):
        return node.inner
    if isinstance(node, tuple):  # nested <=>
        _, a, b = node
        a, b = _plain(a), _plain(b)
        return And((Implies(a, b), Implies(b, a)))
    return node


def parse_expr(text: str, resolve, multiword: bool = False) -> list[Formula]:
    """Parse one expression; returns one formula, or two for a top-level ``<=>``.

    ``resolve(name)`` maps a feature name to its id (and may create it).
    """
    parser = _Parser(_tokenize(text, multiword), resolve)
    node = parser.equiv()
    tok = parser.peek()
    if tok.kind != "end":
        raise ExprSyntaxError(f"unexpected {tok.text!r}", tok.col)
    if isinstance(node, tuple):
        _, a, b = node
        a, b = _plain(a), _plain(b)
        return [Implies(a, b), Implies(b, a)]
    return [_plain(node)]


_PREC = {Implies: 1, Or: 2, And: 3, Not: 4, Var: 5}


def format_expr(f: Formula, name) -> str:
    """Print ``f`` so that :func:`parse_expr` rebuilds the identical tree.

    ``name(fid)`` returns the (already quoted if needed) feature name.
    """
    if isinstance(f, Var):
        return name(f.feature)
    if isinstance(f, Not):
        inner = format_expr(f.operand, name)
        if not isinstance(f.operand, (Var, Not)):
            inner = f"({inner})"
        return "!" + inner
    if isinstance(f, (And, Or)):
        sym = " & " if isinstance(f, And) else " | "
        # same-kind children must be parenthesised to avoid flattening
        return sym.join(_wrap(op, f, name, strict=True) for op in f.operands)
    if isinstance(f, Implies):
        # always parenthesise nested implications on either side
        return (_wrap(f.left, f, name, strict=True) + " => "
                + _wrap(f.right, f, name, strict=True))
    raise TypeError(f"not a formula node: {f!r}")


def _wrap(child: Formula, parent: Formula, name, strict: bool) -> str:
    text = format_expr(child, name)
    cp, pp = _PREC[type(child)], _PREC[type(parent)]
    if cp < pp or (strict and cp == pp):
        return f"({text})"
    return text
