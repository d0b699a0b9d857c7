"""Boolean-level UVL reader and writer.

Supported: ``namespace``, the indentation-based ``features`` block with
``mandatory``/``optional``/``or``/``alternative`` groups, and a
``constraints`` block of propositional expressions. Attributes and the
``abstract`` marker are dropped with a warning; cardinalities, typed
features, arithmetic constraints and imports are rejected.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import propexpr
from .model import (Feature, FeatureModel, FmError, Relationship, RelKind, ensure_valid,
                    validate_model)


class UvlError(FmError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass(frozen=True)
class UvlDocument:
    model: FeatureModel
    warnings: tuple[str, ...] = ()
    constraint_lines: int = 0  # constraints as written, before <=> desugaring


_GROUPS = {"mandatory": RelKind.MANDATORY, "optional": RelKind.OPTIONAL,
           "or": RelKind.OR, "alternative": RelKind.ALTERNATIVE}
_KEYWORDS = {"features", "constraints", "constraint", "namespace", "imports", "include",
             "as", "true", "false", "cardinality", "Boolean", "Integer", "Real", "String",
             *_GROUPS}
_FEATURE_RE = re.compile(
    r'^(?:(?P<type>Boolean|Integer|Real|String)\s+)?'
    r'(?:"(?P<q>[^"]+)"|(?P<bare>[\w\-.]+))'
    r'(?P<rest>.*)$')


def _strip_comment(line: str) -> str:
    in_quote = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_quote = not in_quote
        elif not in_quote and line.startswith("//", i):
            return line[:i]
    return line


@dataclass
class _Node:
    line: int
    name: str = ""
    kind: RelKind | None = None  # set for group headers
    children: list["_Node"] = field(default_factory=list)


def _logical_lines(text: str):
    """Yield (lineno, indent, content), joining ``{...}`` spans over several lines."""
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        raw = _strip_comment(lines[i]).rstrip()
        lineno = i + 1
        i += 1
        if not raw.strip():
            continue
        content = raw.strip()
        while content.count("{") > content.count("}") and i < len(lines):
            content += " " + _strip_comment(lines[i]).strip()
            i += 1
        if raw.lstrip().startswith("/*"):
            raise UvlError(lineno, "block comments are not supported")
        indent = raw[:len(raw) - len(raw.lstrip())]
        yield lineno, indent, content


def parse_uvl(text: str, model_name: str = "") -> UvlDocument:
    warnings: list[str] = []
    feature_lines: list[tuple[int, str, str]] = []
    constraint_lines: list[tuple[int, str]] = []
    block = None
    indent_chars: set[str] = set()
    for lineno, indent, content in _logical_lines(text):
        if not indent:
            word = content.split()[0]
            if word in ("features", "constraints") and content == word:
                block = word
                continue
            if word == "namespace":
                block = None
                model_name = model_name or content.split(maxsplit=1)[-1].strip('"')
                continue
            if word in ("imports", "include"):
                raise UvlError(lineno, f"'{word}' is unsupported (Boolean level only)")
            raise UvlError(lineno, f"unknown block {content!r}")
        indent_chars.update(indent)
        if len(indent_chars) > 1:
            raise UvlError(lineno, "indentation inconsistency: tabs and spaces are mixed")
        if block == "features":
            feature_lines.append((lineno, indent, content))
        elif block == "constraints":
            constraint_lines.append((lineno, content))
        else:
            raise UvlError(lineno, "indented line outside a features/constraints block")
    if not feature_lines:
        raise UvlError(1, "missing 'features' block")

    root = _build_tree(feature_lines, warnings)
    names: dict[str, int] = {}
    rels: list[Relationship] = []

    def add(node: _Node) -> int:
        if node.name in names:
            raise UvlError(node.line, f"feature {node.name!r} declared twice")
        names[node.name] = len(names)
        return names[node.name]

    def walk(node: _Node) -> None:
        pid = names[node.name]
        for group in node.children:
            kids = group.children
            if not kids:
                warnings.append(f"line {group.line}: empty '{group.kind.value}' group ignored")
                continue
            ids = [add(k) for k in kids]
            if group.kind.is_group and len(ids) == 1:
                warnings.append(f"line {group.line}: single-child '{group.kind.value}' group "
                                f"read as mandatory")
                rels.append(Relationship(pid, RelKind.MANDATORY, (ids[0],)))
            elif group.kind.is_group:
                rels.append(Relationship(pid, group.kind, tuple(ids)))
            else:
                rels.extend(Relationship(pid, group.kind, (i,)) for i in ids)
            for k in kids:
                walk(k)

    add(root)
    walk(root)

    constraints = []
    for lineno, content in constraint_lines:
        def resolve(name: str, lineno=lineno) -> int:
            if name not in names:
                raise UvlError(lineno, f"unknown feature in constraint: {name!r}")
            return names[name]
        try:
            constraints.extend(propexpr.parse_expr(content, resolve))
        except propexpr.ExprSyntaxError as exc:
            raise UvlError(lineno, f"unsupported or malformed constraint {content!r} ({exc})") from None

    fm = FeatureModel(tuple(Feature(i, n) for n, i in names.items()), 0, tuple(rels),
                      tuple(constraints), model_name)
    violations = validate_model(fm)
    if violations:
        raise UvlError(feature_lines[0][0], "; ".join(str(v) for v in violations))
    return UvlDocument(fm, tuple(warnings), len(constraint_lines))


def _build_tree(lines: list[tuple[int, str, str]], warnings: list[str]) -> _Node:
    stack: list[tuple[int, _Node]] = []
    root = None
    for lineno, indent, content in lines:
        width = len(indent)
        popped = None
        while stack and stack[-1][0] >= width:
            popped = stack.pop()[0]
        if popped is not None and popped != width:
            raise UvlError(lineno, "indentation inconsistency: dedent does not match an outer level")
        parent = stack[-1][1] if stack else None
        if parent is None:
            if root is not None:
                raise UvlError(lineno, "more than one root feature")
            node = _feature_node(lineno, content, warnings)
            root = node
        elif parent.kind is None:
            node = _group_node(lineno, content)
            parent.children.append(node)
        else:
            node = _feature_node(lineno, content, warnings)
            parent.children.append(node)
        stack.append((width, node))
    return root


def _group_node(lineno: int, content: str) -> _Node:
    if content.startswith("[") or content.startswith("cardinality"):
        raise UvlError(lineno, "cardinality groups unsupported")
    if content not in _GROUPS:
        raise UvlError(lineno, f"expected a group keyword (mandatory, optional, or, "
                               f"alternative), got {content!r}")
    return _Node(lineno, kind=_GROUPS[content])


def _feature_node(lineno: int, content: str, warnings: list[str]) -> _Node:
    m = _FEATURE_RE.match(content)
    if m is None:
        raise UvlError(lineno, f"malformed feature line {content!r}")
    if m.group("type") and m.group("type") != "Boolean":
        raise UvlError(lineno, f"{m.group('type')} features are unsupported (Boolean level only)")
    name = m.group("q") or m.group("bare")
    if m.group("bare") and name in _GROUPS:
        raise UvlError(lineno, f"group keyword {name!r} where a feature was expected")
    if "." in name and not m.group("q"):
        raise UvlError(lineno, f"namespaced feature reference {name!r} is unsupported")
    rest = m.group("rest").strip()
    if rest.startswith("cardinality") or rest.startswith("["):
        raise UvlError(lineno, "feature cardinalities are unsupported")
    if rest:
        if not (rest.startswith("{") and rest.endswith("}")):
            raise UvlError(lineno, f"unexpected text after feature name: {rest!r}")
        attrs = rest[1:-1].strip()
        if re.fullmatch(r"abstract(\s+true)?", attrs):
            warnings.append(f"line {lineno}: 'abstract' marker on {name!r} discarded")
        else:
            warnings.append(f"line {lineno}: attributes of {name!r} discarded")
    return _Node(lineno, name=name)


# ---------------------------------------------------------------------------
# writer

def uvl_name(name: str) -> str:
    if re.fullmatch(r"[A-Za-z_]\w*", name) and name not in _KEYWORDS:
        return name
    return f'"{name}"'


def render_uvl(fm: FeatureModel, indent: str = "\t") -> str:
    ensure_valid(fm)
    out = ["features"]

    def feature(fid: int, depth: int) -> None:
        out.append(indent * depth + uvl_name(fm.name_of(fid)))
        rels = fm.relationships_of(fid)
        i = 0
        while i < len(rels):
            rel = rels[i]
            members = list(rel.children)
            i += 1
            if not rel.kind.is_group:
                while i < len(rels) and rels[i].kind is rel.kind:
                    members.extend(rels[i].children)
                    i += 1
            out.append(indent * (depth + 1) + rel.kind.value)
            for c in members:
                feature(c, depth + 2)

    feature(fm.root, 1)
    if fm.constraints:
        out.append("constraints")
        for c in fm.constraints:
            out.append(indent + propexpr.format_expr(c, lambda i: uvl_name(fm.name_of(i))))
    return "\n".join(out) + "\n"
