"""XML output contract: answer tags per AO, answer parsing, scoring."""
from __future__ import annotations

import enum
import re

from ..analysis import AoKind, AoResult, AoShape
from ..model import FeatureModel

WRAPPER_TAG = "feature_model_analysis"
RATIONALE_TAG = "rationale"

ANSWER_TAGS: dict[AoKind, str] = {
    **{k: "count" for k in AoKind if k.number <= 9},
    AoKind.AO10: "satisfiable",
    AoKind.AO11: "configuration_satisfiable",
    AoKind.AO12: "valid_configurations",
    AoKind.AO13: "core_features",
    AoKind.AO14: "dead_features",
    AoKind.AO15: "false_optional_features",
    AoKind.AO16: "generalization",
}


class FailureMode(enum.Enum):
    NONE = "none"
    UNPARSEABLE = "unparseable"
    PARTIAL_TRUNCATED = "partial_truncated"
    HALLUCINATED_ELEMENTS = "hallucinated_elements"
    FORMAT_CORRECT_BUT_WRONG = "format_correct_but_wrong"


# classification precedence, strongest first
FAILURE_PRECEDENCE = (
    FailureMode.UNPARSEABLE,
    FailureMode.PARTIAL_TRUNCATED,
    FailureMode.HALLUCINATED_ELEMENTS,
    FailureMode.FORMAT_CORRECT_BUT_WRONG,
)

_SEPARATORS = re.compile(r"[\s,_']")  # \s also covers thin/no-break spaces


def format_answer(result: AoResult, rationale: str = "") -> str:
    """Render a result the way a compliant model should answer."""
    tag = ANSWER_TAGS[result.ao]
    if result.ao.shape is AoShape.FEATURE_SET:
        body = "".join(f"\n{n}" for n in sorted(result.value)) + "\n"
    else:
        body = result.text()
    parts = [f"<{WRAPPER_TAG}>", f"<{tag}>{body}</{tag}>"]
    if rationale:
        parts.append(f"<{RATIONALE_TAG}>{rationale}</{RATIONALE_TAG}>")
    parts.append(f"</{WRAPPER_TAG}>")
    return "\n".join(parts)


def _body_value(ao: AoKind, body: str):
    shape = ao.shape
    if shape in (AoShape.COUNT, AoShape.BIG_COUNT):
        digits = _SEPARATORS.sub("", body)
        if not digits.isascii() or not digits.isdigit():
            return None
        try:
            return int(digits)
        except ValueError:  # beyond the interpreter's int-from-str digit limit
            return None
    if shape is AoShape.BOOL:
        word = body.strip().lower()
        return {"true": True, "false": False}.get(word)
    if "<feature>" in body:
        items = re.findall(r"<feature>(.*?)</feature>", body, re.S)
        if re.sub(r"<feature>.*?</feature>", "", body, flags=re.S).strip():
            return None
    else:
        items = body.splitlines()
    names = set()
    for item in items:
        item = item.strip()
        if len(item) >= 2 and item[0] == item[-1] == '"':
            item = item[1:-1].strip()
        if not item:
            continue
        if "<" in item or ">" in item:
            return None
        names.add(item)
    return frozenset(names)


def parse_answer(ao: AoKind, raw: str) -> AoResult | FailureMode:
    """Extract the AO's contract element from ``raw``.

    Returns the parsed result, :attr:`FailureMode.PARTIAL_TRUNCATED` when an
    opening tag is never closed, or :attr:`FailureMode.UNPARSEABLE`.
    """
    if not isinstance(raw, str):
        return FailureMode.UNPARSEABLE
    tag = re.escape(ANSWER_TAGS[ao])
    complete = list(re.finditer(rf"<{tag}\s*>(.*?)</{tag}\s*>", raw, re.S))
    if complete:
        value = _body_value(ao, complete[-1].group(1))
    elif ao.shape is AoShape.FEATURE_SET and re.search(rf"<{tag}\s*/>", raw):
        value = frozenset()
    elif re.search(rf"<{tag}\s*>", raw):
        return FailureMode.PARTIAL_TRUNCATED
    else:
        return FailureMode.UNPARSEABLE
    if value is None:
        return FailureMode.UNPARSEABLE
    return AoResult(ao, value)


def extract_rationale(raw: str) -> str:
    m = re.search(rf"<{RATIONALE_TAG}\s*>(.*?)</{RATIONALE_TAG}\s*>", raw or "", re.S)
    if m:
        return m.group(1).strip()
    outside = re.sub(rf"<{WRAPPER_TAG}\s*>.*?</{WRAPPER_TAG}\s*>", "", raw or "", flags=re.S)
    return outside.strip()


def score(ao: AoKind, parsed: AoResult | FailureMode, oracle: AoResult,
          fm: FeatureModel | None = None) -> tuple[bool, FailureMode]:
    """Exact-match verdict plus the failure mode of an incorrect answer."""
    if oracle.ao is not ao:
        raise ValueError(f"oracle answers {oracle.ao.code}, not {ao.code}")
    if isinstance(parsed, FailureMode):
        return False, parsed
    if parsed.value == oracle.value:
        return True, FailureMode.NONE
    if ao.shape is AoShape.FEATURE_SET and fm is not None:
        if any(not fm.has_feature(n) for n in parsed.value):
            return False, FailureMode.HALLUCINATED_ELEMENTS
    return False, FailureMode.FORMAT_CORRECT_BUT_WRONG
