"""Per-AO prompt templates and their rendering.

Layout of a template directory (one per AO code)::

    prompts/AO14/system.txt
    prompts/AO14/user.txt        # uses {{examples}} {{procedure}} {{blueprint}}
    prompts/AO14/procedure.txt
    prompts/AO14/exemplars/01/blueprint.bp
    prompts/AO14/exemplars/01/answer.xml
    prompts/AO14/exemplars/01/config.json   # AO11 only
    prompts/AO14/exemplars/01/special.bp    # AO16 only
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from ..analysis import AoKind
from ..model import Completeness, Configuration, FmError

PROMPTS_DIR = Path(__file__).resolve().parent.parent / "prompts"
USER_PLACEHOLDERS = ("examples", "procedure", "blueprint")
_PLACEHOLDER = re.compile(r"\{\{(\w+)\}\}")


class TemplateError(FmError):
    pass


@dataclass(frozen=True)
class Exemplar:
    blueprint: str
    answer: str
    config: Configuration | None = None
    special: str | None = None


@dataclass(frozen=True)
class PromptTemplate:
    ao: AoKind
    system_text: str
    user_text: str
    procedure: str
    exemplars: tuple[Exemplar, ...]

    def __post_init__(self):
        missing = [p for p in USER_PLACEHOLDERS if "{{%s}}" % p not in self.user_text]
        if missing:
            raise TemplateError(f"{self.ao.code} user template lacks placeholders {missing}")
        if not 2 <= len(self.exemplars) <= 4:
            raise TemplateError(f"{self.ao.code} needs 2-4 exemplars, has {len(self.exemplars)}")


def load_template(ao: AoKind, root: Path | str | None = None) -> PromptTemplate:
    base = Path(root or PROMPTS_DIR) / ao.code
    try:
        system = (base / "system.txt").read_text(encoding="utf-8")
        user = (base / "user.txt").read_text(encoding="utf-8")
        procedure = (base / "procedure.txt").read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise TemplateError(f"incomplete template for {ao.code}: {exc.filename}") from None
    exemplars = []
    for d in sorted(p for p in (base / "exemplars").iterdir() if p.is_dir()):
        config = special = None
        if (d / "config.json").exists():
            config = Configuration.from_json(json.loads((d / "config.json").read_text("utf-8")))
        if (d / "special.bp").exists():
            special = (d / "special.bp").read_text("utf-8")
        exemplars.append(Exemplar((d / "blueprint.bp").read_text("utf-8"),
                                  (d / "answer.xml").read_text("utf-8").strip(), config, special))
    return PromptTemplate(ao, system, user, procedure.strip(), tuple(exemplars))


def load_templates(root: Path | str | None = None) -> dict[AoKind, PromptTemplate]:
    return {ao: load_template(ao, root) for ao in AoKind}


def describe_config(config: Configuration) -> str:
    kind = "full" if config.completeness is Completeness.FULL else "partial"
    lines = [f"CONFIGURATION ({kind}):",
             "Selected: " + (", ".join(sorted(config.selected)) or "(none)"),
             "Deselected: " + (", ".join(sorted(config.deselected)) or "(none)")]
    if config.completeness is Completeness.PARTIAL:
        lines.append("All other features are undecided.")
    return "\n".join(lines)


def target_text(ao: AoKind, blueprint: str, extra=None) -> str:
    """The analyzed input as shown to the model, including AO11/AO16 extras."""
    blueprint = blueprint.strip()
    if ao is AoKind.AO11:
        if not isinstance(extra, Configuration):
            raise TemplateError("AO11 prompt needs a configuration")
        return f"BLUEPRINT:\n{blueprint}\n\n{describe_config(extra)}"
    if ao is AoKind.AO16:
        if not isinstance(extra, str):
            raise TemplateError("AO16 prompt needs a second blueprint")
        return (f"GENERAL-CANDIDATE:\n{blueprint}\n\n"
                f"SPECIAL-CANDIDATE:\n{extra.strip()}")
    if extra is not None:
        raise TemplateError(f"{ao.code} takes no extra input")
    return f"BLUEPRINT:\n{blueprint}"


def substitute(text: str, values: dict[str, str]) -> str:
    def repl(m: re.Match) -> str:
        key = m.group(1)
        if key not in values:
            raise TemplateError(f"no value for placeholder {{{{{key}}}}}")
        return values[key]
    return _PLACEHOLDER.sub(repl, text)


def render_examples(template: PromptTemplate) -> str:
    blocks = []
    for i, ex in enumerate(template.exemplars, start=1):
        extra = ex.config if template.ao is AoKind.AO11 else ex.special
        blocks.append(f"### Example {i}\n{target_text(template.ao, ex.blueprint, extra)}\n\n"
                      f"Expected output:\n{ex.answer}")
    return "\n\n".join(blocks)


def render_prompts(template: PromptTemplate, blueprint_text: str, extra=None) -> tuple[str, str]:
    """Return (system, user) prompts. ``extra``: Configuration (AO11) or blueprint text (AO16)."""
    values = {
        "examples": render_examples(template),
        "procedure": template.procedure,
        "blueprint": target_text(template.ao, blueprint_text, extra),
        "ao_code": template.ao.code,
        "ao_title": template.ao.title,
    }
    return substitute(template.system_text, values), substitute(template.user_text, values)
