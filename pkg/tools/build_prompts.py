#!/usr/bin/env python3
"""Regenerate src/fmscope/prompts/ from the texts below.

Exemplar answers are computed with the solver oracle so they always agree
with the scoring side.
"""
import json
import shutil
from pathlib import Path

from fmscope.analysis import AoKind, AoShape, run_ao
from fmscope.blueprint import generate_variant, load_blueprint, render_blueprint
from fmscope.harness.contract import ANSWER_TAGS, format_answer
from fmscope.model import Completeness, Configuration, RelKind

OUT = Path(__file__).resolve().parent.parent / "src" / "fmscope" / "prompts"

SANDWICH = """\
The root feature is Sandwich.
Feature Sandwich must have Feature Bread.
Feature Sandwich can have Feature Cheese.
Feature Sandwich can have Feature Sauce.
Feature Bread can be Feature White or Feature Wholegrain.
Feature Cheese can be Feature Cheddar, Feature Swiss, or both.
Feature Swiss requires Feature Wholegrain.
"""

WATCH = """\
The root feature is Smartwatch.
Feature Smartwatch must have Feature Display.
Feature Smartwatch must have Feature Battery.
Feature Smartwatch can have Feature Sensors.
Feature Display can be Feature AMOLED or Feature LCD.
Feature Sensors can be Feature Heart Rate, Feature GPS, or both.
Feature GPS requires Feature AMOLED.
Feature Battery excludes Feature LCD.
"""

LAMP = """\
The root feature is Lamp.
Feature Lamp must have Feature Bulb.
Feature Lamp can have Feature Dimmer.
Feature Bulb can be Feature LED or Feature Halogen.
Feature Dimmer requires Feature Halogen.
Feature Dimmer excludes Feature Halogen.
"""

ROBOT = """\
The root feature is Robot.
Feature Robot must have Feature Arm.
Feature Robot must have Feature Wheels.
Feature Arm excludes Feature Wheels.
"""

PREAMBLE = """\
You are an assistant for feature model analysis during software product line scoping.
You receive a blueprint: a semi-formal, line-based description of a feature model.

Blueprint statements and their meaning:
- "The root feature is X." X is the root and belongs to every product.
- "Feature P must have Feature C." C is a mandatory child of P: C is selected exactly when P is.
- "Feature P can have Feature C." C is an optional child of P: C may be selected only if P is.
- "Feature P can be Feature A or Feature B." (also "..., Feature B, or Feature C" and "Feature P must have Feature A or Feature B")
  A, B, C form an alternative group under P: when P is selected, exactly one of them is selected.
- "Feature P can be Feature A, Feature B, or both." (also "..., or any combination")
  A and B form an or-group under P: when P is selected, at least one of them is selected.
- "Feature A requires Feature B." Every product containing A also contains B.
- "Feature A excludes Feature B." No product contains both A and B.
- "Constraint: <expression>." A propositional formula over feature names using ! (not), & (and), | (or), => (implies).
A group member can only be selected together with its parent.
A product (valid configuration) is a set of selected features that satisfies every statement.
"""

DEFINITIONS = {
    AoKind.AO1: "Count all distinct features of the blueprint, including the root.",
    AoKind.AO2: "Count the leaf features: features without children. A root without children is a leaf.",
    AoKind.AO3: "Report the tree depth: the largest number of parent-child edges on a path from the root "
                "to a feature. A model consisting of the root alone has depth 0.",
    AoKind.AO4: "Count the mandatory features: children introduced by \"must have\" with a single feature. "
                "The root and members of alternative or or-groups are not mandatory features.",
    AoKind.AO5: "Count the optional features: children introduced by \"can have\". "
                "Members of alternative or or-groups are not optional features.",
    AoKind.AO6: "Count the or-groups (\"..., or both\" / \"..., or any combination\").",
    AoKind.AO7: "Count the alternative groups (\"can be A or B\", \"must have A or B\" and longer lists ending in \"or Feature X\").",
    AoKind.AO8: "Count the requires constraints: \"Feature A requires Feature B\" statements and constraints of the "
                "form \"A => B\" between two single features.",
    AoKind.AO9: "Count the excludes constraints: \"Feature A excludes Feature B\" statements and constraints of the "
                "form \"!(A & B)\" or \"A => !B\" between two single features.",
    AoKind.AO10: "Decide whether the feature model is satisfiable, i.e. whether at least one product exists. "
                 "A model without any product is void.",
    AoKind.AO11: "Decide whether the given configuration is valid. A full configuration is valid when its selected "
                 "features form a product. A partial configuration is valid when it can be completed into a product.",
    AoKind.AO12: "Count the products (valid configurations) of the feature model.",
    AoKind.AO13: "List the core features: features contained in every product.",
    AoKind.AO14: "List the dead features: features contained in no product.",
    AoKind.AO15: "List the false optional features: features that are not mandatory children (optional children or "
                 "group members) whose parent occurs in some product, yet which are contained in every product "
                 "that contains their parent.",
    AoKind.AO16: "Decide whether GENERAL-CANDIDATE generalizes SPECIAL-CANDIDATE. Both use the same features. "
                 "The answer is true when every product of SPECIAL-CANDIDATE is also a product of GENERAL-CANDIDATE.",
}

PROCEDURES = {
    AoKind.AO1: ["List every feature name that appears in any statement.",
                 "Remove duplicates; names are case-sensitive.",
                 "Count the remaining names."],
    AoKind.AO2: ["For every feature, check whether some statement gives it a child.",
                 "Features that never appear as a parent are leaves.",
                 "Count the leaves."],
    AoKind.AO3: ["Start at the root with depth 0.",
                 "A child is one level deeper than its parent.",
                 "Report the deepest level reached."],
    AoKind.AO4: ["Check every statement for its group semantics before counting.",
                 "\"must have\" followed by one feature adds one mandatory feature.",
                 "\"must have A or B\" is an alternative group and adds none.",
                 "Count the mandatory features."],
    AoKind.AO5: ["Check every statement for its group semantics before counting.",
                 "\"can have\" followed by one feature adds one optional feature.",
                 "\"can be\" statements are groups and add none.",
                 "Count the optional features."],
    AoKind.AO6: ["Find every group statement.",
                 "Keep the ones ending in \"or both\" or \"or any combination\".",
                 "Count them."],
    AoKind.AO7: ["Find every group statement.",
                 "Keep the ones where exactly one member may be chosen.",
                 "Count them."],
    AoKind.AO8: ["Scan the cross-tree statements.",
                 "Count requires statements and single-feature implications.",
                 "Do not count excludes statements or other formulas."],
    AoKind.AO9: ["Scan the cross-tree statements.",
                 "Count excludes statements and the equivalent formula shapes.",
                 "Do not count requires statements or other formulas."],
    AoKind.AO10: ["Start from the root, which is always selected, and propagate mandatory children.",
                  "Apply group rules and cross-tree constraints to the forced features.",
                  "Search for a contradiction; if every attempt to build a product fails, the model is void.",
                  "Answer true if a product exists."],
    AoKind.AO11: ["Fix the selected and deselected features of the configuration.",
                  "Check every relationship and constraint against them.",
                  "For a partial configuration, try to choose the undecided features so that nothing is violated.",
                  "Answer true if no constraint is violated."],
    AoKind.AO12: ["Work top-down from the root.",
                  "Multiply the choices of independent subtrees; an optional child doubles or adds its own choices.",
                  "Remove combinations that violate a cross-tree constraint.",
                  "Report the number of remaining products."],
    AoKind.AO13: ["The root is core.",
                  "Mandatory children of core features are core.",
                  "Propagate cross-tree constraints: a feature required by a core feature is core.",
                  "List all core features."],
    AoKind.AO14: ["For each feature, try to build a product containing it.",
                  "Follow requires and excludes constraints and group rules.",
                  "A feature for which every attempt fails is dead.",
                  "List all dead features."],
    AoKind.AO15: ["Consider each optional child and group member whose parent occurs in some product.",
                  "Try to build a product with the parent but without the feature.",
                  "If that is impossible, the feature is false optional.",
                  "List all false optional features."],
    AoKind.AO16: ["Take a product of SPECIAL-CANDIDATE.",
                  "Check it against every statement of GENERAL-CANDIDATE.",
                  "Look for a counterexample: a product of SPECIAL-CANDIDATE that GENERAL-CANDIDATE rejects.",
                  "Answer true if no counterexample exists."],
}

BODY_RULES = {
    AoShape.COUNT: "The element contains a single non-negative integer.",
    AoShape.BIG_COUNT: "The element contains a single non-negative integer without separators.",
    AoShape.BOOL: "The element contains true or false.",
    AoShape.FEATURE_SET: "The element contains one feature name per line, spelled exactly as in the blueprint. "
                         "Leave it empty when there are no such features.",
}

USER = """\
## Learn from Examples
{{examples}}

## Step-by-step procedure
{{procedure}}

## Input
{{blueprint}}

Answer with the XML block described in the system prompt.
"""


def system_text(ao):
    tag = ANSWER_TAGS[ao]
    return (f"{PREAMBLE}\nTask: {{{{ao_title}}}} ({{{{ao_code}}}}).\n{DEFINITIONS[ao]}\n\n"
            "Output contract:\nReply with exactly one XML block of this form:\n"
            f"<feature_model_analysis>\n<{tag}>...</{tag}>\n"
            "<rationale>one or two sentences explaining the result</rationale>\n"
            "</feature_model_analysis>\n"
            f"{BODY_RULES[ao.shape]}\nAnswers that deviate from this format are scored as incorrect.\n")


def rationale(ao, value, fm):
    if ao.shape is AoShape.FEATURE_SET:
        what = {AoKind.AO13: "in every product", AoKind.AO14: "in no product",
                AoKind.AO15: "in every product that contains their parent"}[ao]
        return (f"The listed features are {what}." if value else f"No feature is {what}.")
    if ao is AoKind.AO16:
        return ("Every product of the special candidate is accepted by the general candidate."
                if value else "A product of the special candidate violates the general candidate.")
    if ao is AoKind.AO11:
        return ("The configuration satisfies every statement." if value
                else "The configuration cannot satisfy every statement.")
    if ao.shape is AoShape.BOOL:
        return "A product exists; no contradiction was found." if value else "The statements contradict each other, so no product exists."
    return f"Derived from the statements of {fm.name_of(fm.root)}."


def exemplar_cases(ao):
    sandwich = load_blueprint(SANDWICH)
    if ao is AoKind.AO10:
        return [(SANDWICH, None), (ROBOT, None)]
    if ao is AoKind.AO11:
        full_ok = Configuration.full(sandwich, ["Sandwich", "Bread", "Wholegrain", "Cheese", "Swiss"])
        full_bad = Configuration.full(sandwich, ["Sandwich", "Bread", "White", "Cheese", "Swiss"])
        partial = Configuration(frozenset({"GPS"}), frozenset({"AMOLED"}), Completeness.PARTIAL)
        return [(SANDWICH, full_ok), (SANDWICH, full_bad), (WATCH, partial)]
    if ao is AoKind.AO12:
        return [(SANDWICH, None), (LAMP, None)]
    if ao is AoKind.AO14:
        return [(LAMP, None), (SANDWICH, None)]
    if ao is AoKind.AO15:
        return [(WATCH, None), (SANDWICH, None)]
    if ao is AoKind.AO16:
        # relax Bread (mandatory -> optional); relaxation generalizes the original
        idx = next(i for i, r in enumerate(sandwich.relationships) if r.kind is RelKind.MANDATORY)
        seed = next(s for s in range(1000)
                    if generate_variant(sandwich, s, 1).relationships[idx].kind is RelKind.OPTIONAL)
        relaxed = render_blueprint(generate_variant(sandwich, seed, 1))
        return [(relaxed, SANDWICH), (SANDWICH, relaxed)]
    return [(SANDWICH, None), (WATCH, None)]


def main():
    if OUT.exists():
        shutil.rmtree(OUT)
    for ao in AoKind:
        base = OUT / ao.code
        (base / "exemplars").mkdir(parents=True)
        (base / "system.txt").write_text(system_text(ao), encoding="utf-8")
        (base / "user.txt").write_text(USER, encoding="utf-8")
        (base / "procedure.txt").write_text(
            "".join(f"{i}. {s}\n" for i, s in enumerate(PROCEDURES[ao], start=1)), encoding="utf-8")
        for i, (bp, extra) in enumerate(exemplar_cases(ao), start=1):
            d = base / "exemplars" / f"{i:02d}"
            d.mkdir()
            (d / "blueprint.bp").write_text(bp, encoding="utf-8")
            fm = load_blueprint(bp)
            if isinstance(extra, Configuration):
                (d / "config.json").write_text(json.dumps(extra.to_json(), indent=2) + "\n", "utf-8")
                arg = extra
            elif isinstance(extra, str):
                (d / "special.bp").write_text(extra, encoding="utf-8")
                arg = load_blueprint(extra)
            else:
                arg = None
            result = run_ao(ao, fm, arg)
            (d / "answer.xml").write_text(format_answer(result, rationale(ao, result.value, fm)) + "\n",
                                          encoding="utf-8")


if __name__ == "__main__":
    main()
