import random

import pytest
from hypothesis import given, settings, strategies as st

from fmscope.analysis import run_all
from fmscope.blueprint import (BlueprintSyntaxError, ResolveError, StmtKind, generate_variant,
                               load_blueprint, parse_blueprint, render_blueprint, resolve, token_count)
from fmscope.model import RelKind, isomorphic, validate_model
from fmscope.propexpr import ExprSyntaxError, format_expr, parse_expr
from support import E0, E1, E1_BLUEPRINT, E4, random_model


def test_parse_e1_statements():
    doc = parse_blueprint(E1_BLUEPRINT)
    assert [s.kind for s in doc.statements] == [
        StmtKind.ROOT, StmtKind.MUST_HAVE, StmtKind.CAN_HAVE, StmtKind.ALTERNATIVE,
        StmtKind.REQUIRES]
    assert doc.statements[3].subject == "Engine"
    assert doc.statements[3].objects == ("Gas", "Electric")
    assert [s.line for s in doc.statements] == [1, 2, 3, 4, 5]


def test_resolve_e1():
    fm = load_blueprint(E1_BLUEPRINT, "car")
    assert len(fm.features) == 5
    assert len(fm.relationships) == 3
    assert len(fm.constraints) == 1
    assert validate_model(fm) == []
    assert isomorphic(fm, E1)


def test_all_statement_forms():
    text = """
    # a comment
    The root feature is Phone.
    Feature Phone must have Feature Screen
    Feature Phone can have Feature Camera.
    Feature Phone can be Feature Calls, Feature Texts, or any combination.
    Feature Screen can be Feature Basic, Feature Color, or Feature Touch.
    Feature Camera requires Feature Color.
    Feature Basic excludes Feature Camera.
    Constraint: Touch => !Basic & Screen.
    """
    fm = load_blueprint(text)
    kinds = sorted(r.kind.value for r in fm.relationships)
    assert kinds == ["alternative", "mandatory", "optional", "or"]
    assert len(fm.constraints) == 3


def test_or_group_with_both():
    fm = load_blueprint("The root feature is A.\nFeature A can be Feature B, Feature C, or both.")
    assert fm.relationships[0].kind is RelKind.OR


def test_multiword_names_quoted():
    text = ('The root feature is "Home Automation".\n'
            'Feature "Home Automation" must have Feature "Light Control".\n'
            'Constraint: "Light Control" | "Home Automation".\n')
    fm = load_blueprint(text)
    assert set(fm.names) == {"Home Automation", "Light Control"}
    assert isomorphic(load_blueprint(render_blueprint(fm)), fm)


def test_syntax_errors_collected_with_lines():
    text = "The root feature is A.\nFeature A flies.\nFeature A can have.\n"
    with pytest.raises(BlueprintSyntaxError) as exc:
        parse_blueprint(text)
    assert [d.line for d in exc.value.diagnostics] == [2, 3]


def test_duplicate_root_is_error():
    with pytest.raises(BlueprintSyntaxError):
        parse_blueprint("The root feature is A.\nThe root feature is B.\n")


def test_missing_root_and_multiple_parents():
    with pytest.raises(ResolveError):
        resolve(parse_blueprint("Feature A must have Feature B.\n"))
    with pytest.raises(ResolveError) as exc:
        load_blueprint("The root feature is A.\nFeature A must have Feature B.\n"
                       "Feature A can have Feature C.\nFeature B can have Feature C.\n")
    assert "multiple parents" in str(exc.value)


def test_orphan_feature_in_constraint_only():
    with pytest.raises(ResolveError):
        load_blueprint("The root feature is A.\nFeature B requires Feature A.\n")


def test_bytes_input_and_bad_encoding():
    assert len(load_blueprint(E1_BLUEPRINT.encode()).features) == 5
    with pytest.raises(BlueprintSyntaxError):
        parse_blueprint(b"\xff\xfe The root")


def test_render_e0_and_e4():
    assert render_blueprint(E0).strip() == "The root feature is A."
    assert "Feature A can be Feature B, Feature C, or both." in render_blueprint(E4)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**9))
def test_render_parse_roundtrip(seed):
    fm = random_model(random.Random(seed), general_constraints=True)
    again = load_blueprint(render_blueprint(fm))
    assert isomorphic(again, fm)


def test_variant_flips_exact_count_and_is_deterministic():
    rng = random.Random(5)
    for _ in range(30):
        fm = random_model(rng)
        if not fm.relationships:
            continue
        k = rng.randint(1, len(fm.relationships))
        seed = rng.randrange(1000)
        v = generate_variant(fm, seed, k)
        flipped = sum(a.kind is not b.kind for a, b in zip(fm.relationships, v.relationships))
        assert flipped == k
        assert v == generate_variant(fm, seed, k)
        assert all(a.children == b.children for a, b in zip(fm.relationships, v.relationships))


def test_variant_e1_engine_and_e4():
    seeds = [s for s in range(50)
             if generate_variant(E1, s).relationships[0].kind is RelKind.OPTIONAL]
    assert seeds, "some seed picks the mandatory Engine relationship"
    assert generate_variant(E4, 0).relationships[0].kind is RelKind.ALTERNATIVE


def test_variant_errors():
    with pytest.raises(ValueError):
        generate_variant(E0, 1)
    with pytest.raises(ValueError):
        generate_variant(E1, 1, 0)


def test_token_count():
    assert token_count("") == 0
    assert token_count("  The root\tfeature\nis A. ") == 5
    # regression pin for the E1 blueprint
    assert token_count(E1_BLUEPRINT) == 31


def test_roundtrip_preserves_ao_vector():
    fm = load_blueprint(E1_BLUEPRINT)
    a = {k: r.value for k, r in run_all(fm).items()}
    b = {k: r.value for k, r in run_all(load_blueprint(render_blueprint(fm))).items()}
    assert a == b


# --- propositional expressions ------------------------------------------------

def _names(n):
    return {"a": 0, "b": 1, "c": 2}[n]


def test_expr_precedence():
    [f] = parse_expr("a | b & !c => a", _names)
    assert format_expr(f, "abc".__getitem__) == "a | b & !c => a"
    [g] = parse_expr("(a | b) & c", _names)
    assert format_expr(g, "abc".__getitem__) == "(a | b) & c"


def test_expr_equivalence_splits():
    parts = parse_expr("a <=> b", _names)
    assert len(parts) == 2


def test_expr_errors():
    with pytest.raises(ExprSyntaxError):
        parse_expr("a &", _names)
    with pytest.raises(ExprSyntaxError):
        parse_expr("(a | b", _names)
