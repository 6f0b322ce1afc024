"""Worked examples whose expected values come from the source text."""

import pytest

from teamlogic.approx import make_A, make_B, skolemize
from teamlogic.kernel import KernelMode, check_script
from teamlogic.model import all_weak_models, builtin, tuples_of
from teamlogic.normalform import NormalFormSentence, introduce_dependence
from teamlogic.semantics import check_sentence, eval_team
from teamlogic.syntax import ParseError, Signature, free_variables, parse
from teamlogic.team import Team

Q1 = KernelMode(with_q1=True)


def ok(text, mode=KernelMode()):
    _, vs = check_script(text, None, mode)
    return vs


def test_negated_dependence_is_a_parse_error():
    with pytest.raises(ParseError, match="negation over dependence atom"):
        parse("! dep(x,y)")


def test_dep_free_variables():
    assert free_variables(parse("dep(x, f(y))")) == {"x", "y"}


def test_bound_variable_renaming_is_equivalent():
    sig = Signature({"P": 1}, {})
    for W in all_weak_models(sig, 3):
        assert check_sentence(W, parse("Q x P(x)")) == check_sentence(W, parse("Q y P(y)"))
    assert ok("1. assume a: Q x P(x)\n2. Q y P(y) ; Bound [1]\n") == []


def test_non_trivial_quantifiers_reject_the_empty_set():
    for n in (1, 2, 3):
        for name, params in [("exists", ()), ("forall", ()), ("majority", ())]:
            assert not builtin(name, params, n).member([])


def test_two_thirds_minimal_sets():
    q = builtin("fraction", (2, 3), 3)
    mins = {frozenset(t[0] for t in s) for s in q.minimal_sets}
    assert mins == {frozenset({0, 1}), frozenset({0, 2}), frozenset({1, 2})}


def test_empty_team():
    W = next(iter(all_weak_models(Signature({"P": 1}, {}), 2)))
    assert eval_team(W, Team.empty(["x"]), parse("Q x false & dep(x)"))


def test_extending_scope():
    assert ok("1. assume a: (Q x P(x)) | P(y)\n2. Q x P(x) | P(y) ; ScopeOr [1]\n") == []
    assert ok("1. assume a: (Q x P(x)) & P(y)\n2. Q x P(x) & P(y) ; ScopeAnd [1]\n") == []


def test_unnesting():
    assert ok("1. assume a: dep(f(x), y)\n2. E z dep(z, y) & z = f(x) ; Unnest [1]\n") == []


def test_dependence_distribution():
    text = ("1. assume a: (E y1 dep(y1) & P(y1)) | E y2 dep(y2) & S(y2, y2)\n"
            "2. E y1 E y2 (dep(y1) & dep(y2)) & (P(y1) | S(y2, y2)) ; DepDist [1]\n")
    assert ok(text) == []


def test_dependence_introduction():
    nf = introduce_dependence(parse("E x A y S(x, y)"))
    assert str(nf) == "A y E x dep(x) & S(x,y)"


def test_eigenvariable_violation():
    vs = ok("1. assume a: P(x)\n2. A x P(x) ; AllI [1]\n")
    assert [v.kind for v in vs] == ["eigenvariable"]


def test_d5_script(request):
    path = request.config.rootpath / "tests" / "golden" / "d5_dep_for_exists.proof"
    assert ok(path.read_text()) == []


def test_relation_in_psi_is_rejected():
    text = ("1. assume s: A x E y dep(x,y) & S(x,y)\n2. assume B: A x R(x)\n"
            "3. A x R(x) ; Approx [1, 2] params: R=R discharge: B\n")
    assert "occurrence" in {v.kind for v in ok(text, KernelMode(with_approx=True))}


def test_q1_rules():
    assert ok("1. !Q x x = u | x = v ; Q1Axiom\n", Q1) == []
    assert ok("1. assume a: Q x E y S(x,y)\n2. (E y Q x S(x,y)) | Q y E x S(x,y) ; Q1Union [1]\n", Q1) == []


def test_skolem_function_in_psi_is_rejected():
    text = ("1. assume s: A x E y dep(x,y) & S(x,y)\n2. assume k: A x S(x,f1(x))\n"
            "3. A x S(x,f1(x)) ; Skolem [1, 2] params: funcs=f1 discharge: k\n")
    assert "occurrence" in {v.kind for v in ok(text, Q1)}


def test_B_sentence_for_mixed_prefix():
    nf = NormalFormSentence((("Q", "x1"), ("A", "x2")), (), parse("S(x1, x2)"))
    assert make_B(nf, "R") == parse("Q x1 A x2 R(x1, x2)")


def test_first_approximation():
    nf = NormalFormSentence.from_formula(parse("A x E y (dep(x, y) & S(x, y))"))
    assert make_A(nf, "R", 1) == parse("A x1_1 E y1_1 (R(x1_1) -> S(x1_1, y1_1))")


def test_skolem_translation():
    nf = NormalFormSentence.from_formula(parse("A x E y (dep(x, y) & S(x, y))"))
    assert str(skolemize(nf).sentence) == "A x S(x,f1(x))"
    nf0 = NormalFormSentence.from_formula(parse("Q x E y (dep(y) & S(x, y))"))
    sk = skolemize(nf0)
    assert str(sk.sentence) == "Q x S(x,f1())"
    assert sk.functions == (("f1", 0),)
