import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gen
import naive
from teamlogic.model import Structure, WeakModel, builtin
from teamlogic.semantics import (
    EvalConfig, EvalError, EvalLimitExceeded, as_generalized, check_sentence, eval_tarski, eval_team,
)
from teamlogic.syntax import Not, Quant, Var, free_variables, is_flat, parse, substitute
from teamlogic.team import Team, extend_fun


def model(n, q="exists", params=(), P=(), S=(), f=None):
    st_ = Structure(n, {"P": frozenset((a,) for a in P), "S": frozenset(S)},
                    {"f": f or {(a,): a for a in range(n)}}, {"P": 1, "S": 2}, {"f": 1})
    return WeakModel(st_, builtin(q, params, n))


def team(vs, *rows):
    return Team(tuple(vs), frozenset(rows))


def test_tarski_examples():
    W = model(3, "at_least", (2,))
    assert eval_tarski(W, {"y": 0}, parse("Q x x != y"))
    assert not eval_tarski(W, {}, parse("Q x false"))
    assert eval_tarski(W, {}, parse("Qd x x = x"))


def test_tarski_rejects_dependence():
    with pytest.raises(EvalError):
        eval_tarski(model(2), {"x": 0}, parse("dep(x)"))


def test_dep_atom_examples():
    W = model(2)
    assert not eval_team(W, team("xy", (0, 0), (0, 1)), parse("dep(x,y)"))
    assert eval_team(W, team("xy", (0, 0), (1, 1)), parse("dep(x,y)"))
    assert eval_team(W, team("xy", (0, 1), (1, 1)), parse("dep(y)"))
    assert not eval_team(W, team("xy", (0, 1), (1, 0)), parse("dep(y)"))


def test_empty_team_satisfies_everything():
    W = model(2)
    for s in ["false", "dep(x)", "Q x false", "P(x) & !P(x)"]:
        assert eval_team(W, Team.empty(["x"]), parse(s))


def test_q_clause_example():
    W = model(3, "at_least", (2,))
    assert check_sentence(W, parse("Q x E y (dep(y) & y != x)"))
    W2 = model(3, "forall")
    assert not check_sentence(W2, parse("Q x E y (dep(y) & y != x)"))


def test_sentences():
    W = model(2, P=[0])
    assert check_sentence(W, parse("A x x = x"))
    assert not check_sentence(W, parse("Q x false"))
    assert check_sentence(W, parse("E x P(x)"))
    assert not check_sentence(W, parse("A x P(x)"))
    with pytest.raises(EvalError):
        check_sentence(W, parse("P(x)"))


def test_disjunction_needs_split():
    W = model(2)
    X = team("x", (0,), (1,))
    assert eval_team(W, X, parse("dep(x) | dep(x)"))
    Y = Team.full("xy", 2)
    assert eval_team(W, Y, parse("dep(x,y) | dep(x,y)"))
    assert not eval_team(W, Y, parse("dep(y)"))


def test_limit_is_not_false():
    W = model(3)
    f = parse("A x A y A z (dep(x,y) | dep(y,z) | dep(x,z) | dep(z))")
    with pytest.raises(EvalLimitExceeded):
        eval_team(W, Team.unit(), f, EvalConfig(limit=10))


def test_generalized_view_rejects_q():
    with pytest.raises(EvalError):
        as_generalized(parse("Q x P(x)"))


def _small(rng):
    W = gen.random_weak_model(rng, 2)
    phi = gen.random_formula(rng, 2, ("x", "y"))
    X = gen.random_team(rng, {"x", "y"} | free_variables(phi), W.size, 3)
    return W, X, phi


@settings(max_examples=400, deadline=None)
@given(st.integers(min_value=0, max_value=10**9))
def test_agrees_with_definitional_oracle(seed):
    W, X, phi = _small(random.Random(seed))
    assert eval_team(W, X, phi) == naive.team(W, list(X), phi)


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=10**9))
def test_minimal_set_restriction_is_sound(seed):
    W, X, phi = _small(random.Random(seed))
    full = EvalConfig(minimal_only=False, memo=False)
    assert eval_team(W, X, phi) == eval_team(W, X, phi, full)


@settings(max_examples=300, deadline=None)
@given(st.integers(min_value=0, max_value=10**9))
def test_flat_formulas_are_pointwise(seed):
    rng = random.Random(seed)
    W = gen.random_weak_model(rng, 3)
    phi = gen.random_flat(rng, 3)
    X = gen.random_team(rng, {"x", "y", "z", "u"}, W.size, 6)
    assert eval_team(W, X, phi) == all(eval_tarski(W, s, phi) for s in X)
    s = {"x": 0, "y": 0, "z": 0, "u": 0}
    assert eval_tarski(W, s, phi) == naive.tarski(W, s, phi)


@settings(max_examples=300, deadline=None)
@given(st.integers(min_value=0, max_value=10**9))
def test_duality_on_flat(seed):
    rng = random.Random(seed)
    W = gen.random_weak_model(rng, 3)
    body = gen.random_flat(rng, 2)
    s = {v: rng.randrange(W.size) for v in gen.VARS}
    assert eval_tarski(W, s, Quant(("x",), body, True)) == eval_tarski(W, s, Not(Quant(("x",), Not(body))))


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=10**9))
def test_substitution_lemma(seed):
    rng = random.Random(seed)
    W = gen.random_weak_model(rng, 3)
    phi = gen.random_formula(rng, 2)
    t = gen.random_term(rng)
    x = rng.choice(gen.VARS)
    try:
        sub = substitute(phi, t, x)
    except Exception:
        return
    dom = set(gen.VARS)
    X = gen.random_team(rng, dom, W.size, 6)
    Y = extend_fun(X, x, lambda s: naive.value(W, t, s))
    assert eval_team(W, X, sub) == eval_team(W, Y, phi)
