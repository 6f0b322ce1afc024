import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gen
from teamlogic.model import (
    ModelError, QuantifierInterpretation, Structure, TrivialQuantifierError, WeakModel,
    all_interpretations, all_structures, all_weak_models, builtin, builtin_from_text, dual,
    mask_of, minimize, parse_structure, render_structure, tuples_of, validate,
)
from teamlogic.syntax import Signature


def _brute_members(pred, n):
    """Every subset of {0..n-1} satisfying pred, as frozensets."""
    out = set()
    for bits in itertools.product((0, 1), repeat=n):
        A = frozenset(i for i, b in enumerate(bits) if b)
        if pred(A):
            out.add(A)
    return out


def _members(q):
    return {frozenset(t[0] for t in tuples_of(m, q.universe_size, 1)) for m in q.members()}


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_builtins_match_counting_definitions(n):
    assert _members(builtin("exists", (), n)) == _brute_members(lambda A: len(A) >= 1, n)
    assert _members(builtin("forall", (), n)) == _brute_members(lambda A: len(A) == n, n)
    assert _members(builtin("majority", (), n)) == _brute_members(lambda A: 2 * len(A) > n, n)
    for k in range(1, n + 1):
        assert _members(builtin("at_least", (k,), n)) == _brute_members(lambda A: len(A) >= k, n)
    q = builtin("fraction", (2, 3), n)
    assert _members(q) == _brute_members(lambda A: 3 * len(A) >= 2 * n, n)


def test_trivial_builtins_rejected():
    with pytest.raises(TrivialQuantifierError):
        builtin("at_least", (2,), 1)
    with pytest.raises(TrivialQuantifierError):
        builtin("at_least", (0,), 3)
    with pytest.raises(ModelError):
        builtin("nonsense", (), 2)


def test_builtin_from_text():
    assert builtin_from_text("at_least(2)", 3) == builtin("at_least", (2,), 3)
    assert builtin_from_text("fraction(2, 3)", 3) == builtin("fraction", (2, 3), 3)
    with pytest.raises(ModelError):
        builtin_from_text("at least 2", 3)


def test_minimize_keeps_antichain():
    assert minimize([0b011, 0b001, 0b111, 0b100]) == (0b001, 0b100)


def test_validate_reports_problems():
    assert validate(QuantifierInterpretation(1, 2, (0b01,))) == []
    assert validate(QuantifierInterpretation(1, 2, ()))
    assert validate(QuantifierInterpretation(1, 2, (0,)))
    assert validate(QuantifierInterpretation(1, 2, (0b01, 0b11)))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_dual_brute_force(n):
    for q in all_interpretations(n):
        d = dual(q)
        full = frozenset(range(n))
        want = _brute_members(lambda A: (full - A) not in _members(q), n)
        assert _members(d) == want
        assert dual(d) == QuantifierInterpretation(1, n, q.minimal_masks)


def test_dual_of_exists_is_forall():
    for n in range(1, 5):
        assert dual(builtin("exists", (), n)).minimal_masks == builtin("forall", (), n).minimal_masks


def test_interpretation_counts():
    # Monotone families without the two trivial ones: Dedekind numbers minus 2.
    assert [len(all_interpretations(n)) for n in (1, 2)] == [1, 4]
    assert len(all_interpretations(3)) == 18


def test_weak_model_count():
    sig = Signature({"P": 1}, {})
    assert sum(1 for _ in all_weak_models(sig, 3)) == 2 * 1 + 4 * 4 + 8 * 18


def test_weak_model_checks_q():
    st_ = Structure(2, {"P": frozenset({(0,)})}, {}, {"P": 1}, {})
    with pytest.raises(ModelError):
        WeakModel(st_, builtin("exists", (), 3))
    with pytest.raises(ModelError):
        WeakModel(st_, QuantifierInterpretation(1, 2, (0,)))
    W = WeakModel(st_, builtin("exists", (), 2))
    assert W.qd.minimal_masks == builtin("forall", (), 2).minimal_masks
    with pytest.raises(ModelError):
        WeakModel(st_, builtin("exists", (), 2), builtin("exists", (), 2))


def test_mask_roundtrip():
    for n, k in [(2, 1), (2, 2), (3, 2)]:
        cells = list(itertools.product(range(n), repeat=k))
        for r in range(len(cells) + 1):
            s = frozenset(cells[:r])
            assert tuples_of(mask_of(s, n, k), n, k) == s


def test_all_structures_count():
    sig = Signature({"P": 1}, {"f": 1})
    assert sum(1 for _ in all_structures(sig, 2)) == 4 * 4
    assert sum(1 for _ in all_structures(Signature({"G": 2}, {}), 3)) == 512


STRUCT = """
# a small structure
universe 3
rel E/2: 0,1; 1,2
rel P/1: 2
fun f/1: 0->1; 1->2; 2->0
quant Q/1: {0,1};{1,2}
"""


def test_parse_structure():
    st_, q = parse_structure(STRUCT)
    assert st_.size == 3
    assert st_.relations["E"] == {(0, 1), (1, 2)}
    assert st_.functions["f"][(2,)] == 0
    assert _members(q) >= {frozenset({0, 1}), frozenset({1, 2}), frozenset({0, 1, 2})}
    assert frozenset({0}) not in _members(q)


def test_parse_structure_builtin_and_errors():
    st_, q = parse_structure("universe 4\nquant Q/1: majority\n")
    assert q == builtin("majority", (), 4)
    with pytest.raises(ModelError):
        parse_structure("rel P/1: 0\n")
    with pytest.raises(ModelError):
        parse_structure("universe 2\nbogus\n")


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=10**9))
def test_render_structure_roundtrip(seed):
    rng = random.Random(seed)
    W = gen.random_weak_model(rng, 4)
    st2, q2 = parse_structure(render_structure(W.structure, W.q))
    assert st2 == W.structure
    assert q2.minimal_masks == W.q.minimal_masks
