import random

import pytest

import gen
from test_acceptance import expected_kind, golden_scripts, mutated_scripts, _script_flags
from teamlogic.kernel import (
    KernelMode, ScriptError, assume, check, check_script, infer, open_assumptions, parse_script,
    render_script,
)
from teamlogic.syntax import Signature, parse

ALL = KernelMode(with_approx=True, with_q1=True)


@pytest.mark.parametrize("path", golden_scripts(), ids=lambda p: p.stem)
def test_golden_script_accepted(path):
    d, vs = check_script(path.read_text(), None, ALL)
    assert vs == []
    text = render_script(d)
    assert render_script(parse_script(text)) == text


@pytest.mark.parametrize("path", mutated_scripts(), ids=lambda p: p.stem)
def test_mutated_script_rejected(path):
    text = path.read_text()
    _, vs = check_script(text, None, _script_flags(text))
    assert expected_kind(path) in {v.kind for v in vs}


@pytest.mark.parametrize("rule", sorted(r for g in gen.RULE_GROUPS.values() for r in g))
def test_generated_instances_accepted(rule):
    rng = random.Random(rule)
    for _ in range(50):
        d = gen.rule_instance(rule, rng)
        assert check(d) == [], render_script(d)


def test_generated_approx_instances_accepted():
    rng = random.Random(5)
    for _ in range(30):
        d = gen.inst_Approx(rng, gen.Labels())
        assert check(d, None, KernelMode(with_approx=True)) == []
        assert set(open_assumptions(d)) == {"a1"}


def test_q1_rules_need_mode():
    d = parse_script("1. !Q x x = y | x = z ; Q1Axiom\n")
    assert check(d, None, KernelMode(with_q1=True)) == []
    assert [v.kind for v in check(d)] == ["not-enabled"]


def test_open_assumptions():
    d = parse_script(
        "1. assume a: P(x)\n"
        "2. assume b: !P(x)\n"
        "3. false ; BotI [1, 2]\n"
        "4. !P(x) ; NegI [3] discharge: a\n"
    )
    assert check(d) == []
    assert open_assumptions(d) == {"b": parse("!P(x)")}


def test_signature_violation():
    sig = Signature({"P": 1}, {})
    d = parse_script("1. assume a: P(x)\n2. P(x) | P(y) ; OrI [1]\n")
    assert check(d, sig) == []
    d2 = parse_script("1. assume a: S(x,x)\n")
    assert {v.kind for v in check(d2, sig)} == {"signature"}


def test_unknown_rule_is_schema_violation():
    d = infer("Magic", parse("P(x)"), assume("a", parse("P(x)")))
    assert [v.kind for v in check(d)] == ["schema"]


@pytest.mark.parametrize("text", [
    "1. P(x) ; AndI [2]\n",
    "1. assume a P(x)\n",
    "x. assume a: P(x)\n",
    "1. assume a: P(x\n",
    "1. assume a: P(x)\n2. P(x) ; AllE [1] params: t\n",
])
def test_malformed_scripts(text):
    with pytest.raises(ScriptError):
        parse_script(text)


def test_violation_reports_line():
    _, vs = check_script("1. assume a: P(x)\n2. A x P(x) ; AllI [1]\n")
    assert vs[0].where == "line 2"
    assert vs[0].rule == "AllI"
