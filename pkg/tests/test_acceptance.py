"""Acceptance suite: one check per criterion, each reporting PASS or FAIL.

Run under pytest (the lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import random
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import gen  # noqa: E402
from teamlogic.approx import (  # noqa: E402
    approximation_oracle, eval_approximation, all_relations, skolem_holds, skolemize,
)
from teamlogic.kernel import KernelMode, check, check_script, open_assumptions  # noqa: E402
from teamlogic.lifts import branching_direct, branching_lift, ramsey_direct, ramsey_lift  # noqa: E402
from teamlogic.model import (  # noqa: E402
    TrivialQuantifierError, WeakModel, all_structures, all_weak_models, builtin, builtin_from_text,
)
from teamlogic.normalform import NormalFormSentence, normalize  # noqa: E402
from teamlogic.semantics import (  # noqa: E402
    EvalConfig, EvalLimitExceeded, as_generalized, check_sentence, eval_team,
)
from teamlogic.syntax import Signature, free_variables, parse, symbols  # noqa: E402
from teamlogic.team import Team, restrict  # noqa: E402

HERE = Path(__file__).parent
DATA = HERE / "data"
SIG_P = Signature({"P": 1}, {})
SIG_PF = Signature({"P": 1}, {"f": 1})
CFG = EvalConfig(limit=2_000_000)

RESULTS: dict[int, "Outcome"] = {}


@dataclass
class Outcome:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number} [{verdict}] {self.title}: {self.detail} ({self.seconds:.1f}s)"


def _record(number: int, title: str, fn) -> Outcome:
    t0 = time.perf_counter()
    passed, detail = fn()
    out = Outcome(number, title, passed, detail, time.perf_counter() - t0)
    RESULTS[number] = out
    print(out.line())
    return out


def read_lines(path: Path) -> list[str]:
    out = []
    for raw in path.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return out


def corpus() -> list:
    return [parse(s) for s in read_lines(DATA / "corpus.txt")]


def nf_corpus() -> list[NormalFormSentence]:
    """Normal forms of the corpus sentences over P alone, then the hand-written ones."""
    out = []
    for s in corpus():
        if "f" in symbols(s)[1]:
            continue
        out.append(normalize(s)[0])
    out += [NormalFormSentence.from_formula(parse(s)) for s in read_lines(DATA / "nf_corpus.txt")]
    return out


# ---------------------------------------------------------------------------
# 1. Rule soundness


RULE_INSTANCES_PER_RULE = 100
SAMPLES_PER_INSTANCE = 30


def _sound_on(d, rng, samples: int, stats: dict) -> str | None:
    gamma = open_assumptions(d)
    concl = d.conclusion
    dom = set(free_variables(concl))
    for f in gamma.values():
        dom |= free_variables(f)
    for _ in range(samples):
        W = gen.random_weak_model(rng, 4)
        X = gen.random_team(rng, dom, W.size, 8)
        try:
            if not all(eval_team(W, X, f, CFG) for f in gamma.values()):
                continue
            stats["premises"] += 1
            if len(X) > 0:
                stats["non_vacuous"] += 1
            if not eval_team(W, X, concl, CFG):
                return f"{d.rule}: premises hold but conclusion fails on |M|={W.size}, |X|={len(X)}"
        except EvalLimitExceeded:
            stats["limit"] += 1
    return None


def _approx_sound_on(d, rng, samples: int, stats: dict) -> str | None:
    gamma = open_assumptions(d)
    for _ in range(samples):
        W = gen.random_weak_model(rng, 4)
        try:
            if not all(check_sentence(W, f, CFG) for f in gamma.values()):
                continue
            stats["premises"] += 1
            stats["non_vacuous"] += 1
            if not check_sentence(W, d.conclusion, CFG):
                return "Approx: σ holds but the conclusion fails"
        except EvalLimitExceeded:
            stats["limit"] += 1
    return None


def criterion_1():
    rng = random.Random(1)
    stats = {"premises": 0, "non_vacuous": 0, "limit": 0}
    rules = [r for group in gen.RULE_GROUPS.values() for r in group]
    failures = []
    rejected = 0
    for rule in rules + ["Approx"]:
        for _ in range(RULE_INSTANCES_PER_RULE):
            if rule == "Approx":
                d = gen.inst_Approx(rng, gen.Labels())
                mode = KernelMode(with_approx=True)
            else:
                d = gen.rule_instance(rule, rng)
                mode = KernelMode()
            if check(d, None, mode):
                rejected += 1
                continue
            sound = _approx_sound_on if rule == "Approx" else _sound_on
            err = sound(d, rng, SAMPLES_PER_INSTANCE, stats)
            if err:
                failures.append(err)
    n = (len(rules) + 1) * RULE_INSTANCES_PER_RULE
    detail = (f"{n} instances over {len(rules) + 1} rules, {stats['premises']} premise-satisfying samples "
              f"({stats['non_vacuous']} with non-empty team), {len(failures)} counterexamples, "
              f"{rejected} instances rejected by the kernel, {stats['limit']} over budget")
    return not failures and not rejected, detail


# ---------------------------------------------------------------------------
# 2. Downward closure, locality, empty team, ∃/∀ as generalized quantifiers


CASES_PER_PROPERTY = 500


def _subteam(rng, X: Team) -> Team:
    return Team(X.vars, frozenset(r for r in X.rows if rng.random() < 0.5))


def criterion_2():
    rng = random.Random(2)
    fails = {"downward": 0, "locality": 0, "empty": 0, "generalized": 0}
    done = dict.fromkeys(fails, 0)
    while min(done.values()) < CASES_PER_PROPERTY:
        W = gen.random_weak_model(rng, 3)
        phi = gen.random_formula(rng, 3)
        fv = free_variables(phi)
        X = gen.random_team(rng, fv | {"x", "y", "z", "u"}, W.size, 8)
        try:
            holds = eval_team(W, X, phi, CFG)
            if holds:
                if not eval_team(W, _subteam(rng, X), phi, CFG):
                    fails["downward"] += 1
                done["downward"] += 1
            if eval_team(W, restrict(X, fv), phi, CFG) != holds:
                fails["locality"] += 1
            done["locality"] += 1
            if not eval_team(W, Team(X.vars, frozenset()), phi, CFG):
                fails["empty"] += 1
            done["empty"] += 1
            psi = gen.random_formula(rng, 3, quant=False)
            V = WeakModel(W.structure, builtin("exists", (), W.size))
            Y = gen.random_team(rng, free_variables(psi), W.size, 8)
            if eval_team(V, Y, psi, CFG) != eval_team(V, Y, as_generalized(psi), CFG):
                fails["generalized"] += 1
            done["generalized"] += 1
        except EvalLimitExceeded:
            continue
    detail = ", ".join(f"{k} {done[k]} cases/{fails[k]} failures" for k in fails)
    return not any(fails.values()), detail


# ---------------------------------------------------------------------------
# 3. Normal-form equivalence


def criterion_3():
    sentences = corpus()
    models_p = list(all_weak_models(SIG_P, 3))
    models_pf = list(all_weak_models(SIG_PF, 3))
    bad_cert, disagree = [], []
    for s in sentences:
        nf, cert = normalize(s)
        uses_f = "f" in symbols(s)[1]
        if cert.check(SIG_PF if uses_f else SIG_P):
            bad_cert.append(str(s))
        for W in models_pf if uses_f else models_p:
            if check_sentence(W, s, CFG) != check_sentence(W, nf.formula(), CFG):
                disagree.append(str(s))
                break
    detail = (f"{len(sentences)} sentences, {len(models_p)} models over P "
              f"({len(models_pf)} with f), {len(disagree)} disagreements, {len(bad_cert)} rejected certificates")
    return not bad_cert and not disagree, detail


# ---------------------------------------------------------------------------
# 4. Golden and mutated proof scripts


def _script_flags(text: str) -> KernelMode:
    flags = ""
    for line in text.splitlines():
        if line.startswith("# flags:"):
            flags = line.split(":", 1)[1]
    return KernelMode(with_approx="--approx" in flags, with_q1="--q1" in flags)


def golden_scripts() -> list[Path]:
    return sorted((HERE / "golden").glob("*.proof")) + sorted((HERE / "golden" / "rules").glob("*.proof"))


def mutated_scripts() -> list[Path]:
    return sorted((HERE / "mutated").glob("*.proof"))


def expected_kind(path: Path) -> str:
    for line in path.read_text().splitlines():
        if line.startswith("# expect:"):
            return line.split(":", 1)[1].strip()
    raise ValueError(f"{path.name} has no expect header")


def criterion_4():
    problems = []
    golden = golden_scripts()
    for p in golden:
        _, vs = check_script(p.read_text(), None, KernelMode(with_approx=True, with_q1=True))
        if vs:
            problems.append(f"{p.name}: {vs[0]}")
    mutated = mutated_scripts()
    for p in mutated:
        text = p.read_text()
        _, vs = check_script(text, None, _script_flags(text))
        want = expected_kind(p)
        if want not in {v.kind for v in vs}:
            problems.append(f"{p.name}: expected {want}, got {sorted({v.kind for v in vs})}")
    detail = (f"{len(golden)} golden scripts, {len(mutated)} mutated scripts, "
              f"{len(problems)} problems" + (f" ({problems[0]})" if problems else ""))
    return not problems and len(mutated) >= 20, detail


# ---------------------------------------------------------------------------
# 5. Approximation oracle and chain

# Exhaustive search over r ⊆ M^m is 2^(3^m); m = 3 would need 2^27 relations.
MAX_ORACLE_PREFIX = 2


def criterion_5():
    nfs = nf_corpus()
    used = [nf for nf in nfs if len(nf.prefix) <= MAX_ORACLE_PREFIX]
    models = list(all_weak_models(SIG_P, 3))
    mismatches = 0
    for nf in used:
        for W in models:
            if check_sentence(W, nf.formula(), CFG) != approximation_oracle(W, nf):
                mismatches += 1
    chain_fail = 0
    chain_checks = 0
    for nf in used:
        for W in all_weak_models(SIG_P, 2):
            for r in all_relations(W.size, len(nf.prefix)):
                for k in range(1, 4):
                    chain_checks += 1
                    if eval_approximation(W, nf, r, k + 1) and not eval_approximation(W, nf, r, k):
                        chain_fail += 1
    detail = (f"{len(used)} of {len(nfs)} NF sentences (prefix length ≤ {MAX_ORACLE_PREFIX}) × "
              f"{len(models)} models, {mismatches} oracle mismatches; {chain_checks} chain checks, "
              f"{chain_fail} failures")
    return mismatches == 0 and chain_fail == 0, detail


# ---------------------------------------------------------------------------
# 6. Skolem oracle

# Enumerating function tables on |M| = 3 costs ∏ 3^(3^arity); cap it.
MAX_SKOLEM_TABLES = 3 ** 7


def skolem_cost(nf: NormalFormSentence, n: int = 3) -> int:
    cost = 1
    for _, args in nf.block:
        cost *= n ** (n ** len(args))
    return cost


def criterion_6():
    nfs = nf_corpus()
    used = [nf for nf in nfs if skolem_cost(nf) <= MAX_SKOLEM_TABLES]
    models = list(all_weak_models(SIG_P, 3))
    mismatches = 0
    for nf in used:
        sk = skolemize(nf)
        for W in models:
            if check_sentence(W, nf.formula(), CFG) != skolem_holds(W, sk):
                mismatches += 1
    detail = (f"{len(used)} of {len(nfs)} NF sentences (at most {MAX_SKOLEM_TABLES} table choices) × "
              f"{len(models)} models, {mismatches} mismatches")
    return mismatches == 0, detail


# ---------------------------------------------------------------------------
# 7. Ramsey and branching lifts


LIFT_QUANTIFIERS = ("at_least(2)", "majority", "fraction(2,3)")


def criterion_7():
    sig = Signature({"G": 2}, {})
    ramsey, branching = ramsey_lift(), branching_lift()
    checked = 0
    disagree = 0
    for n in range(1, 4):
        for qtext in LIFT_QUANTIFIERS:
            try:
                q = builtin_from_text(qtext, n)
            except TrivialQuantifierError:
                continue
            for st in all_structures(sig, n):
                W = WeakModel(st, q)
                checked += 1
                if check_sentence(W, ramsey, CFG) != ramsey_direct(W):
                    disagree += 1
                if check_sentence(W, branching, CFG) != branching_direct(W):
                    disagree += 1
    return disagree == 0, f"{checked} (structure, quantifier) pairs, {disagree} disagreements"


# ---------------------------------------------------------------------------
# 8. Q1-mode kernel


def criterion_8():
    rng = random.Random(8)
    cases = gen.q1_cases(rng, 60)
    mode = KernelMode(with_q1=True)
    pos = [c for c in cases if c[1] is None]
    neg = [c for c in cases if c[1] is not None]
    wrong = []
    for d, kind in cases:
        kinds = {v.kind for v in check(d, None, mode)}
        if (kind is None and kinds) or (kind is not None and kind not in kinds):
            wrong.append((d.rule, kind, sorted(kinds)))
    detail = f"{len(pos)} positive, {len(neg)} negative cases, {len(wrong)} misclassified"
    return len(pos) >= 50 and len(neg) >= 50 and not wrong, detail


CRITERIA = [
    (1, "rule soundness", criterion_1),
    (2, "team properties", criterion_2),
    (3, "normal-form equivalence", criterion_3),
    (4, "golden proofs", criterion_4),
    (5, "approximation oracle", criterion_5),
    (6, "Skolem oracle", criterion_6),
    (7, "lift reproductions", criterion_7),
    (8, "Q1-mode kernel", criterion_8),
]


@pytest.mark.parametrize("number,title,fn", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_criterion(number, title, fn):
    out = _record(number, title, fn)
    assert out.passed, out.line()


if __name__ == "__main__":
    outcomes = [_record(n, t, fn) for n, t, fn in CRITERIA]
    sys.exit(0 if all(o.passed for o in outcomes) else 1)
