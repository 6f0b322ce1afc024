"""Proof checker for the natural-deduction system of D(Q, Qd).

A derivation is a tree (possibly with shared subtrees) of ``Derivation``
nodes.  Leaves are labelled assumptions or axioms.  ``check`` walks the tree
once and reports every failed condition as a ``Violation``; it never searches
for proofs.

Rule names and their premise order:

========== ============================================================
AndI       [φ, ψ] ⊢ φ ∧ ψ
AndE       [φ ∧ ψ] ⊢ φ   or   ⊢ ψ
OrI        [φ] ⊢ φ ∨ ψ   or   ⊢ ψ ∨ φ
OrE        [φ ∨ ψ, γ, γ] ⊢ γ        discharges φ in 2nd, ψ in 3rd; γ flat
NegI       [⊥] ⊢ ¬φ                discharges φ
RAA        [⊥] ⊢ φ                 discharges ¬φ; φ flat
BotI       [φ, ¬φ] ⊢ ⊥
Dual       [Qd x φ] ⊢ ¬Q x ¬φ      φ flat
AllI       [φ] ⊢ ∀x φ              eigenvariable x
AllE       [∀x φ] ⊢ φ[t/x]         param t (inferred when omitted)
ExI        [φ[t/x]] ⊢ ∃x φ         param t (inferred when omitted)
ExE        [∃x φ, ψ] ⊢ ψ           discharges φ; eigenvariable x
DisjSub    [φ ∨ ψ, γ] ⊢ φ ∨ γ      discharges ψ
Comm       [ψ ∨ φ] ⊢ φ ∨ ψ
Assoc      [(φ ∨ ψ) ∨ γ] ⊢ φ ∨ (ψ ∨ γ)
ScopeOr    [H x φ ∨ ψ] ⊢ H x (φ ∨ ψ)     x ∉ FV(ψ), H any binder
ScopeAnd   [H x φ ∧ ψ] ⊢ H x (φ ∧ ψ)     x ∉ FV(ψ), H ∈ {Q, Qd}
Unnest     [dep(t̄)] ⊢ ∃z (dep(t̄[z at i]) ∧ z = t_i)   z new
DepDist    [φ ∨ ψ] ⊢ ∃ȳ (⋀ dep ∧ (φ0 ∨ ψ0))
DepIntro   [∃x H y φ] ⊢ H y ∃x (dep(z̄, x) ∧ φ)   z̄ = FV(φ) - {x, y}
Mon        [H x φ, ψ] ⊢ H x ψ      H ∈ {Q, Qd}; discharges φ; eigenvariable x
Bound      [H x φ] ⊢ H y φ[y/x]    H ∈ {Q, Qd}; y not in φ
Refl       [] ⊢ t = t
Ident      [φ[r/x], t = r] ⊢ φ[t/x]   φ flat
Approx     [σ, ψ] ⊢ ψ              param R; discharges Bσ / A^kσ
Q1Axiom    [] ⊢ ¬Q x (x = y ∨ x = z)
Q1Union    [Q x ∃y φ] ⊢ ∃y Q x φ ∨ Q y ∃x φ
Skolem     [σ, ψ] ⊢ ψ              param funcs; discharges Sσ
========== ============================================================
"""

from __future__ import annotations

import re
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterator

from .syntax import (
    And, Bot, CaptureError, Dep, Eq, Exists, FormulaError, Fn, Forall, Formula, Not, Or,
    Quant, Rel, Signature, SignatureError, Term, Var, all_variables, big_and, bound_vars_of,
    free_variables, is_flat, is_quantifier_free, mentions_symbol, parse, parse_term, rebind,
    render, render_term, subformulas, substitute, symbols, term_vars,
)

ASSUME = "assume"

RULES = (
    "AndI", "AndE", "OrI", "OrE", "NegI", "RAA", "BotI", "Dual", "AllI", "AllE", "ExI", "ExE",
    "DisjSub", "Comm", "Assoc", "ScopeOr", "ScopeAnd", "Unnest", "DepDist", "DepIntro", "Mon",
    "Bound", "Refl", "Ident", "Approx", "Q1Axiom", "Q1Union", "Skolem",
)

# Number of premises per rule.
_ARITY = {
    "AndI": 2, "AndE": 1, "OrI": 1, "OrE": 3, "NegI": 1, "RAA": 1, "BotI": 2, "Dual": 1,
    "AllI": 1, "AllE": 1, "ExI": 1, "ExE": 2, "DisjSub": 2, "Comm": 1, "Assoc": 1,
    "ScopeOr": 1, "ScopeAnd": 1, "Unnest": 1, "DepDist": 1, "DepIntro": 1, "Mon": 2,
    "Bound": 1, "Refl": 0, "Ident": 2, "Approx": 2, "Q1Axiom": 0, "Q1Union": 1, "Skolem": 2,
}

# Premises under which assumptions may be discharged.
_HYPOTHETICAL = {
    "OrE": (1, 2), "NegI": (0,), "RAA": (0,), "ExE": (1,), "DisjSub": (1,), "Mon": (1,),
    "Approx": (1,), "Skolem": (1,),
}

_Q1_RULES = {"Q1Axiom", "Q1Union", "Skolem"}

VIOLATION_KINDS = (
    "schema", "eigenvariable", "flatness", "side-condition", "capture", "discharge",
    "freshness", "not-enabled", "occurrence", "nf-shape", "unrecognized-approximation",
    "arity", "signature",
)


class ScriptError(Exception):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(eq=False)
class Derivation:
    conclusion: Formula
    rule: str
    premises: tuple["Derivation", ...] = ()
    params: dict = field(default_factory=dict)
    discharge: tuple[str, ...] = ()
    label: str | None = None
    line: int | None = None

    @property
    def is_assumption(self) -> bool:
        return self.rule == ASSUME

    def nodes(self) -> Iterator["Derivation"]:
        """Every distinct node, premises before conclusions."""
        seen: set[int] = set()
        stack: list[tuple[Derivation, bool]] = [(self, False)]
        while stack:
            d, expanded = stack.pop()
            if id(d) in seen:
                continue
            if expanded:
                seen.add(id(d))
                yield d
                continue
            stack.append((d, True))
            for p in reversed(d.premises):
                if id(p) not in seen:
                    stack.append((p, False))

    def size(self) -> int:
        return sum(1 for _ in self.nodes())


def assume(label: str, f: Formula) -> Derivation:
    return Derivation(f, ASSUME, label=label)


def infer(rule: str, conclusion: Formula, *premises: Derivation,
          discharge: tuple[str, ...] | list[str] = (), **params) -> Derivation:
    return Derivation(conclusion, rule, tuple(premises), dict(params), tuple(discharge))


@dataclass(frozen=True)
class KernelMode:
    """Which optional rules are enabled; quantifiers must have ``arity``."""

    base: bool = True
    with_approx: bool = False
    with_q1: bool = False
    arity: int = 1

    def __post_init__(self):
        if self.with_q1 and self.arity != 1:
            raise ValueError("the Q1 regime needs unary quantifiers")


@dataclass(frozen=True)
class Violation:
    kind: str
    rule: str
    where: str
    message: str

    def __str__(self) -> str:
        return f"{self.where}: {self.rule}: {self.kind}: {self.message}"


# ---------------------------------------------------------------------------
# Schema helpers


def match_instance(body: Formula, x: str, target: Formula) -> tuple[bool, Term | None]:
    """Find ``t`` with ``body[t/x] == target`` ignoring capture.

    Returns ``(ok, t)``; ``t`` is None when ``x`` is not free in ``body``.
    """
    found: list[Term] = []

    def terms(a: Term, b: Term) -> bool:
        if isinstance(a, Var):
            if a.name == x:
                if found:
                    return found[0] == b
                found.append(b)
                return True
            return a == b
        if not isinstance(b, Fn) or a.name != b.name or len(a.args) != len(b.args):
            return False
        return all(terms(p, q) for p, q in zip(a.args, b.args))

    def go(f: Formula, g: Formula) -> bool:
        if type(f) is not type(g):
            return False
        if isinstance(f, (Rel, Dep)):
            if isinstance(f, Rel) and f.name != g.name:
                return False
            return len(f.args) == len(g.args) and all(terms(p, q) for p, q in zip(f.args, g.args))
        if isinstance(f, Eq):
            return terms(f.left, g.left) and terms(f.right, g.right)
        if isinstance(f, Bot):
            return True
        if isinstance(f, Not):
            return go(f.body, g.body)
        if isinstance(f, (And, Or)):
            return go(f.left, g.left) and go(f.right, g.right)
        if bound_vars_of(f) != bound_vars_of(g) or (isinstance(f, Quant) and f.dual != g.dual):
            return False
        if x in bound_vars_of(f):
            return f == g
        return go(f.body, g.body)

    ok = go(body, target)
    return ok, (found[0] if found else None)


def unbig_and(f: Formula, n: int) -> list[Formula] | None:
    """Split a left-nested conjunction of exactly ``n`` parts."""
    if n == 1:
        return [f]
    if not isinstance(f, And):
        return None
    rest = unbig_and(f.left, n - 1)
    return None if rest is None else rest + [f.right]


def split_dep_block(f: Formula) -> tuple[list[str], list[Dep], Formula] | None:
    """``∃y1…∃yn (⋀ dep(z̄^j, y_j) ∧ φ0)`` as ``(ys, deps, φ0)``; n = 0 gives ``([], [], f)``.

    φ0 must be flat and quantifier-free and every dependence argument a variable.
    """
    ys: list[str] = []
    g = f
    while isinstance(g, Exists):
        ys.append(g.var)
        g = g.body
    if not ys:
        return ([], [], f) if is_flat(f) and is_quantifier_free(f) else None
    if not isinstance(g, And):
        return None
    parts = unbig_and(g.left, len(ys))
    if parts is None:
        return None
    for d, y in zip(parts, ys):
        if not isinstance(d, Dep) or d.args[-1] != Var(y):
            return None
        if not all(isinstance(a, Var) for a in d.args):
            return None
    body = g.right
    if not (is_flat(body) and is_quantifier_free(body)):
        return None
    return ys, parts, body


def dep_block(ys: list[str], deps: list[Formula], body: Formula) -> Formula:
    out = And(big_and(deps), body) if ys else body
    for y in reversed(ys):
        out = Exists(y, out)
    return out


def leibniz(p: Formula, c: Formula, t: Term, r: Term) -> str | None:
    """Check ``p = φ[r/x]`` and ``c = φ[t/x]`` for some φ; return an error or None."""
    tr_vars = term_vars(t) | term_vars(r)

    def terms(a: Term, b: Term, bound: frozenset) -> str | None:
        if a == b:
            return None
        if a == r and b == t:
            clash = tr_vars & bound
            return f"variable {sorted(clash)[0]} would be captured" if clash else None
        if isinstance(a, Fn) and isinstance(b, Fn) and a.name == b.name and len(a.args) == len(b.args):
            for p_, q_ in zip(a.args, b.args):
                e = terms(p_, q_, bound)
                if e:
                    return e
            return None
        return "conclusion differs from the premise outside r/t positions"

    def go(f: Formula, g: Formula, bound: frozenset) -> str | None:
        if type(f) is not type(g):
            return "conclusion differs from the premise outside r/t positions"
        if isinstance(f, (Rel, Dep)):
            if (isinstance(f, Rel) and f.name != g.name) or len(f.args) != len(g.args):
                return "conclusion differs from the premise outside r/t positions"
            for a, b in zip(f.args, g.args):
                e = terms(a, b, bound)
                if e:
                    return e
            return None
        if isinstance(f, Eq):
            return terms(f.left, g.left, bound) or terms(f.right, g.right, bound)
        if isinstance(f, Bot):
            return None
        if isinstance(f, Not):
            return go(f.body, g.body, bound)
        if isinstance(f, (And, Or)):
            return go(f.left, g.left, bound) or go(f.right, g.right, bound)
        if bound_vars_of(f) != bound_vars_of(g) or (isinstance(f, Quant) and f.dual != g.dual):
            return "conclusion differs from the premise outside r/t positions"
        return go(f.body, g.body, bound | frozenset(bound_vars_of(f)))

    return go(p, c, frozenset())


def _quantifiers(f: Formula) -> Iterator[Quant]:
    for g in subformulas(f):
        if isinstance(g, Quant):
            yield g


@contextmanager
def deep_recursion(limit: int = 200_000):
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, limit))
    try:
        yield
    finally:
        sys.setrecursionlimit(old)


# ---------------------------------------------------------------------------
# The checker


class _Checker:
    def __init__(self, sig: Signature | None, mode: KernelMode):
        self.sig = sig
        self.mode = mode
        self.labels: dict[str, Formula] = {}
        self.open: dict[int, frozenset[str]] = {}
        self.violations: list[Violation] = []
        self.visited: set[tuple[int, int]] = set()
        self._fv: dict[str, frozenset[str]] = {}
        self._sigs: dict[int, Signature | None] = {}

    # -- bookkeeping -------------------------------------------------------

    def fv_label(self, label: str) -> frozenset[str]:
        got = self._fv.get(label)
        if got is None:
            got = self._fv[label] = free_variables(self.labels[label])
        return got

    def report(self, kind: str, node: Derivation, where: str, message: str) -> None:
        self.violations.append(Violation(kind, node.rule, where, message))

    def open_formulas(self, labels) -> list[Formula]:
        return [self.labels[lb] for lb in sorted(labels)]

    # -- traversal -----------------------------------------------------------

    def run(self, root: Derivation) -> None:
        with deep_recursion():
            self.visit(root, "root", self.sig)

    def visit(self, node: Derivation, path: str, sig: Signature | None) -> frozenset[str]:
        key = (id(node), id(sig))
        if key in self.visited:
            return self.open[id(node)]
        self.visited.add(key)
        where = f"line {node.line}" if node.line is not None else path
        if node.is_assumption:
            result = self._assumption(node, where, sig)
            self.open[id(node)] = result
            return result
        child_sigs = [sig] * len(node.premises)
        if node.rule in ("Approx", "Skolem") and len(node.premises) == 2:
            child_sigs[1] = self._extended_sig(node, sig)
        opens = [self.visit(p, f"{path}.{i}", s)
                 for i, (p, s) in enumerate(zip(node.premises, child_sigs))]
        result = self._node(node, where, sig, opens)
        self.open[id(node)] = result
        return result

    def _extended_sig(self, node: Derivation, sig: Signature | None) -> Signature | None:
        if sig is None:
            return None
        got = self._sigs.get(id(node))
        if got is None:
            try:
                if node.rule == "Approx":
                    from .normalform import NormalFormSentence
                    nf = NormalFormSentence.from_formula(node.premises[0].conclusion)
                    got = sig.extend(relations={str(node.params.get("R")): len(nf.prefix)})
                else:
                    from .normalform import NormalFormSentence
                    nf = NormalFormSentence.from_formula(node.premises[0].conclusion)
                    names = list(node.params.get("funcs", ()))
                    got = sig.extend(functions={f: len(xs) for f, (_, xs) in zip(names, nf.block)})
            except Exception:
                got = sig
            self._sigs[id(node)] = got
        return got

    def _common(self, node: Derivation, where: str, sig: Signature | None) -> None:
        f = node.conclusion
        if sig is not None:
            try:
                sig.check(f)
            except SignatureError as e:
                self.report("signature", node, where, str(e))
        for q in _quantifiers(f):
            if len(q.vars) != self.mode.arity:
                self.report("arity", node, where,
                            f"quantifier binds {len(q.vars)} variables, kernel arity is {self.mode.arity}")
                break

    def _assumption(self, node: Derivation, where: str, sig: Signature | None) -> frozenset[str]:
        self._common(node, where, sig)
        if node.premises:
            self.report("schema", node, where, "an assumption has no premises")
        label = node.label
        if not label:
            self.report("schema", node, where, "assumption without a label")
            return frozenset()
        prev = self.labels.get(label)
        if prev is None:
            self.labels[label] = node.conclusion
        elif prev != node.conclusion:
            self.report("discharge", node, where,
                        f"label {label!r} already names a different assumption")
            return frozenset()
        return frozenset((label,))

    def _node(self, node: Derivation, where: str, sig, opens: list[frozenset[str]]) -> frozenset[str]:
        rule = node.rule
        self._common(node, where, sig)
        if rule not in _ARITY:
            self.report("schema", node, where, f"unknown rule {rule!r}")
            return frozenset().union(*opens) if opens else frozenset()
        if rule == "Approx" and not self.mode.with_approx:
            self.report("not-enabled", node, where, "rule not enabled (needs --approx)")
        if rule in _Q1_RULES and not self.mode.with_q1:
            self.report("not-enabled", node, where, "rule not enabled (needs --q1)")
        if len(node.premises) != _ARITY[rule]:
            self.report("schema", node, where,
                        f"expects {_ARITY[rule]} premises, got {len(node.premises)}")
            return frozenset().union(*opens) if opens else frozenset()
        expected = self._expected_discharge(node)
        remaining = self._discharge(node, where, opens, expected)
        handler = getattr(self, f"_r_{rule}")
        handler(node, where, [p.conclusion for p in node.premises], remaining)
        return frozenset().union(*remaining) if remaining else frozenset()

    # -- discharge -------------------------------------------------------------

    def _expected_discharge(self, node: Derivation) -> dict[int, object]:
        """Premise index -> predicate on the discharged formula."""
        rule = node.rule
        c = node.conclusion
        ps = [p.conclusion for p in node.premises]
        eq = lambda target: (lambda f: f == target)
        never = lambda f: False
        if rule == "OrE":
            if isinstance(ps[0], Or):
                return {1: eq(ps[0].left), 2: eq(ps[0].right)}
            return {1: never, 2: never}
        if rule == "NegI":
            return {0: eq(c.body) if isinstance(c, Not) else never}
        if rule == "RAA":
            try:
                return {0: eq(Not(c))}
            except FormulaError:
                return {0: never}
        if rule == "ExE":
            return {1: eq(ps[0].body) if isinstance(ps[0], Exists) else never}
        if rule == "DisjSub":
            return {1: eq(ps[0].right) if isinstance(ps[0], Or) else never}
        if rule == "Mon":
            return {1: eq(ps[0].body) if isinstance(ps[0], Quant) else never}
        if rule == "Approx":
            return {1: self._approx_recognizer(node)}
        if rule == "Skolem":
            return {1: self._skolem_recognizer(node)}
        return {}

    def _discharge(self, node: Derivation, where: str, opens: list[frozenset[str]],
                   expected: dict[int, object]) -> list[frozenset[str]]:
        remaining = list(opens)
        for label in node.discharge:
            hit = False
            for i, op in enumerate(opens):
                if label not in op:
                    continue
                hit = True
                if i not in expected:
                    self.report("discharge", node, where,
                                f"label {label!r} cannot be discharged in premise {i + 1}")
                    continue
                if not expected[i](self.labels[label]):
                    self.report("discharge", node, where,
                                f"assumption {label!r} is not the formula this rule discharges")
                remaining[i] = remaining[i] - {label}
            if not hit:
                self.report("discharge", node, where,
                            f"discharged label {label!r} does not occur open above this line")
        return remaining

    def _eigen(self, node: Derivation, where: str, xs, labels, what: str) -> None:
        for x in xs:
            for lb in sorted(labels):
                if x in self.fv_label(lb):
                    self.report("eigenvariable", node, where,
                                f"{x} is free in open assumption {lb!r} ({what})")
                    return

    # -- rules -------------------------------------------------------------------

    def _bad(self, node, where, msg="conclusion does not match the rule schema"):
        self.report("schema", node, where, msg)

    def _r_AndI(self, node, where, ps, rem):
        if node.conclusion != And(ps[0], ps[1]):
            self._bad(node, where)

    def _r_AndE(self, node, where, ps, rem):
        p = ps[0]
        if not isinstance(p, And) or node.conclusion not in (p.left, p.right):
            self._bad(node, where)

    def _r_OrI(self, node, where, ps, rem):
        c = node.conclusion
        if not isinstance(c, Or) or ps[0] not in (c.left, c.right):
            self._bad(node, where)

    def _r_OrE(self, node, where, ps, rem):
        if not isinstance(ps[0], Or):
            return self._bad(node, where, "major premise is not a disjunction")
        if not (ps[1] == ps[2] == node.conclusion):
            return self._bad(node, where)
        if not is_flat(node.conclusion):
            self.report("flatness", node, where, "the conclusion of ∨E must be flat")

    def _r_NegI(self, node, where, ps, rem):
        if not isinstance(node.conclusion, Not) or ps[0] != Bot():
            self._bad(node, where)

    def _r_RAA(self, node, where, ps, rem):
        if ps[0] != Bot():
            return self._bad(node, where)
        if not is_flat(node.conclusion):
            self.report("flatness", node, where, "RAA needs a flat conclusion")

    def _r_BotI(self, node, where, ps, rem):
        if node.conclusion != Bot():
            return self._bad(node, where)
        if not is_flat(ps[0]):
            return self.report("flatness", node, where, "⊥I needs a flat formula")
        if ps[1] != Not(ps[0]):
            self._bad(node, where, "second premise is not the negation of the first")

    def _r_Dual(self, node, where, ps, rem):
        p = ps[0]
        if not (isinstance(p, Quant) and p.dual):
            return self._bad(node, where, "premise is not a Qd formula")
        if not is_flat(p.body):
            return self.report("flatness", node, where, "duality needs a flat body")
        if node.conclusion != Not(Quant(p.vars, Not(p.body), False)):
            self._bad(node, where)

    def _r_AllI(self, node, where, ps, rem):
        c = node.conclusion
        if not isinstance(c, Forall) or c.body != ps[0]:
            return self._bad(node, where)
        self._eigen(node, where, (c.var,), rem[0], "∀I")

    def _instance(self, node, where, body: Formula, x: str, target: Formula) -> None:
        ok, t = match_instance(body, x, target)
        given = node.params.get("t")
        if not ok:
            return self._bad(node, where, f"not an instance of the body with {x} replaced")
        if given is not None and t is not None and given != t:
            return self._bad(node, where, f"parameter t={render_term(given)} does not match")
        if t is None:
            t = given
        if t is not None:
            try:
                substitute(body, t, x)
            except CaptureError as e:
                self.report("capture", node, where, str(e))

    def _r_AllE(self, node, where, ps, rem):
        p = ps[0]
        if not isinstance(p, Forall):
            return self._bad(node, where, "premise is not universal")
        self._instance(node, where, p.body, p.var, node.conclusion)

    def _r_ExI(self, node, where, ps, rem):
        c = node.conclusion
        if not isinstance(c, Exists):
            return self._bad(node, where, "conclusion is not existential")
        self._instance(node, where, c.body, c.var, ps[0])

    def _r_ExE(self, node, where, ps, rem):
        p = ps[0]
        if not isinstance(p, Exists):
            return self._bad(node, where, "major premise is not existential")
        if ps[1] != node.conclusion:
            return self._bad(node, where)
        if p.var in free_variables(node.conclusion):
            self.report("eigenvariable", node, where, f"{p.var} is free in the conclusion (∃E)")
            return
        self._eigen(node, where, (p.var,), rem[1], "∃E")

    def _r_DisjSub(self, node, where, ps, rem):
        p = ps[0]
        if not isinstance(p, Or) or node.conclusion != Or(p.left, ps[1]):
            self._bad(node, where)

    def _r_Comm(self, node, where, ps, rem):
        p = ps[0]
        if not isinstance(p, Or) or node.conclusion != Or(p.right, p.left):
            self._bad(node, where)

    def _r_Assoc(self, node, where, ps, rem):
        p = ps[0]
        if not (isinstance(p, Or) and isinstance(p.left, Or)):
            return self._bad(node, where, "premise is not (φ ∨ ψ) ∨ γ")
        if node.conclusion != Or(p.left.left, Or(p.left.right, p.right)):
            self._bad(node, where)

    def _scope(self, node, where, ps, conn, allowed):
        p = ps[0]
        if not isinstance(p, conn) or not isinstance(p.left, allowed):
            kinds = "Q or Qd" if allowed is Quant else "a binder"
            return self._bad(node, where, f"premise is not ({kinds} x φ) {'∨' if conn is Or else '∧'} ψ")
        h = p.left
        if node.conclusion != rebind(h, conn(h.body, p.right)):
            return self._bad(node, where)
        clash = set(bound_vars_of(h)) & free_variables(p.right)
        if clash:
            self.report("side-condition", node, where, f"{sorted(clash)[0]} is free in ψ")

    def _r_ScopeOr(self, node, where, ps, rem):
        self._scope(node, where, ps, Or, (Exists, Forall, Quant))

    def _r_ScopeAnd(self, node, where, ps, rem):
        self._scope(node, where, ps, And, Quant)

    def _r_Unnest(self, node, where, ps, rem):
        p, c = ps[0], node.conclusion
        if not isinstance(p, Dep):
            return self._bad(node, where, "premise is not a dependence atom")
        if not (isinstance(c, Exists) and isinstance(c.body, And) and isinstance(c.body.left, Dep)
                and isinstance(c.body.right, Eq)):
            return self._bad(node, where)
        z = c.var
        new = c.body.left.args
        if len(new) != len(p.args):
            return self._bad(node, where)
        diff = [i for i, (a, b) in enumerate(zip(p.args, new)) if a != b]
        if len(diff) != 1 or new[diff[0]] != Var(z):
            return self._bad(node, where, "exactly one argument must become the new variable")
        i = diff[0]
        if c.body.right != Eq(Var(z), p.args[i]):
            return self._bad(node, where, "second conjunct must be z = t_i")
        if z in all_variables(p):
            self.report("freshness", node, where, f"{z} is not a new variable")

    def _r_DepDist(self, node, where, ps, rem):
        p = ps[0]
        if not isinstance(p, Or):
            return self._bad(node, where, "premise is not a disjunction")
        left = split_dep_block(p.left)
        right = split_dep_block(p.right)
        if left is None or right is None:
            return self._bad(node, where, "disjuncts are not ∃ȳ(⋀ dep ∧ φ0) blocks")
        ys1, d1, b1 = left
        ys2, d2, b2 = right
        ys = ys1 + ys2
        if len(set(ys)) != len(ys):
            return self.report("side-condition", node, where, "block variables repeat")
        if set(ys1) & all_variables(p.right) or set(ys2) & all_variables(p.left):
            return self.report("side-condition", node, where,
                               "a block variable of one disjunct appears in the other")
        if node.conclusion != dep_block(ys, d1 + d2, Or(b1, b2)):
            self._bad(node, where)

    def _r_DepIntro(self, node, where, ps, rem):
        p, c = ps[0], node.conclusion
        if not (isinstance(p, Exists) and isinstance(p.body, (Forall, Quant))):
            return self._bad(node, where, "premise is not ∃x H y φ")
        inner = p.body
        if isinstance(inner, Quant) and len(inner.vars) != 1:
            return self._bad(node, where, "quantifier must bind one variable")
        x = p.var
        y = bound_vars_of(inner)[0]
        if x == y:
            return self.report("side-condition", node, where, "x and y must differ")
        phi = inner.body
        if not (type(c) is type(inner) and bound_vars_of(c) == (y,)
                and (not isinstance(c, Quant) or c.dual == inner.dual)
                and isinstance(c.body, Exists) and c.body.var == x
                and isinstance(c.body.body, And) and isinstance(c.body.body.left, Dep)
                and c.body.body.right == phi):
            return self._bad(node, where)
        dep = c.body.body.left
        if dep.args[-1] != Var(x) or not all(isinstance(a, Var) for a in dep.args):
            return self._bad(node, where, "new atom must be dep(z̄, x) over variables")
        zs = [a.name for a in dep.args[:-1]]
        want = free_variables(phi) - {x, y}
        if len(set(zs)) != len(zs) or set(zs) != want:
            self.report("side-condition", node, where,
                        f"z̄ must list FV(φ) - {{x, y}} = {sorted(want)}")

    def _r_Mon(self, node, where, ps, rem):
        p, c = ps[0], node.conclusion
        if not isinstance(p, Quant):
            return self._bad(node, where, "premise is not a Q or Qd formula")
        if c != Quant(p.vars, ps[1], p.dual):
            return self._bad(node, where)
        self._eigen(node, where, p.vars, rem[1], "rule 12")

    def _r_Bound(self, node, where, ps, rem):
        p, c = ps[0], node.conclusion
        if not (isinstance(p, Quant) and isinstance(c, Quant) and p.dual == c.dual
                and len(p.vars) == len(c.vars) == 1):
            return self._bad(node, where)
        x, y = p.vars[0], c.vars[0]
        if x == y:
            if c != p:
                self._bad(node, where)
            return
        if y in all_variables(p.body):
            return self.report("side-condition", node, where, f"{y} appears in φ")
        if c.body != substitute(p.body, Var(y), x):
            self._bad(node, where)

    def _r_Refl(self, node, where, ps, rem):
        c = node.conclusion
        if not (isinstance(c, Eq) and c.left == c.right):
            self._bad(node, where)

    def _r_Ident(self, node, where, ps, rem):
        p, e = ps
        if not isinstance(e, Eq):
            return self._bad(node, where, "second premise is not an equation t = r")
        if not (is_flat(p) and is_flat(node.conclusion)):
            return self.report("flatness", node, where, "identity rule needs flat formulas")
        err = leibniz(p, node.conclusion, e.left, e.right)
        if err:
            kind = "capture" if "captured" in err else "schema"
            self.report(kind, node, where, err)

    # -- approximation and Q1 rules ----------------------------------------------

    def _nf(self, node, where, f):
        from .normalform import NormalFormError, NormalFormSentence
        try:
            return NormalFormSentence.from_formula(f)
        except NormalFormError as e:
            self.report("nf-shape", node, where, f"σ is not in normal form: {e}")
            return None

    def _approx_recognizer(self, node):
        from .approx import recognize_approximation
        from .normalform import NormalFormError, NormalFormSentence
        R = node.params.get("R")
        try:
            nf = NormalFormSentence.from_formula(node.premises[0].conclusion)
        except NormalFormError:
            return lambda f: True   # reported as nf-shape
        if not isinstance(R, str):
            return lambda f: True
        return lambda f: recognize_approximation(nf, R, f) is not None

    def _skolem_recognizer(self, node):
        from .approx import skolemize
        from .normalform import NormalFormError, NormalFormSentence
        funcs = node.params.get("funcs")
        try:
            nf = NormalFormSentence.from_formula(node.premises[0].conclusion)
            target = skolemize(nf, names=tuple(funcs or ())).sentence
        except (NormalFormError, ValueError):
            return lambda f: True
        return lambda f: f == target

    def _r_Approx(self, node, where, ps, rem):
        from .approx import recognize_approximation
        if ps[1] != node.conclusion:
            return self._bad(node, where)
        R = node.params.get("R")
        if not isinstance(R, str) or not R:
            return self._bad(node, where, "missing parameter R")
        nf = self._nf(node, where, ps[0])
        if nf is None:
            return
        rels, _ = symbols(ps[0])
        if R in rels:
            self.report("freshness", node, where, f"{R} occurs in σ")
        for lb in node.discharge:
            f = self.labels.get(lb)
            if f is not None and recognize_approximation(nf, R, f) is None:
                self.report("unrecognized-approximation", node, where,
                            f"assumption {lb!r} is neither Bσ nor some A^kσ for R = {R}")
        if mentions_symbol(node.conclusion, R):
            self.report("occurrence", node, where, f"{R} appears in ψ")
        for lb in sorted(rem[1]):
            if mentions_symbol(self.labels[lb], R):
                self.report("occurrence", node, where, f"{R} appears in open assumption {lb!r}")

    def _r_Q1Axiom(self, node, where, ps, rem):
        c = node.conclusion
        ok = (isinstance(c, Not) and isinstance(c.body, Quant) and not c.body.dual
              and len(c.body.vars) == 1 and isinstance(c.body.body, Or))
        if ok:
            x = c.body.vars[0]
            a, b = c.body.body.left, c.body.body.right
            ok = (isinstance(a, Eq) and isinstance(b, Eq) and a.left == b.left == Var(x)
                  and isinstance(a.right, Var) and isinstance(b.right, Var)
                  and x not in (a.right.name, b.right.name))
        if not ok:
            self._bad(node, where, "not an instance of ¬Q x (x = y ∨ x = z)")

    def _r_Q1Union(self, node, where, ps, rem):
        p, c = ps[0], node.conclusion
        if not (isinstance(p, Quant) and not p.dual and len(p.vars) == 1
                and isinstance(p.body, Exists)):
            return self._bad(node, where, "premise is not Q x ∃y φ")
        x, y, phi = p.vars[0], p.body.var, p.body.body
        if x == y:
            return self.report("side-condition", node, where, "x and y must differ")
        want = Or(Exists(y, Quant((x,), phi)), Quant((y,), Exists(x, phi)))
        if c != want:
            self._bad(node, where)

    def _r_Skolem(self, node, where, ps, rem):
        from .approx import skolemize
        if ps[1] != node.conclusion:
            return self._bad(node, where)
        funcs = tuple(node.params.get("funcs") or ())
        nf = self._nf(node, where, ps[0])
        if nf is None:
            return
        if len(funcs) != len(nf.block):
            return self._bad(node, where, f"needs {len(nf.block)} function names, got {len(funcs)}")
        if len(set(funcs)) != len(funcs):
            return self.report("freshness", node, where, "function names repeat")
        _, fns = symbols(ps[0])
        for f in funcs:
            if f in fns:
                self.report("freshness", node, where, f"{f} occurs in σ")
        target = skolemize(nf, names=funcs).sentence
        if not node.discharge:
            self.report("discharge", node, where, "Skolem must discharge Sσ")
        for lb in node.discharge:
            got = self.labels.get(lb)
            if got is not None and got != target:
                self.report("unrecognized-approximation", node, where,
                            f"assumption {lb!r} is not the Skolem translation")
        for f in funcs:
            if mentions_symbol(node.conclusion, f):
                self.report("occurrence", node, where, f"{f} appears in ψ")
            for lb in sorted(rem[1]):
                if mentions_symbol(self.labels[lb], f):
                    self.report("occurrence", node, where, f"{f} appears in open assumption {lb!r}")


# ---------------------------------------------------------------------------
# Public API


def check(d: Derivation, sig: Signature | None = None, mode: KernelMode = KernelMode()) -> list[Violation]:
    """All violations in ``d``; an empty list means the derivation is accepted."""
    c = _Checker(sig, mode)
    c.run(d)
    return c.violations


def open_assumptions(d: Derivation) -> dict[str, Formula]:
    """Label -> formula for the undischarged assumptions of ``d``."""
    c = _Checker(None, KernelMode(with_approx=True, with_q1=True))
    c.run(d)
    return {lb: c.labels[lb] for lb in sorted(c.open[id(d)])}


def _single_node(node: Derivation, mode: KernelMode, rules: set[str]) -> list[Violation]:
    if node.rule not in rules:
        return [Violation("schema", node.rule, "root", f"not one of {sorted(rules)}")]
    c = _Checker(None, mode)
    c.run(node)
    here = "root" if node.line is None else f"line {node.line}"
    return [v for v in c.violations if v.where == here]


def check_approx_node(node: Derivation, mode: KernelMode) -> list[Violation]:
    """Violations of the (Approx) conditions at ``node`` itself."""
    return _single_node(node, mode, {"Approx"})


def check_q1_node(node: Derivation, mode: KernelMode) -> list[Violation]:
    """Violations of the Q1 axiom, union rule or (Skolem) at ``node`` itself."""
    return _single_node(node, mode, _Q1_RULES)


# ---------------------------------------------------------------------------
# Proof scripts
#
#   N. assume LABEL: FORMULA
#   N. FORMULA ; RULE [p1, p2] params: k=v, k=v discharge: a, b
#
# ``#`` starts a comment.  The last line is the conclusion.

_LINE = re.compile(r"^\s*(\d+)\s*\.\s*(.*?)\s*$")
_ASSUME = re.compile(r"^assume\s+([A-Za-z_][\w']*)\s*:\s*(.+)$")
_JUST = re.compile(r"^([A-Za-z][A-Za-z0-9]*)\s*(?:\[([^\]]*)\])?\s*(?:params:\s*(.*?))?\s*(?:discharge:\s*(.*))?$")


def _split_top(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


def _parse_params(text: str, sig: Signature | None, lineno: int) -> dict:
    out: dict = {}
    for item in _split_top(text or ""):
        if "=" not in item:
            raise ScriptError(f"parameter {item!r} is not key=value", lineno)
        k, v = (s.strip() for s in item.split("=", 1))
        if k == "t":
            out[k] = parse_term(v, sig)
        elif k == "funcs":
            out[k] = tuple(v.split())
        else:
            out[k] = v
    return out


def parse_script(text: str, sig: Signature | None = None) -> Derivation:
    """Rebuild the derivation tree from a proof script."""
    lines: dict[int, Derivation] = {}
    last = None
    for raw_no, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        m = _LINE.match(body)
        if not m:
            raise ScriptError("expected 'N. ...'", raw_no)
        n = int(m.group(1))
        if n in lines:
            raise ScriptError(f"line number {n} used twice", raw_no)
        rest = m.group(2)
        try:
            am = _ASSUME.match(rest)
            if am:
                d = Derivation(parse(am.group(2), sig), ASSUME, label=am.group(1), line=n)
            else:
                if ";" not in rest:
                    raise ScriptError("missing '; RULE'", raw_no)
                ftext, jtext = rest.split(";", 1)
                jm = _JUST.match(jtext.strip())
                if not jm:
                    raise ScriptError(f"cannot read justification {jtext.strip()!r}", raw_no)
                rule = jm.group(1)
                prem_nos = [int(p) for p in re.split(r"[,\s]+", jm.group(2) or "") if p]
                prem = []
                for p in prem_nos:
                    if p not in lines:
                        raise ScriptError(f"premise {p} is not an earlier line", raw_no)
                    prem.append(lines[p])
                params = _parse_params(jm.group(3), sig, raw_no)
                dis = tuple(x for x in re.split(r"[,\s]+", jm.group(4) or "") if x)
                d = Derivation(parse(ftext.strip(), sig), rule, tuple(prem), params, dis, line=n)
        except FormulaError as e:
            raise ScriptError(str(e), raw_no) from e
        lines[n] = d
        last = d
    if last is None:
        raise ScriptError("empty proof script")
    return last


def render_script(d: Derivation) -> str:
    """Linear script for ``d``; shared subtrees are written once."""
    numbers: dict[int, int] = {}
    by_label: dict[str, int] = {}
    out: list[str] = []
    with deep_recursion():
        for node in d.nodes():
            if node.is_assumption and node.label in by_label:
                numbers[id(node)] = by_label[node.label]
                continue
            n = len(out) + 1
            numbers[id(node)] = n
            if node.is_assumption:
                by_label[node.label] = n
                out.append(f"{n}. assume {node.label}: {render(node.conclusion)}")
                continue
            just = node.rule
            if node.premises:
                just += " [" + ", ".join(str(numbers[id(p)]) for p in node.premises) + "]"
            if node.params:
                items = []
                for k, v in node.params.items():
                    if k == "t":
                        v = render_term(v)
                    elif k == "funcs":
                        v = " ".join(v)
                    items.append(f"{k}={v}")
                just += " params: " + ", ".join(items)
            if node.discharge:
                just += " discharge: " + ", ".join(node.discharge)
            out.append(f"{n}. {render(node.conclusion)} ; {just}")
    return "\n".join(out) + "\n"


def check_script(text: str, sig: Signature | None = None,
                 mode: KernelMode = KernelMode()) -> tuple[Derivation, list[Violation]]:
    d = parse_script(text, sig)
    return d, check(d, sig, mode)
