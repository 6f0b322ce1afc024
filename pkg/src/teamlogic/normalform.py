"""Normal form for D(Q, Qd) sentences, with a kernel-checkable certificate.

The normal form is

    H1 x1 … Hm xm ∃y1 … ∃yn (dep(x̄¹, y1) ∧ … ∧ dep(x̄ⁿ, yn) ∧ θ)

with each Hi ∈ {Q, Qd, ∀} and θ flat and quantifier-free.  The arguments of
dep(x̄ⁱ, yi) are prefix variables or earlier block variables y1 … y(i-1).

``normalize`` builds the derivation step by step:

1. bound variables renamed apart (∃E/∃I, ∀E/∀I, and the bound-variable rule);
2. negations pushed below ∃/∀ (classical ¬I/RAA derivations);
3. dependence atoms over complex terms unnested;
4. prenex form, leftmost binder first (scope rules, Comm, rule 12 for lifting);
5. dependence atoms collected into an ∃-block (unnesting, dependence distribution);
6. ∃ binders of the prefix moved into the block with dependence introduction;
   an ∃ that never crosses a binder gets its atom from the D5 device.

Every rewrite is a function from a derivation of A to a derivation of B.  The
rewrites are lifted into context through ∧ (∧E/∧I), ∨ (disjunction
substitution and commutation), ∀ (∀E/∀I), ∃ (∃E/∃I) and Q/Qd (rule 12).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .kernel import (
    Derivation, KernelMode, Violation, assume, check, deep_recursion, infer, open_assumptions,
    split_dep_block, unbig_and,
)
from .syntax import (
    And, Binder, Bot, Dep, Eq, Exists, Fn, Forall, Formula, FreshNames, Not, Or, Quant, Rel,
    Signature, Var, all_variables, big_and, bound_vars_of, free_variables, is_flat,
    is_quantifier_free, rebind, render, subformulas, substitute, substitute_many,
)


class NormalFormError(Exception):
    pass


KINDS = ("Q", "Qd", "A")


@dataclass(frozen=True)
class NormalFormSentence:
    prefix: tuple[tuple[str, str], ...]          # (kind, variable), kind in KINDS
    block: tuple[tuple[str, tuple[str, ...]], ...]  # (y_i, x̄^i)
    matrix: Formula

    def __post_init__(self):
        seen: list[str] = []
        for kind, x in self.prefix:
            if kind not in KINDS:
                raise NormalFormError(f"prefix quantifier {kind!r} is not Q, Qd or A")
            seen.append(x)
        for y, xs in self.block:
            for a in xs:
                if a not in seen:
                    raise NormalFormError(f"dep argument {a} of {y} is not an earlier variable")
            seen.append(y)
        if len(set(seen)) != len(seen):
            raise NormalFormError("a variable is bound twice")
        if not (is_flat(self.matrix) and is_quantifier_free(self.matrix)):
            raise NormalFormError("matrix must be flat and quantifier-free")
        extra = free_variables(self.matrix) - set(seen)
        if extra:
            raise NormalFormError(f"matrix has free variables {sorted(extra)}")

    @property
    def prefix_vars(self) -> tuple[str, ...]:
        return tuple(x for _, x in self.prefix)

    @property
    def block_vars(self) -> tuple[str, ...]:
        return tuple(y for y, _ in self.block)

    def deps(self) -> list[Dep]:
        return [Dep(tuple(Var(a) for a in xs) + (Var(y),)) for y, xs in self.block]

    def body(self) -> Formula:
        """The part after the H-prefix."""
        out = And(big_and(self.deps()), self.matrix) if self.block else self.matrix
        for y, _ in reversed(self.block):
            out = Exists(y, out)
        return out

    def formula(self) -> Formula:
        return wrap_prefix(self.prefix, self.body())

    def __str__(self) -> str:
        return render(self.formula())

    @classmethod
    def from_formula(cls, f: Formula) -> "NormalFormSentence":
        """Strict structural recognition; no rewriting."""
        prefix = []
        g = f
        while isinstance(g, (Forall, Quant)):
            if isinstance(g, Quant):
                if len(g.vars) != 1:
                    raise NormalFormError("prefix quantifiers must bind one variable")
                prefix.append(("Qd" if g.dual else "Q", g.vars[0]))
            else:
                prefix.append(("A", g.var))
            g = g.body
        parts = split_dep_block(g)
        if parts is None:
            raise NormalFormError("after the prefix expected ∃ȳ(⋀ dep(x̄, y) ∧ θ) with θ flat")
        ys, deps, body = parts
        block = tuple((y, tuple(a.name for a in d.args[:-1])) for y, d in zip(ys, deps))
        return cls(tuple(prefix), block, body)


def wrap_prefix(prefix, body: Formula) -> Formula:
    out = body
    for kind, x in reversed(prefix):
        if kind == "A":
            out = Forall(x, out)
        else:
            out = Quant((x,), out, kind == "Qd")
    return out


def is_normal_form(f: Formula) -> bool:
    try:
        NormalFormSentence.from_formula(f)
    except NormalFormError:
        return False
    return True


@dataclass
class Certificate:
    """A derivation of the normal form from the single assumption ``label``."""

    derivation: Derivation
    label: str
    source: Formula

    @property
    def conclusion(self) -> Formula:
        return self.derivation.conclusion

    def check(self, sig: Signature | None = None) -> list[Violation]:
        problems = check(self.derivation, sig, KernelMode())
        opened = open_assumptions(self.derivation)
        if opened != {self.label: self.source}:
            problems.append(Violation("discharge", self.derivation.rule, "root",
                                      f"open assumptions are {sorted(opened)}, expected [{self.label!r}]"))
        return problems


# ---------------------------------------------------------------------------
# Derivation builder

Rewrite = Callable[[Derivation], Derivation]


def _has_binder(f: Formula) -> bool:
    return any(isinstance(g, Binder) for g in subformulas(f))


def _has_quant(f: Formula) -> bool:
    return any(isinstance(g, Quant) for g in subformulas(f))


def _conjuncts(d: Derivation, n: int) -> list[Derivation]:
    """Derivations of the ``n`` parts of a left-nested conjunction."""
    if n == 1:
        return [d]
    f = d.conclusion
    return _conjuncts(infer("AndE", f.left, d), n - 1) + [infer("AndE", f.right, d)]


def _and_all(ds: list[Derivation]) -> Derivation:
    out = ds[0]
    for d in ds[1:]:
        out = infer("AndI", And(out.conclusion, d.conclusion), out, d)
    return out


class Builder:
    def __init__(self, fresh: FreshNames):
        self.fresh = fresh
        self.count = 0

    def label(self) -> str:
        self.count += 1
        return f"h{self.count}"

    # -- context lifting -------------------------------------------------------

    def descend(self, d: Derivation, step: str, rw: Rewrite) -> Derivation:
        """Apply ``rw`` to the immediate subformula at ``step`` (L, R or B)."""
        f = d.conclusion
        if isinstance(f, And):
            left = infer("AndE", f.left, d)
            right = infer("AndE", f.right, d)
            if step == "L":
                new = rw(left)
                if new is left:
                    return d
                return infer("AndI", And(new.conclusion, f.right), new, right)
            new = rw(right)
            if new is right:
                return d
            return infer("AndI", And(f.left, new.conclusion), left, new)
        if isinstance(f, Or):
            h = self.label()
            target = f.right if step == "R" else f.left
            hyp = assume(h, target)
            new = rw(hyp)
            if new is hyp:
                return d
            if step == "R":
                return infer("DisjSub", Or(f.left, new.conclusion), d, new, discharge=(h,))
            swapped = infer("Comm", Or(f.right, f.left), d)
            sub = infer("DisjSub", Or(f.right, new.conclusion), swapped, new, discharge=(h,))
            return infer("Comm", Or(new.conclusion, f.right), sub)
        if step != "B":
            raise ValueError(f"cannot descend {step} into {render(f)}")
        if isinstance(f, Forall):
            inst = infer("AllE", f.body, d, t=Var(f.var))
            new = rw(inst)
            if new is inst:
                return d
            return infer("AllI", Forall(f.var, new.conclusion), new)
        h = self.label()
        hyp = assume(h, f.body)
        new = rw(hyp)
        if new is hyp:
            return d
        if isinstance(f, Exists):
            intro = infer("ExI", Exists(f.var, new.conclusion), new, t=Var(f.var))
            return infer("ExE", intro.conclusion, d, intro, discharge=(h,))
        if isinstance(f, Quant):
            return infer("Mon", Quant(f.vars, new.conclusion, f.dual), d, new, discharge=(h,))
        raise ValueError(f"cannot descend into {render(f)}")

    def under_prefix(self, d: Derivation, rw: Rewrite, depth: int | None = None) -> Derivation:
        """Apply ``rw`` below the leading binders (all of them, or ``depth``)."""
        f = d.conclusion
        if isinstance(f, Binder) and (depth is None or depth > 0):
            nxt = None if depth is None else depth - 1
            return self.descend(d, "B", lambda e: self.under_prefix(e, rw, nxt))
        return rw(d)

    # -- small derived steps -----------------------------------------------------

    def comm(self, d: Derivation) -> Derivation:
        f = d.conclusion
        return infer("Comm", Or(f.right, f.left), d)

    def swap_and(self, d: Derivation) -> Derivation:
        f = d.conclusion
        return infer("AndI", And(f.right, f.left), infer("AndE", f.right, d), infer("AndE", f.left, d))

    def drop_first_conjunct(self, d: Derivation) -> Derivation:
        """∃x (α ∧ φ) to ∃x φ."""
        f = d.conclusion
        h = self.label()
        hyp = assume(h, f.body)
        rest = infer("AndE", f.body.right, hyp)
        intro = infer("ExI", Exists(f.var, rest.conclusion), rest, t=Var(f.var))
        return infer("ExE", intro.conclusion, d, intro, discharge=(h,))

    # -- Step 0: renaming -------------------------------------------------------

    def rename_binder(self, d: Derivation, new: str) -> Derivation:
        f = d.conclusion
        if isinstance(f, Quant):
            x = f.vars[0]
            return infer("Bound", Quant((new,), substitute(f.body, Var(new), x), f.dual), d)
        x = f.var
        body = substitute(f.body, Var(new), x)
        if isinstance(f, Forall):
            inst = infer("AllE", body, d, t=Var(new))
            return infer("AllI", Forall(new, body), inst)
        h = self.label()
        hyp = assume(h, f.body)
        intro = infer("ExI", Exists(new, body), hyp, t=Var(x))
        return infer("ExE", intro.conclusion, d, intro, discharge=(h,))

    def rename_apart(self, d: Derivation, seen: set[str] | None = None) -> Derivation:
        """Top-down: a binder whose variable was already bound gets a fresh one."""
        seen = set() if seen is None else seen
        f = d.conclusion
        if isinstance(f, Binder):
            if isinstance(f, Quant) and len(f.vars) != 1:
                raise NormalFormError("normalization handles unary quantifiers only")
            x = bound_vars_of(f)[0]
            if x in seen:
                d = self.rename_binder(d, self.fresh(x))
                x = bound_vars_of(d.conclusion)[0]
            seen.add(x)
            return self.descend(d, "B", lambda e: self.rename_apart(e, seen))
        if isinstance(f, (And, Or)):
            d = self.descend(d, "L", lambda e: self.rename_apart(e, seen))
            return self.descend(d, "R", lambda e: self.rename_apart(e, seen))
        return d

    # -- Step 0: negation normal form over binders --------------------------------

    def nnf(self, d: Derivation) -> Derivation:
        f = d.conclusion
        if isinstance(f, Not):
            if not _has_binder(f.body):
                return d
            if _has_quant(f.body):
                raise NormalFormError(f"negation over a Q/Qd formula is not supported: {render(f)}")
            return self.nnf(self.push_negation(d))
        if isinstance(f, Binder):
            return self.descend(d, "B", self.nnf)
        if isinstance(f, (And, Or)):
            d = self.descend(d, "L", self.nnf)
            return self.descend(d, "R", self.nnf)
        return d

    def push_negation(self, d: Derivation) -> Derivation:
        """One classical step pushing ¬ inward; body is flat and has a binder."""
        neg = d.conclusion
        g = neg.body
        bot = Bot()
        if isinstance(g, Not):
            a = self.label()
            hyp = assume(a, Not(g.body))
            contra = infer("BotI", bot, hyp, d)
            return infer("RAA", g.body, contra, discharge=(a,))
        if isinstance(g, Or):
            parts = []
            for side in (g.left, g.right):
                a = self.label()
                hyp = assume(a, side)
                disj = infer("OrI", g, hyp)
                contra = infer("BotI", bot, disj, d)
                parts.append(infer("NegI", Not(side), contra, discharge=(a,)))
            return infer("AndI", And(parts[0].conclusion, parts[1].conclusion), *parts)
        if isinstance(g, And):
            goal = Or(Not(g.left), Not(g.right))
            c = self.label()
            outer = assume(c, Not(goal))
            parts = []
            for side in (g.left, g.right):
                a = self.label()
                hyp = assume(a, Not(side))
                disj = infer("OrI", goal, hyp)
                contra = infer("BotI", bot, disj, outer)
                parts.append(infer("RAA", side, contra, discharge=(a,)))
            both = infer("AndI", g, *parts)
            contra = infer("BotI", bot, both, d)
            return infer("RAA", goal, contra, discharge=(c,))
        if isinstance(g, Exists):
            y = self.fresh(g.var)
            body_y = substitute(g.body, Var(y), g.var)
            a = self.label()
            hyp = assume(a, body_y)
            ex = infer("ExI", g, hyp, t=Var(y))
            contra = infer("BotI", bot, ex, d)
            neg_y = infer("NegI", Not(body_y), contra, discharge=(a,))
            return infer("AllI", Forall(y, neg_y.conclusion), neg_y)
        if isinstance(g, Forall):
            y = self.fresh(g.var)
            goal = Exists(y, Not(substitute(g.body, Var(y), g.var)))
            c = self.label()
            outer = assume(c, Not(goal))
            a = self.label()
            hyp = assume(a, Not(g.body))
            ex = infer("ExI", goal, hyp, t=Var(g.var))
            contra = infer("BotI", bot, ex, outer)
            body = infer("RAA", g.body, contra, discharge=(a,))
            univ = infer("AllI", g, body)
            contra2 = infer("BotI", bot, univ, d)
            return infer("RAA", goal, contra2, discharge=(c,))
        raise NormalFormError(f"cannot push negation through {render(g)}")

    # -- Step 0: unnesting complex dependence arguments ------------------------------

    def unnest(self, d: Derivation) -> Derivation:
        f = d.conclusion
        if isinstance(f, Dep):
            for i, a in enumerate(f.args):
                if not isinstance(a, Var):
                    z = self.fresh("z")
                    args = f.args[:i] + (Var(z),) + f.args[i + 1:]
                    out = infer("Unnest", Exists(z, And(Dep(args), Eq(Var(z), a))), d)
                    return self.descend(out, "B", lambda e: self.descend(e, "L", self.unnest))
            return d
        if isinstance(f, Binder):
            return self.descend(d, "B", self.unnest)
        if isinstance(f, (And, Or)):
            d = self.descend(d, "L", self.unnest)
            return self.descend(d, "R", self.unnest)
        return d

    # -- Step 1: prenex form ---------------------------------------------------------

    def prenex(self, d: Derivation) -> Derivation:
        f = d.conclusion
        if isinstance(f, Binder):
            return self.descend(d, "B", self.prenex)
        if isinstance(f, (And, Or)):
            d = self.descend(d, "L", self.prenex)
            d = self.descend(d, "R", self.prenex)
            return self.pull(d)
        return d

    def pull(self, d: Derivation) -> Derivation:
        f = d.conclusion
        if not isinstance(f, (And, Or)):
            return d
        if isinstance(f.left, Binder):
            d = self.scope_left(d)
        elif isinstance(f.right, Binder):
            d = self.scope_right(d)
        else:
            return d
        return self.descend(d, "B", self.pull)

    def scope_left(self, d: Derivation) -> Derivation:
        """(H x φ) ∘ ψ to H x (φ ∘ ψ)."""
        f = d.conclusion
        h_, psi = f.left, f.right
        if isinstance(f, Or):
            return infer("ScopeOr", rebind(h_, Or(h_.body, psi)), d)
        if isinstance(h_, Quant):
            return infer("ScopeAnd", rebind(h_, And(h_.body, psi)), d)
        left = infer("AndE", h_, d)
        right = infer("AndE", psi, d)
        if isinstance(h_, Forall):
            inst = infer("AllE", h_.body, left, t=Var(h_.var))
            both = infer("AndI", And(h_.body, psi), inst, right)
            return infer("AllI", Forall(h_.var, both.conclusion), both)
        h = self.label()
        hyp = assume(h, h_.body)
        both = infer("AndI", And(h_.body, psi), hyp, right)
        intro = infer("ExI", Exists(h_.var, both.conclusion), both, t=Var(h_.var))
        return infer("ExE", intro.conclusion, left, intro, discharge=(h,))

    def scope_right(self, d: Derivation) -> Derivation:
        """ψ ∘ (H x φ) to H x (ψ ∘ φ)."""
        f = d.conclusion
        psi, h_ = f.left, f.right
        if isinstance(f, Or):
            out = infer("ScopeOr", rebind(h_, Or(h_.body, psi)), self.comm(d))
            return self.descend(out, "B", self.comm)
        if isinstance(h_, Quant):
            out = infer("ScopeAnd", rebind(h_, And(h_.body, psi)), self.swap_and(d))
            return self.descend(out, "B", self.swap_and)
        left = infer("AndE", psi, d)
        right = infer("AndE", h_, d)
        if isinstance(h_, Forall):
            inst = infer("AllE", h_.body, right, t=Var(h_.var))
            both = infer("AndI", And(psi, h_.body), left, inst)
            return infer("AllI", Forall(h_.var, both.conclusion), both)
        h = self.label()
        hyp = assume(h, h_.body)
        both = infer("AndI", And(psi, h_.body), left, hyp)
        intro = infer("ExI", Exists(h_.var, both.conclusion), both, t=Var(h_.var))
        return infer("ExE", intro.conclusion, right, intro, discharge=(h,))

    # -- Step 2: dependence atoms into an ∃-block --------------------------------------

    def distribute(self, d: Derivation) -> Derivation:
        f = d.conclusion
        if is_flat(f):
            return d
        if isinstance(f, Dep):
            z = self.fresh("z")
            args = f.args[:-1] + (Var(z),)
            return infer("Unnest", Exists(z, And(Dep(args), Eq(Var(z), f.args[-1]))), d)
        if isinstance(f, (And, Or)):
            d = self.descend(d, "L", self.distribute)
            d = self.descend(d, "R", self.distribute)
            f = d.conclusion
            left = split_dep_block(f.left)
            right = split_dep_block(f.right)
            if left is None or right is None:
                raise NormalFormError(f"unexpected shape in Step 2: {render(f)}")
            if isinstance(f, Or):
                ys, deps, body = left[0] + right[0], left[1] + right[1], Or(left[2], right[2])
                return infer("DepDist", _block(ys, deps, body), d)
            return self.merge_and(d, left, right)
        raise NormalFormError(f"Step 2 expects a quantifier-free formula, got {render(f)}")

    def open_block(self, d: Derivation, cont: Callable[[Derivation], Derivation]) -> Derivation:
        """Eliminate the leading ∃ binders of ``d``; ``cont`` gets a derivation of the body."""
        f = d.conclusion
        if not isinstance(f, Exists):
            return cont(d)
        h = self.label()
        hyp = assume(h, f.body)
        inner = self.open_block(hyp, cont)
        return infer("ExE", inner.conclusion, d, inner, discharge=(h,))

    def close_block(self, ys: list[str], d: Derivation) -> Derivation:
        for y in reversed(ys):
            d = infer("ExI", Exists(y, d.conclusion), d, t=Var(y))
        return d

    def block_parts(self, d: Derivation, n: int) -> tuple[list[Derivation], Derivation]:
        """From a derivation of ``⋀ deps ∧ θ`` (or θ when n = 0) get the deps and θ."""
        if n == 0:
            return [], d
        f = d.conclusion
        deps = _conjuncts(infer("AndE", f.left, d), n)
        return deps, infer("AndE", f.right, d)

    def merge_and(self, d: Derivation, left, right) -> Derivation:
        """∃ȳ(D1 ∧ θ1) ∧ ∃w̄(D2 ∧ θ2) to ∃ȳ∃w̄(D1 ∧ D2 ∧ (θ1 ∧ θ2))."""
        f = d.conclusion
        ys1, _, _ = left
        ys2, _, _ = right
        a = infer("AndE", f.left, d)
        b = infer("AndE", f.right, d)

        def inner(da: Derivation) -> Derivation:
            def innermost(db: Derivation) -> Derivation:
                deps1, th1 = self.block_parts(da, len(ys1))
                deps2, th2 = self.block_parts(db, len(ys2))
                theta = infer("AndI", And(th1.conclusion, th2.conclusion), th1, th2)
                body = _and_all(deps1 + deps2)
                full = infer("AndI", And(body.conclusion, theta.conclusion), body, theta)
                return self.close_block(ys1 + ys2, full)
            return self.open_block(b, innermost)
        return self.open_block(a, inner)

    # -- Step 4: dependence introduction -------------------------------------------------

    def introduce(self, d: Derivation, order: dict[str, int]) -> Derivation:
        """Move every prefix ∃ into the ∃-block, right to left."""
        while True:
            pos = self._last_prefix_exists(d.conclusion)
            if pos is None:
                return d
            d = self.under_prefix(d, lambda e: self.move_exists(e, order), pos)

    @staticmethod
    def _prefix_split(f: Formula) -> tuple[list[Formula], int]:
        """Binder chain and the index where the trailing governed ∃-block starts."""
        chain = []
        g = f
        while isinstance(g, Binder):
            chain.append(g)
            g = g.body
        n = 0
        if isinstance(g, And):
            k = 0
            while k < len(chain) and isinstance(chain[len(chain) - 1 - k], Exists):
                k += 1
            for cand in range(k, 0, -1):
                parts = unbig_and(g.left, cand)
                ys = [c.var for c in chain[len(chain) - cand:]]
                if parts and all(isinstance(p, Dep) and p.args[-1] == Var(y) for p, y in zip(parts, ys)):
                    n = cand
                    break
        return chain, len(chain) - n

    def _last_prefix_exists(self, f: Formula) -> int | None:
        chain, start = self._prefix_split(f)
        for i in range(start - 1, -1, -1):
            if isinstance(chain[i], Exists):
                return i
        return None

    def move_exists(self, d: Derivation, order: dict[str, int]) -> Derivation:
        """Push ∃x below every non-∃ binder after it, then into the ∃-block."""
        if not isinstance(d.conclusion.body, (Forall, Quant)):
            return self.push_into_block(self.d5(d, order))

        def step(e: Derivation) -> Derivation:
            # e concludes ∃x (dep ∧ φ)
            if isinstance(e.conclusion.body.right, (Forall, Quant)):
                e = self.descend(e, "B", self.scope_right)
                e = self.swap(e, order)
                # only the atom from the first swap is kept
                e = self.descend(e, "B", self.drop_first_conjunct)
                return self.descend(e, "B", step)
            return self.push_into_block(e)

        return self.descend(self.swap(d, order), "B", step)

    def swap(self, d: Derivation, order: dict[str, int]) -> Derivation:
        """Rule 11: ∃x H y φ to H y ∃x (dep(z̄, x) ∧ φ)."""
        f = d.conclusion
        x, inner = f.var, f.body
        y = bound_vars_of(inner)[0]
        phi = inner.body
        zs = sorted(free_variables(phi) - {x, y}, key=lambda v: (order.get(v, len(order)), v))
        atom = Dep(tuple(Var(z) for z in zs) + (Var(x),))
        return infer("DepIntro", rebind(inner, Exists(x, And(atom, phi))), d)

    def d5(self, d: Derivation, order: dict[str, int]) -> Derivation:
        """∃x χ to ∃x (dep(z̄, x) ∧ χ) with z̄ = FV(χ) - {x}."""
        f = d.conclusion
        x, chi = f.var, f.body
        y = self.fresh("u")
        h = self.label()
        hyp = assume(h, chi)
        univ = infer("AllI", Forall(y, chi), hyp)
        intro = infer("ExI", Exists(x, univ.conclusion), univ, t=Var(x))
        elim = infer("ExE", intro.conclusion, d, intro, discharge=(h,))
        swapped = self.swap(elim, order)
        return infer("AllE", swapped.conclusion.body, swapped, t=Var(y))

    def push_into_block(self, d: Derivation) -> Derivation:
        """∃x (dep ∧ ∃w̄(D ∧ θ)) to ∃x ∃w̄ (dep ∧ D ∧ θ)."""
        def rw(e: Derivation) -> Derivation:
            g = e.conclusion
            parts = split_dep_block(g.right)
            if parts is None:
                raise NormalFormError(f"unexpected shape in Step 4: {render(g)}")
            ws = parts[0]
            if not ws:
                return e
            atom = infer("AndE", g.left, e)
            rest = infer("AndE", g.right, e)

            def innermost(b: Derivation) -> Derivation:
                deps, theta = self.block_parts(b, len(ws))
                body = _and_all([atom] + deps)
                full = infer("AndI", And(body.conclusion, theta.conclusion), body, theta)
                return self.close_block(ws, full)
            return self.open_block(rest, innermost)
        return self.descend(d, "B", rw)


def _block(ys, deps, body) -> Formula:
    out = And(big_and(deps), body) if ys else body
    for y in reversed(ys):
        out = Exists(y, out)
    return out


# ---------------------------------------------------------------------------
# Public operations


def _binder_order(f: Formula) -> dict[str, int]:
    out: dict[str, int] = {}
    for g in subformulas(f):
        if isinstance(g, Binder):
            for v in bound_vars_of(g):
                out.setdefault(v, len(out))
    return out


def _check_input(sigma: Formula) -> None:
    fv = free_variables(sigma)
    if fv:
        raise NormalFormError(f"not a sentence: free variables {sorted(fv)}")
    for g in subformulas(sigma):
        if isinstance(g, Quant) and len(g.vars) != 1:
            raise NormalFormError("normalization handles unary quantifiers only")


def _pipeline(sigma: Formula, label: str, upto: str) -> Derivation:
    fresh = FreshNames(all_variables(sigma))
    b = Builder(fresh)
    d = assume(label, sigma)
    with deep_recursion():
        d = b.rename_apart(d)
        d = b.nnf(d)
        d = b.unnest(d)
        d = b.prenex(d)
        if upto == "prenex":
            return d
        d = b.under_prefix(d, b.distribute)
        if upto == "step3":
            return d
        d = b.introduce(d, _binder_order(d.conclusion))
    return d


def to_prenex(phi: Formula) -> Formula:
    """Prenex form: renamed apart, negations below binders, binders pulled left to right."""
    _check_input(phi)
    return _pipeline(phi, "s", "prenex").conclusion


def distribute_dependence(chi: Formula) -> Formula:
    """Quantifier-free χ to ∃z̄(⋀ dep(x̄, z) ∧ θ*) with θ* flat."""
    if not is_quantifier_free(chi):
        raise NormalFormError("distribute_dependence expects a quantifier-free formula")
    fresh = FreshNames(all_variables(chi))
    b = Builder(fresh)
    with deep_recursion():
        d = b.unnest(assume("s", chi))
        d = b.prenex(d)
        return b.under_prefix(d, b.distribute).conclusion


def introduce_dependence(psi: Formula) -> NormalFormSentence:
    """Step 4 on a sentence of the shape H̄ ∃z̄(⋀ dep ∧ θ)."""
    _check_input(psi)
    if is_normal_form(psi):
        return NormalFormSentence.from_formula(psi)
    chain, start = Builder._prefix_split(psi)
    body = chain[-1].body if chain else psi
    if start == len(chain) and not (is_flat(body) and is_quantifier_free(body)):
        raise NormalFormError("input is not a prefix followed by a dependence block")
    b = Builder(FreshNames(all_variables(psi)))
    with deep_recursion():
        d = b.introduce(assume("s", psi), _binder_order(psi))
    return NormalFormSentence.from_formula(d.conclusion)


def normalize(sigma: Formula, label: str = "s") -> tuple[NormalFormSentence, Certificate]:
    """The normal form of a sentence and a derivation of it from the sentence."""
    _check_input(sigma)
    if is_normal_form(sigma):
        return NormalFormSentence.from_formula(sigma), Certificate(assume(label, sigma), label, sigma)
    d = _pipeline(sigma, label, "all")
    try:
        nf = NormalFormSentence.from_formula(d.conclusion)
    except NormalFormError as e:
        raise NormalFormError(f"internal: result is not in normal form ({e}): {render(d.conclusion)}") from e
    return nf, Certificate(d, label, sigma)


def normalize_formula(phi: Formula) -> tuple[NormalFormSentence, Certificate, dict[str, str]]:
    """Formula-level mode: free variables become fresh constants first."""
    fv = sorted(free_variables(phi))
    mapping = {v: f"c_{v}" for v in fv}
    sentence = substitute_many(phi, {v: Fn(c, ()) for v, c in mapping.items()})
    nf, cert = normalize(sentence)
    return nf, cert, mapping
