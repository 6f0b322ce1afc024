"""Tarskian and team semantics over weak models.

``eval_tarski`` is the classical single-assignment semantics for flat
formulas.  ``eval_team`` implements team satisfaction for the full logic.

Search notes for ``eval_team``.  Satisfaction is downward closed, so:

* the Q-clause only needs functions into the minimal sets of q;
* the disjunction clause only needs partitions of the team;
* a candidate value or set for a single row can be discarded as soon as the
  one-row team fails, and a partial choice can be discarded as soon as the
  team built so far fails.

Teams are first restricted to the free variables of the formula (locality),
which keeps the memo table small.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from operator import itemgetter
from typing import Callable, Mapping

from .model import Structure, WeakModel, index_tuple
from .syntax import (
    And, Bot, Dep, Eq, Exists, Fn, Forall, Formula, Not, Or, Quant, Rel, Term, Var,
    free_variables, is_flat,
)
from .team import Team


class EvalError(Exception):
    pass


class EvalLimitExceeded(EvalError):
    """The search budget ran out; this is not a verdict."""


@dataclass(frozen=True)
class EvalConfig:
    minimal_only: bool = True
    memo: bool = True
    limit: int = 5_000_000

    def __post_init__(self):
        if self.limit <= 0:
            raise ValueError("limit must be positive")


DEFAULT_CONFIG = EvalConfig()


def _getter(idx: tuple[int, ...]) -> Callable[[tuple], tuple]:
    if len(idx) == 1:
        i = idx[0]
        return lambda r: (r[i],)
    if not idx:
        return lambda r: ()
    return itemgetter(*idx)

Row = tuple[int, ...]
Assign = Mapping[str, int]


# ---------------------------------------------------------------------------
# Tarskian evaluation (compiled to closures)


def _compile_term(t: Term, st: Structure) -> Callable[[Assign], int]:
    if isinstance(t, Var):
        name = t.name

        def var(s: Assign) -> int:
            try:
                return s[name]
            except KeyError:
                raise EvalError(f"unbound variable {name!r}") from None
        return var
    table = st.functions.get(t.name)
    if table is None:
        raise EvalError(f"function symbol {t.name!r} not interpreted")
    args = [_compile_term(a, st) for a in t.args]
    if not args:
        const = table[()]
        return lambda s: const
    return lambda s: table[tuple(a(s) for a in args)]


def _compile_flat(f: Formula, W: WeakModel) -> Callable[[dict], bool]:
    st = W.structure
    if isinstance(f, Rel):
        rows = st.relations.get(f.name)
        if rows is None:
            raise EvalError(f"relation symbol {f.name!r} not interpreted")
        args = [_compile_term(a, st) for a in f.args]
        return lambda s: tuple(a(s) for a in args) in rows
    if isinstance(f, Eq):
        left = _compile_term(f.left, st)
        right = _compile_term(f.right, st)
        return lambda s: left(s) == right(s)
    if isinstance(f, Bot):
        return lambda s: False
    if isinstance(f, Not):
        body = _compile_flat(f.body, W)
        return lambda s: not body(s)
    if isinstance(f, And):
        l, r = _compile_flat(f.left, W), _compile_flat(f.right, W)
        return lambda s: l(s) and r(s)
    if isinstance(f, Or):
        l, r = _compile_flat(f.left, W), _compile_flat(f.right, W)
        return lambda s: l(s) or r(s)
    if isinstance(f, (Exists, Forall)):
        body = _compile_flat(f.body, W)
        x = f.var
        n = st.size
        test = any if isinstance(f, Exists) else all

        def quant(s: dict) -> bool:
            s2 = dict(s)

            def at(a):
                s2[x] = a
                return body(s2)
            return test(at(a) for a in range(n))
        return quant
    if isinstance(f, Quant):
        body = _compile_flat(f.body, W)
        q = W.qd if f.dual else W.q
        xs = f.vars
        n = st.size
        k = len(xs)
        if k != q.arity:
            raise EvalError(f"quantifier binds {k} variables but the interpretation has arity {q.arity}")
        cells = [index_tuple(i, n, k) for i in range(n ** k)]

        def gq(s: dict) -> bool:
            s2 = dict(s)
            mask = 0
            for i, tup in enumerate(cells):
                s2.update(zip(xs, tup))
                if body(s2):
                    mask |= 1 << i
            return q.member_mask(mask)
        return gq
    if isinstance(f, Dep):
        raise EvalError("dependence atom in a flat context")
    raise TypeError(f)


def eval_tarski(W: WeakModel, s: Assign, f: Formula) -> bool:
    """``W, s ⊨ f`` for a flat formula ``f``."""
    if not is_flat(f):
        raise EvalError("Tarskian evaluation needs a formula without dependence atoms")
    missing = free_variables(f) - set(s)
    if missing:
        raise EvalError(f"unbound free variables {sorted(missing)}")
    return _compile_flat(f, W)(dict(s))


# ---------------------------------------------------------------------------
# Team semantics


class TeamEvaluator:
    """Team satisfaction for one weak model; caches compiled formulas and verdicts."""

    def __init__(self, W: WeakModel, cfg: EvalConfig = DEFAULT_CONFIG):
        self.W = W
        self.n = W.structure.size
        self.cfg = cfg
        self.nodes = 0
        self._memo: dict = {}
        self._info: dict[int, tuple] = {}
        self._keep: list[Formula] = []
        self._plans: dict = {}
        self._flat_rows: dict = {}
        self._dep_args: dict = {}

    # -- per-node caches -------------------------------------------------

    def info(self, f: Formula) -> tuple:
        """(sorted free variables, flat?, compiled Tarski test or None)."""
        key = id(f)
        got = self._info.get(key)
        if got is None:
            flat = is_flat(f)
            got = (tuple(sorted(free_variables(f))), flat, _compile_flat(f, self.W) if flat else None)
            self._info[key] = got
            self._keep.append(f)
        return got

    def _restrict(self, vars_: tuple, rows: frozenset, target: tuple) -> frozenset:
        if vars_ == target:
            return rows
        plan = self._plans.get((vars_, target))
        if plan is None:
            pos = {v: i for i, v in enumerate(vars_)}
            try:
                plan = _getter(tuple(pos[v] for v in target))
            except KeyError as e:
                raise EvalError(f"unbound variable {e.args[0]!r}") from None
            self._plans[(vars_, target)] = plan
        return frozenset(map(plan, rows))

    def _ext_plan(self, vars_: tuple, names: tuple) -> tuple[tuple, tuple]:
        key = ("ext", vars_, names)
        got = self._plans.get(key)
        if got is None:
            new_vars = tuple(sorted(set(vars_) | set(names)))
            src = {v: i for i, v in enumerate(vars_)}
            tgt = {v: i for i, v in enumerate(names)}
            width = len(vars_)
            plan = _getter(tuple(width + tgt[v] if v in tgt else src[v] for v in new_vars))
            got = (new_vars, plan)
            self._plans[key] = got
        return got

    @staticmethod
    def _ext_row(row: Row, vals: tuple, plan: Callable) -> Row:
        return plan(row + vals)

    # -- entry points ----------------------------------------------------

    def sat(self, f: Formula, X: Team) -> bool:
        fv = self.info(f)[0]
        missing = set(fv) - set(X.vars)
        if missing:
            raise EvalError(f"unbound free variables {sorted(missing)}")
        return self._sat(f, X.vars, X.rows)

    def _sat(self, f: Formula, vars_: tuple, rows: frozenset) -> bool:
        if not rows:
            return True
        fv, flat, test = self.info(f)
        rows = self._restrict(vars_, rows, fv)
        if flat:
            cache = self._flat_rows
            fid = id(f)
            for r in rows:
                ok = cache.get((fid, r))
                if ok is None:
                    ok = cache[(fid, r)] = test(dict(zip(fv, r)))
                if not ok:
                    return False
            return True
        key = (id(f), rows)
        if self.cfg.memo:
            got = self._memo.get(key)
            if got is not None:
                return got
        self.nodes += 1
        if self.nodes > self.cfg.limit:
            raise EvalLimitExceeded(f"explored more than {self.cfg.limit} nodes")
        result = self._clause(f, fv, rows)
        if self.cfg.memo:
            self._memo[key] = result
        return result

    def _clause(self, f: Formula, fv: tuple, rows: frozenset) -> bool:
        if isinstance(f, Dep):
            return self._dep(f, fv, rows)
        if isinstance(f, And):
            return self._sat(f.left, fv, rows) and self._sat(f.right, fv, rows)
        if isinstance(f, Or):
            return self._or(f, fv, rows)
        if isinstance(f, Forall):
            new_vars, plan = self._ext_plan(fv, (f.var,))
            ext = frozenset(self._ext_row(r, (a,), plan) for r in rows for a in range(self.n))
            return self._sat(f.body, new_vars, ext)
        if isinstance(f, Exists):
            choices = [(a,) for a in range(self.n)]
            return self._choose(f.body, (f.var,), fv, rows, lambda row: choices)
        if isinstance(f, Quant):
            q = self.W.qd if f.dual else self.W.q
            if len(f.vars) != q.arity:
                raise EvalError(f"quantifier binds {len(f.vars)} variables but the "
                                f"interpretation has arity {q.arity}")
            masks = q.minimal_masks if self.cfg.minimal_only else tuple(q.members())
            k = q.arity
            sets = [tuple(index_tuple(i, self.n, k) for i in range(self.n ** k) if m >> i & 1)
                    for m in masks]
            return self._choose(f.body, f.vars, fv, rows, lambda row: sets, multi=True)
        raise TypeError(f)

    def _dep(self, f: Dep, fv: tuple, rows: frozenset) -> bool:
        args = self._dep_args.get(id(f))
        if args is None:
            st = self.W.structure
            args = self._dep_args[id(f)] = [_compile_term(a, st) for a in f.args]
        seen: dict[tuple, int] = {}
        for r in rows:
            s = dict(zip(fv, r))
            vals = [a(s) for a in args]
            key = tuple(vals[:-1])
            if seen.setdefault(key, vals[-1]) != vals[-1]:
                return False
        return True

    def _or(self, f: Or, fv: tuple, rows: frozenset) -> bool:
        left_flat = self.info(f.left)[1]
        right_flat = self.info(f.right)[1]
        ok_l = {r: self._sat(f.left, fv, frozenset((r,))) for r in rows}
        ok_r = {r: self._sat(f.right, fv, frozenset((r,))) for r in rows}
        if any(not ok_l[r] and not ok_r[r] for r in rows):
            return False
        if left_flat:
            return self._sat(f.right, fv, frozenset(r for r in rows if not ok_l[r]))
        if right_flat:
            return self._sat(f.left, fv, frozenset(r for r in rows if not ok_r[r]))
        Y = frozenset(r for r in rows if not ok_r[r])
        Z = frozenset(r for r in rows if not ok_l[r])
        if not (self._sat(f.left, fv, Y) and self._sat(f.right, fv, Z)):
            return False
        free = sorted(r for r in rows if ok_l[r] and ok_r[r])

        def go(i: int, Y: frozenset, Z: frozenset) -> bool:
            if i == len(free):
                return True
            r = free[i]
            Y2 = Y | {r}
            if self._sat(f.left, fv, Y2) and go(i + 1, Y2, Z):
                return True
            Z2 = Z | {r}
            return self._sat(f.right, fv, Z2) and go(i + 1, Y, Z2)
        return go(0, Y, Z)

    def _choose(self, body: Formula, names: tuple, fv: tuple, rows: frozenset,
                options: Callable[[Row], list], multi: bool = False) -> bool:
        """Search a choice per row (a value tuple, or a set of them when ``multi``)."""
        body_fv = self.info(body)[0]
        if not set(names) & set(body_fv):
            # the bound variables are vacuous; any (non-empty) choice will do
            return self._sat(body, fv, rows)
        new_vars, plan = self._ext_plan(fv, names)

        def extend(r: Row, choice) -> frozenset:
            if multi:
                return frozenset(self._ext_row(r, a, plan) for a in choice)
            return frozenset((self._ext_row(r, choice, plan),))

        cands: dict[Row, list[frozenset]] = {}
        for r in rows:
            good = []
            seen = set()
            for c in options(r):
                ext = extend(r, c)
                key = self._restrict(new_vars, ext, body_fv)
                if key in seen:
                    continue
                if self._sat(body, new_vars, ext):
                    seen.add(key)
                    good.append(ext)
            if not good:
                return False
            cands[r] = good
        if self.info(body)[1]:
            return True
        order = sorted(rows, key=lambda r: (len(cands[r]), r))

        def go(i: int, acc: frozenset) -> bool:
            if i == len(order):
                return True
            for ext in cands[order[i]]:
                nxt = acc | ext
                if self._sat(body, new_vars, nxt) and go(i + 1, nxt):
                    return True
            return False
        return go(0, frozenset())


def eval_team(W: WeakModel, X: Team, f: Formula, cfg: EvalConfig = DEFAULT_CONFIG) -> bool:
    """``W, X ⊨ f`` in team semantics."""
    return TeamEvaluator(W, cfg).sat(f, X)


def check_sentence(W: WeakModel, sentence: Formula, cfg: EvalConfig = DEFAULT_CONFIG) -> bool:
    """``W ⊨ σ``, i.e. satisfaction by the team ``{∅}``."""
    fv = free_variables(sentence)
    if fv:
        raise EvalError(f"not a sentence: free variables {sorted(fv)}")
    return eval_team(W, Team.unit(), sentence, cfg)


def as_generalized(f: Formula) -> Formula:
    """Replace ``E x`` by ``Q x`` and ``A x`` by ``Qd x``.

    Evaluated with q = the existential interpretation (whose dual is the
    universal one) this must agree with the native clauses.
    """
    if isinstance(f, Exists):
        return Quant((f.var,), as_generalized(f.body), False)
    if isinstance(f, Forall):
        return Quant((f.var,), as_generalized(f.body), True)
    if isinstance(f, Quant):
        raise EvalError("formula already uses Q")
    if isinstance(f, Not):
        return Not(as_generalized(f.body))
    if isinstance(f, (And, Or)):
        return type(f)(as_generalized(f.left), as_generalized(f.right))
    return f
