"""A definitional team-semantics evaluator used only as a test oracle.

Every clause searches its full witness space: all covers for ∨, all functions
for ∃, all functions into every member of q for Q.  Exponential; keep inputs tiny.
"""

import itertools

from teamlogic.model import tuples_of
from teamlogic.syntax import And, Bot, Dep, Eq, Exists, Fn, Forall, Not, Or, Quant, Rel, Var


def value(W, t, s):
    if isinstance(t, Var):
        return s[t.name]
    args = tuple(value(W, a, s) for a in t.args)
    return W.structure.functions[t.name][args]


def tarski(W, s, f):
    if isinstance(f, Rel):
        return tuple(value(W, a, s) for a in f.args) in W.structure.relations[f.name]
    if isinstance(f, Eq):
        return value(W, f.left, s) == value(W, f.right, s)
    if isinstance(f, Bot):
        return False
    if isinstance(f, Not):
        return not tarski(W, s, f.body)
    if isinstance(f, And):
        return tarski(W, s, f.left) and tarski(W, s, f.right)
    if isinstance(f, Or):
        return tarski(W, s, f.left) or tarski(W, s, f.right)
    M = range(W.size)
    if isinstance(f, Exists):
        return any(tarski(W, {**s, f.var: a}, f.body) for a in M)
    if isinstance(f, Forall):
        return all(tarski(W, {**s, f.var: a}, f.body) for a in M)
    if isinstance(f, Quant):
        (x,) = f.vars
        q = W.qd if f.dual else W.q
        return q.member([(a,) for a in M if tarski(W, {**s, x: a}, f.body)])
    raise TypeError(f)


def _members(q):
    return [sorted(t[0] for t in tuples_of(m, q.universe_size, 1)) for m in q.members()]


def team(W, X, f):
    """X is a list of dict assignments."""
    M = range(W.size)
    if isinstance(f, Dep):
        seen = {}
        for s in X:
            key = tuple(value(W, a, s) for a in f.args[:-1])
            v = value(W, f.args[-1], s)
            if seen.setdefault(key, v) != v:
                return False
        return True
    if isinstance(f, And):
        return team(W, X, f.left) and team(W, X, f.right)
    if isinstance(f, Or):
        n = len(X)
        for picks in itertools.product((0, 1, 2), repeat=n):
            Y = [s for s, p in zip(X, picks) if p in (0, 2)]
            Z = [s for s, p in zip(X, picks) if p in (1, 2)]
            if team(W, Y, f.left) and team(W, Z, f.right):
                return True
        return False
    if isinstance(f, Exists):
        for vals in itertools.product(M, repeat=len(X)):
            if team(W, _dedup([{**s, f.var: a} for s, a in zip(X, vals)]), f.body):
                return True
        return False
    if isinstance(f, Forall):
        return team(W, _dedup([{**s, f.var: a} for s in X for a in M]), f.body)
    if isinstance(f, Quant):
        (x,) = f.vars
        q = W.qd if f.dual else W.q
        for sets in itertools.product(_members(q), repeat=len(X)):
            if team(W, _dedup([{**s, x: a} for s, A in zip(X, sets) for a in A]), f.body):
                return True
        return False
    return all(tarski(W, s, f) for s in X)


def _dedup(X):
    out, seen = [], set()
    for s in X:
        k = tuple(sorted(s.items()))
        if k not in seen:
            seen.add(k)
            out.append(s)
    return out
