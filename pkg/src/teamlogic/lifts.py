"""Ramsey and branching lifts of Q written with dependence atoms, plus their
direct second-order readings used as oracles.

Both encodings take a binary relation symbol ``G`` as the lifted formula
``φ(u, u')`` and no parameters, so every ``dep(z̄, ...)`` has empty ``z̄``.
"""

from __future__ import annotations

import itertools

from .model import WeakModel, tuples_of
from .syntax import Formula, parse

# With the inner antecedent as printed ("u = u' -> v' = w") the formula only
# says ∀u∈A ∀u' φ; the intended reading bounds u' by A as well, which needs x.
RAMSEY = (
    "E w (dep(w) & Q x E y (y = w & "
    "A u E v (dep(u,v) & (x = u -> v = w) & "
    "A u2 E v2 (dep(u2,v2) & (x = u2 -> v2 = w) & "
    "((v = w & v2 = w) -> {phi})))))"
)

BRANCHING = (
    "E w E w2 (dep(w) & dep(w2) & "
    "Q x E y (y = w & dep(x,y) & "
    "Q x2 E y2 (y2 = w2 & dep(x2,y2) & "
    "A u E v (dep(u,v) & (x = u -> v = w) & "
    "A u2 E v2 (dep(u2,v2) & (x2 = u2 -> v2 = w2) & "
    "((v = w & v2 = w2) -> {phi}))))))"
)


def ramsey_lift(relation: str = "G") -> Formula:
    return parse(RAMSEY.format(phi=f"{relation}(u,u2)"))


def branching_lift(relation: str = "G") -> Formula:
    return parse(BRANCHING.format(phi=f"{relation}(u,u2)"))


def _members(W: WeakModel) -> list[frozenset[int]]:
    q = W.q
    return [frozenset(t[0] for t in tuples_of(m, q.universe_size, 1)) for m in q.members()]


def ramsey_direct(W: WeakModel, relation: str = "G") -> bool:
    """``∃A ∈ q ∀x∈A ∀y∈A G(x, y)``."""
    rel = W.structure.relations[relation]
    return any(all((a, b) in rel for a in A for b in A) for A in _members(W))


def branching_direct(W: WeakModel, relation: str = "G") -> bool:
    """``∃A ∈ q ∃B ∈ q ∀x∈A ∀y∈B G(x, y)``."""
    rel = W.structure.relations[relation]
    sets = _members(W)
    return any(all((a, b) in rel for a in A for b in B) for A, B in itertools.product(sets, sets))
