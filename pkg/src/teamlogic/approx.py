"""Approximations A^kσ and Bσ, the Skolem translation Sσ, and finite oracles.

For σ in normal form with prefix x1 … xm and block y1 … yn, the k-th
approximation uses the variables ``x{p}_{j}`` and ``y{i}_{j}`` (1-based,
copy j of x_p and y_i):

    ∀x̄_1 ∃ȳ_1 … ∀x̄_k ∃ȳ_k ( ⋀_j R(x̄_j) → ⋀_j θ(x̄_j, ȳ_j) ∧ ⋀ agreements )

with one agreement ``x̄^i_j = x̄^i_j' → y{i}_j = y{i}_j'`` for each i and each
j < j'.  The cases j = j' are tautologies and j > j' repeat j < j', so A¹σ is
exactly ``∀x̄∃ȳ(R(x̄) → θ)``.  Dependence arguments that are earlier block
variables use their copy in the same round.

``eval_approximation`` decides ``(W, r) ⊨ A^kσ`` as a game: the universal
player picks rows of r, the existential player answers with a consistent
ȳ.  Repeating a row never helps the universal player, and for k ≥ |r| the
game reduces to finding one consistent choice per row.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .model import Structure, WeakModel
from .normalform import NormalFormSentence, wrap_prefix
from .semantics import DEFAULT_CONFIG, EvalConfig, _compile_flat, check_sentence, eval_tarski
from .syntax import (
    Exists, Fn, Forall, Formula, Rel, Term, Var, big_and, implies, subformulas, substitute_many,
    symbols, tuple_eq,
)

Relation = frozenset[tuple[int, ...]]


def x_name(p: int, j: int) -> str:
    return f"x{p}_{j}"


def y_name(i: int, j: int) -> str:
    return f"y{i}_{j}"


def make_B(nf: NormalFormSentence, R: str) -> Formula:
    """H¹x1 … H^m xm R(x1, …, xm)."""
    return wrap_prefix(nf.prefix, Rel(R, tuple(Var(x) for x in nf.prefix_vars)))


def _copy_map(nf: NormalFormSentence, j: int) -> dict[str, Var]:
    out = {x: Var(x_name(p, j)) for p, x in enumerate(nf.prefix_vars, 1)}
    out.update({y: Var(y_name(i, j)) for i, y in enumerate(nf.block_vars, 1)})
    return out


def make_A(nf: NormalFormSentence, R: str, k: int) -> Formula:
    if not isinstance(k, int) or k < 1:
        raise ValueError("approximation index must be at least 1")
    copies = [_copy_map(nf, j) for j in range(1, k + 1)]
    m = len(nf.prefix)
    xs = [[c[x] for x in nf.prefix_vars] for c in copies]
    rs = [Rel(R, tuple(row)) for row in xs]
    parts = [substitute_many(nf.matrix, c) for c in copies]
    for i, (y, args) in enumerate(nf.block):
        for j in range(k):
            for j2 in range(j + 1, k):
                eq_y = tuple_eq([copies[j][y]], [copies[j2][y]])
                same = tuple_eq([copies[j][a] for a in args], [copies[j2][a] for a in args])
                parts.append(eq_y if same is None else implies(same, eq_y))
    out = implies(big_and(rs), big_and(parts))
    for j in range(k, 0, -1):
        for i in range(len(nf.block), 0, -1):
            out = Exists(y_name(i, j), out)
        for p in range(m, 0, -1):
            out = Forall(x_name(p, j), out)
    return out


def recognize_approximation(nf: NormalFormSentence, R: str, f: Formula) -> str | int | None:
    """``"B"`` if f is Bσ, k if f is A^kσ, otherwise None."""
    if f == make_B(nf, R):
        return "B"
    k = sum(1 for g in subformulas(f) if isinstance(g, Rel) and g.name == R)
    if k >= 1 and f == make_A(nf, R, k):
        return k
    return None


def fresh_symbol(base: str, taken: Iterable[str]) -> str:
    taken = set(taken)
    if base not in taken:
        return base
    i = 1
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"


@dataclass
class ApproximationBundle:
    nf: NormalFormSentence
    R: str
    B: Formula = field(init=False)

    def __post_init__(self):
        rels, funs = symbols(self.nf.formula())
        if self.R in rels or self.R in funs:
            raise ValueError(f"{self.R} is not fresh for σ")
        self.B = make_B(self.nf, self.R)

    @classmethod
    def fresh(cls, nf: NormalFormSentence, base: str = "R") -> "ApproximationBundle":
        rels, funs = symbols(nf.formula())
        return cls(nf, fresh_symbol(base, set(rels) | set(funs)))

    @property
    def arity(self) -> int:
        return len(self.nf.prefix)

    def A(self, k: int) -> Formula:
        return make_A(self.nf, self.R, k)


# ---------------------------------------------------------------------------
# Skolem translation


@dataclass(frozen=True)
class SkolemForm:
    sentence: Formula
    functions: tuple[tuple[str, int], ...]


def skolem_terms(nf: NormalFormSentence, names: tuple[str, ...]) -> dict[str, Term]:
    """y_i ↦ f_i(x̄^i), with earlier block variables replaced by their own terms."""
    terms: dict[str, Term] = {}
    for (y, args), f in zip(nf.block, names):
        terms[y] = Fn(f, tuple(terms.get(a, Var(a)) for a in args))
    return terms


def skolemize(nf: NormalFormSentence, names: tuple[str, ...] | None = None) -> SkolemForm:
    """H̄ θ(f_i(x̄^i)/y_i) with one fresh function per block variable."""
    if names is None:
        rels, funs = symbols(nf.formula())
        taken = set(rels) | set(funs)
        names = []
        i = 1
        while len(names) < len(nf.block):
            if f"f{i}" not in taken:
                names.append(f"f{i}")
            i += 1
        names = tuple(names)
    names = tuple(names)
    if len(names) != len(nf.block):
        raise ValueError(f"need {len(nf.block)} function names, got {len(names)}")
    terms = skolem_terms(nf, names)
    body = substitute_many(nf.matrix, terms)
    funcs = tuple((f, len(args)) for f, (_, args) in zip(names, nf.block))
    return SkolemForm(wrap_prefix(nf.prefix, body), funcs)


def skolem_expansions(W: WeakModel, sk: SkolemForm) -> Iterator[WeakModel]:
    """Every expansion of W by functions for the Skolem symbols."""
    n = W.size
    domains = []
    for name, ar in sk.functions:
        args = list(itertools.product(range(n), repeat=ar))
        domains.append([(name, dict(zip(args, vals)))
                        for vals in itertools.product(range(n), repeat=len(args))])
    for choice in itertools.product(*domains):
        yield W.with_structure(W.structure.expand(functions=dict(choice)))


def skolem_holds(W: WeakModel, sk: SkolemForm) -> bool:
    """``W ⊨ ∃f̄ Sσ`` by enumerating function tables."""
    return any(eval_tarski(V, {}, sk.sentence) for V in skolem_expansions(W, sk))


# ---------------------------------------------------------------------------
# Evaluating Bσ and A^kσ on (W, r)


def expand_with(W: WeakModel, R: str, r: Iterable[tuple[int, ...]], arity: int) -> WeakModel:
    st: Structure = W.structure.expand(relations={R: r}, relation_arity={R: arity})
    return W.with_structure(st)


def eval_B(W: WeakModel, nf: NormalFormSentence, r: Relation, R: str = "R") -> bool:
    V = expand_with(W, R, r, len(nf.prefix))
    return eval_tarski(V, {}, make_B(nf, R))


class _Game:
    """Candidate answers and agreement checks for one (W, σ)."""

    def __init__(self, W: WeakModel, nf: NormalFormSentence):
        self.nf = nf
        theta = _compile_flat(nf.matrix, W)
        px = nf.prefix_vars
        ys = nf.block_vars
        pos = {v: i for i, v in enumerate(px + ys)}
        self.keys = [tuple(pos[a] for a in args) for _, args in nf.block]
        self.width = len(px)
        ys_all = list(itertools.product(range(W.size), repeat=len(ys)))
        self.cand: dict[tuple, list[tuple]] = {}
        for xs in itertools.product(range(W.size), repeat=len(px)):
            base = dict(zip(px, xs))
            ok = []
            for yv in ys_all:
                base.update(zip(ys, yv))
                if theta(base):
                    ok.append(yv)
            self.cand[xs] = ok

    def consistent(self, a: tuple, b: tuple) -> bool:
        """Both are full rows x̄ + ȳ."""
        w = self.width
        for i, key in enumerate(self.keys):
            if all(a[p] == b[p] for p in key) and a[w + i] != b[w + i]:
                return False
        return True

    def solve(self, rows: list[tuple]) -> list[tuple] | None:
        """One consistent answer per row, by backtracking."""
        chosen: list[tuple] = []

        def go(i: int) -> bool:
            if i == len(rows):
                return True
            for yv in self.cand[rows[i]]:
                full = rows[i] + yv
                if all(self.consistent(full, c) for c in chosen):
                    chosen.append(full)
                    if go(i + 1):
                        return True
                    chosen.pop()
            return False
        return chosen if go(0) else None

    def play(self, r: Relation, k: int) -> bool:
        if k >= len(r):
            return self.solve(sorted(r)) is not None
        memo: dict = {}
        rows = sorted(r)

        def value(state: frozenset, left: int) -> bool:
            if left == 0:
                return True
            key = (state, left)
            if key in memo:
                return memo[key]
            done = {s[:self.width] for s in state}
            todo = [x for x in rows if x not in done]
            res = True
            for x in todo:
                if not any(value(state | {x + yv}, left - 1)
                           for yv in self.cand[x]
                           if all(self.consistent(x + yv, s) for s in state)):
                    res = False
                    break
            memo[key] = res
            return res
        return value(frozenset(), k)


def eval_approximation(W: WeakModel, nf: NormalFormSentence, r: Iterable[tuple[int, ...]], k: int) -> bool:
    """``(W, r) ⊨ A^kσ`` without building the sentence."""
    if k < 1:
        raise ValueError("approximation index must be at least 1")
    return _Game(W, nf).play(frozenset(tuple(t) for t in r), k)


def eval_approximation_tarski(W: WeakModel, nf: NormalFormSentence, r: Iterable[tuple[int, ...]],
                              k: int, R: str = "R") -> bool:
    """Reference evaluation of the A^kσ sentence itself."""
    V = expand_with(W, R, r, len(nf.prefix))
    return eval_tarski(V, {}, make_A(nf, R, k))


def all_relations(size: int, arity: int) -> Iterator[Relation]:
    """Subsets of M^arity by increasing size, then lexicographically."""
    cells = list(itertools.product(range(size), repeat=arity))
    for n in range(len(cells) + 1):
        for combo in itertools.combinations(cells, n):
            yield frozenset(combo)


def finite_witness(W: WeakModel, nf: NormalFormSentence,
                   cfg: EvalConfig = DEFAULT_CONFIG) -> Relation | None:
    """The first r (by size) with (W, r) ⊨ Bσ ∧ A^{|r|}σ, when W ⊨ σ."""
    if not check_sentence(W, nf.formula(), cfg):
        return None
    game = _Game(W, nf)
    R = ApproximationBundle.fresh(nf).R
    B = make_B(nf, R)
    m = len(nf.prefix)
    for r in all_relations(W.size, m):
        if eval_tarski(expand_with(W, R, r, m), {}, B) and game.play(r, max(len(r), 1)):
            return r
    return None


def approximation_oracle(W: WeakModel, nf: NormalFormSentence) -> bool:
    """∃r ⊆ M^m with (W, r) ⊨ Bσ ∧ A^{|r|}σ, by brute force over every r."""
    game = _Game(W, nf)
    R = ApproximationBundle.fresh(nf).R
    B = make_B(nf, R)
    m = len(nf.prefix)
    for r in all_relations(W.size, m):
        if eval_tarski(expand_with(W, R, r, m), {}, B) and game.play(r, max(len(r), 1)):
            return True
    return False
