"""Finite structures and weak (per-structure) interpretations of Q and Q^d.

A quantifier interpretation of type k on a universe of size n is stored as the
antichain of its inclusion-minimal member sets.  Subsets of M^k are encoded as
bitmasks over the lexicographic enumeration of M^k.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .syntax import Fn, Signature, Term, Var


class ModelError(Exception):
    pass


class TrivialQuantifierError(ModelError):
    """The requested quantifier would be trivial on this universe."""


# ---------------------------------------------------------------------------
# bitmask helpers


def tuple_index(t: Sequence[int], n: int) -> int:
    idx = 0
    for a in t:
        idx = idx * n + a
    return idx


def index_tuple(idx: int, n: int, k: int) -> tuple[int, ...]:
    out = []
    for _ in range(k):
        idx, a = divmod(idx, n)
        out.append(a)
    return tuple(reversed(out))


def mask_of(tuples: Iterable[Sequence[int]], n: int, k: int) -> int:
    m = 0
    for t in tuples:
        t = tuple(t)
        if len(t) != k or any(not 0 <= a < n for a in t):
            raise ModelError(f"tuple {t} out of range for universe {n}, arity {k}")
        m |= 1 << tuple_index(t, n)
    return m


def tuples_of(mask: int, n: int, k: int) -> frozenset[tuple[int, ...]]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(index_tuple(i, n, k))
        mask >>= 1
        i += 1
    return frozenset(out)


def minimize(masks: Iterable[int]) -> tuple[int, ...]:
    """Inclusion-minimal elements of a family of bitmasks, sorted."""
    uniq = sorted(set(masks), key=lambda m: (m.bit_count(), m))
    kept: list[int] = []
    for m in uniq:
        if not any(k & m == k for k in kept):
            kept.append(m)
    return tuple(sorted(kept))


# ---------------------------------------------------------------------------
# Quantifier interpretations


@dataclass(frozen=True)
class QuantifierInterpretation:
    """A monotone family of subsets of M^k given by its minimal members."""

    arity: int
    universe_size: int
    minimal_masks: tuple[int, ...]
    name: str = ""

    @classmethod
    def from_sets(cls, sets: Iterable[Iterable[Sequence[int]]], universe_size: int,
                  arity: int = 1, name: str = "") -> "QuantifierInterpretation":
        masks = tuple(sorted({mask_of(s, universe_size, arity) for s in sets}))
        return cls(arity, universe_size, masks, name)

    @property
    def full_mask(self) -> int:
        return (1 << self.universe_size ** self.arity) - 1

    @property
    def minimal_sets(self) -> tuple[frozenset[tuple[int, ...]], ...]:
        return tuple(tuples_of(m, self.universe_size, self.arity) for m in self.minimal_masks)

    def member_mask(self, mask: int) -> bool:
        return any(m & mask == m for m in self.minimal_masks)

    def member(self, tuples: Iterable[Sequence[int]]) -> bool:
        return self.member_mask(mask_of(tuples, self.universe_size, self.arity))

    def members(self) -> Iterable[int]:
        """Every member set as a mask (exponential; small universes only)."""
        return (a for a in range(self.full_mask + 1) if self.member_mask(a))

    def validate(self) -> list[str]:
        return validate(self)

    def __str__(self) -> str:
        return self.name or f"q{self.arity}[{len(self.minimal_masks)} minimal sets]"


def member(q: QuantifierInterpretation, tuples: Iterable[Sequence[int]]) -> bool:
    """True iff some minimal set of ``q`` is contained in ``tuples``."""
    return q.member(tuples)


def validate(q: QuantifierInterpretation) -> list[str]:
    """Diagnostics: antichain violations and failures of non-triviality."""
    problems = []
    ms = list(q.minimal_masks)
    if not ms:
        problems.append("non-triviality: empty family, so M^k is not a member")
    if 0 in ms:
        problems.append("non-triviality: the empty set is a member")
    for a, b in itertools.permutations(ms, 2):
        if a != b and a & b == a:
            problems.append(f"antichain: {sorted(tuples_of(a, q.universe_size, q.arity))} is "
                            f"contained in {sorted(tuples_of(b, q.universe_size, q.arity))}")
    if len(set(ms)) != len(ms):
        problems.append("antichain: duplicate minimal set")
    if any(m > q.full_mask or m < 0 for m in ms):
        problems.append("tuple out of range")
    return problems


def dual(q: QuantifierInterpretation) -> QuantifierInterpretation:
    """``A ∈ q^d`` iff the complement of ``A`` is not in ``q``; brute force over all A."""
    full = q.full_mask
    members = (a for a in range(full + 1) if not q.member_mask(full ^ a))
    name = ""
    if q.name:
        name = q.name[:-2] if q.name.endswith("^d") else q.name + "^d"
    return QuantifierInterpretation(q.arity, q.universe_size, minimize(members), name)


def _all_of_size(n: int, k: int, size: int) -> tuple[int, ...]:
    cells = n ** k
    return tuple(sorted(sum(1 << i for i in c) for c in itertools.combinations(range(cells), size)))


def builtin(name: str, params: Sequence[int] = (), universe_size: int = 1,
            arity: int = 1) -> QuantifierInterpretation:
    """Standard monotone quantifiers as minimal antichains.

    ``exists``, ``forall``, ``at_least(m)``, ``majority`` (strictly more than
    half) and ``fraction(p, r)`` (at least p/r of the tuples).  Counting is over
    M^arity.
    """
    n = universe_size
    if n < 1:
        raise ModelError("universe must be non-empty")
    cells = n ** arity
    if name == "exists":
        size = 1
    elif name == "forall":
        size = cells
    elif name == "at_least":
        (size,) = params
    elif name == "majority":
        size = cells // 2 + 1
    elif name == "fraction":
        p, r = params
        if r <= 0 or p < 0:
            raise ModelError("fraction needs p >= 0, r > 0")
        size = math.ceil(Fraction(p, r) * cells)
    else:
        raise ModelError(f"unknown quantifier {name!r}")
    if size < 1 or size > cells:
        raise TrivialQuantifierError(f"{name}{tuple(params) if params else ''} is trivial "
                                     f"on a universe of size {n}")
    label = name if not params else f"{name}({','.join(map(str, params))})"
    return QuantifierInterpretation(arity, n, _all_of_size(n, arity, size), label)


_BUILTIN_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*([0-9,\s]*)\))?\s*$")


def builtin_from_text(text: str, universe_size: int, arity: int = 1) -> QuantifierInterpretation:
    """``"at_least(2)"``, ``"majority"``, ``"fraction(2,3)"``, ..."""
    m = _BUILTIN_RE.match(text)
    if not m:
        raise ModelError(f"cannot parse quantifier {text!r}")
    params = [int(p) for p in m.group(2).split(",") if p.strip()] if m.group(2) else []
    return builtin(m.group(1), params, universe_size, arity)


def all_interpretations(universe_size: int, arity: int = 1) -> list[QuantifierInterpretation]:
    """Every monotone non-trivial interpretation (as minimal antichains) on M^arity.

    Enumerates antichains of non-empty subsets; feasible for n**arity <= 4.
    """
    cells = universe_size ** arity
    if cells > 4:
        raise ModelError("too many interpretations to enumerate")
    subsets = list(range(1, 1 << cells))
    out = []
    for r in range(1, len(subsets) + 1):
        for fam in itertools.combinations(subsets, r):
            if all(not (a & b == a) for a, b in itertools.permutations(fam, 2)):
                out.append(QuantifierInterpretation(arity, universe_size, tuple(sorted(fam))))
    return out


# ---------------------------------------------------------------------------
# Structures


@dataclass(frozen=True)
class Structure:
    size: int
    relations: Mapping[str, frozenset[tuple[int, ...]]] = field(default_factory=dict)
    functions: Mapping[str, Mapping[tuple[int, ...], int]] = field(default_factory=dict)
    relation_arity: Mapping[str, int] = field(default_factory=dict)
    function_arity: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.size < 1:
            raise ModelError("universe must be non-empty")
        rel_ar = dict(self.relation_arity)
        for name, rows in self.relations.items():
            for t in rows:
                ar = rel_ar.setdefault(name, len(t))
                if len(t) != ar or any(not 0 <= a < self.size for a in t):
                    raise ModelError(f"bad tuple {t} for relation {name}")
        fun_ar = dict(self.function_arity)
        for name, table in self.functions.items():
            ar = fun_ar.get(name)
            if ar is None:
                ar = len(next(iter(table))) if table else 0
                fun_ar[name] = ar
            for args in itertools.product(range(self.size), repeat=ar):
                if args not in table:
                    raise ModelError(f"function {name} undefined on {args}")
                if not 0 <= table[args] < self.size:
                    raise ModelError(f"function {name} value out of range")
        object.__setattr__(self, "relation_arity", rel_ar)
        object.__setattr__(self, "function_arity", fun_ar)

    @property
    def universe(self) -> range:
        return range(self.size)

    @property
    def signature(self) -> Signature:
        return Signature(dict(self.relation_arity), dict(self.function_arity))

    def holds(self, name: str, args: tuple[int, ...]) -> bool:
        rows = self.relations.get(name)
        if rows is None:
            raise ModelError(f"relation {name!r} not interpreted")
        return args in rows

    def value(self, t: Term, s: Mapping[str, int]) -> int:
        if isinstance(t, Var):
            try:
                return s[t.name]
            except KeyError:
                raise ModelError(f"unbound variable {t.name!r}") from None
        table = self.functions.get(t.name)
        if table is None:
            raise ModelError(f"function {t.name!r} not interpreted")
        return table[tuple(self.value(a, s) for a in t.args)]

    def expand(self, relations: Mapping[str, Iterable[tuple[int, ...]]] | None = None,
               functions: Mapping[str, Mapping[tuple[int, ...], int]] | None = None,
               relation_arity: Mapping[str, int] | None = None) -> "Structure":
        """A copy with extra (or replaced) symbol interpretations."""
        rels = dict(self.relations)
        rel_ar = dict(self.relation_arity)
        for name, rows in (relations or {}).items():
            rels[name] = frozenset(tuple(t) for t in rows)
            rel_ar.pop(name, None)
        rel_ar.update(relation_arity or {})
        funs = dict(self.functions)
        fun_ar = dict(self.function_arity)
        for name, table in (functions or {}).items():
            funs[name] = dict(table)
            fun_ar.pop(name, None)
        return Structure(self.size, rels, funs, rel_ar, fun_ar)


@dataclass(frozen=True)
class WeakModel:
    """A structure with an interpretation ``q`` of Q; ``qd`` is always ``dual(q)``."""

    structure: Structure
    q: QuantifierInterpretation
    qd: QuantifierInterpretation = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.q.universe_size != self.structure.size:
            raise ModelError("quantifier interpretation is over a different universe")
        problems = validate(self.q)
        if problems:
            raise ModelError("invalid quantifier interpretation: " + "; ".join(problems))
        if self.qd is None:
            object.__setattr__(self, "qd", dual(self.q))
        elif self.qd != dual(self.q):
            raise ModelError("qd is not the dual of q")

    @property
    def size(self) -> int:
        return self.structure.size

    def with_structure(self, structure: Structure) -> "WeakModel":
        return WeakModel(structure, self.q, self.qd)


def all_structures(sig: Signature, size: int) -> Iterable[Structure]:
    """Every structure over ``sig`` with universe ``{0..size-1}``."""
    rel_names = sorted(sig.relations)
    fun_names = sorted(sig.functions)
    rel_choices = []
    for name in rel_names:
        cells = list(itertools.product(range(size), repeat=sig.relations[name]))
        rel_choices.append([frozenset(c for c, b in zip(cells, bits) if b)
                            for bits in itertools.product((0, 1), repeat=len(cells))])
    fun_choices = []
    for name in fun_names:
        cells = list(itertools.product(range(size), repeat=sig.functions[name]))
        fun_choices.append([dict(zip(cells, vals))
                            for vals in itertools.product(range(size), repeat=len(cells))])
    for rels in itertools.product(*rel_choices):
        for funs in itertools.product(*fun_choices):
            yield Structure(size, dict(zip(rel_names, rels)), dict(zip(fun_names, funs)),
                            dict(sig.relations), dict(sig.functions))


def all_weak_models(sig: Signature, max_size: int, arity: int = 1) -> Iterable[WeakModel]:
    for n in range(1, max_size + 1):
        qs = all_interpretations(n, arity)
        for st in all_structures(sig, n):
            for q in qs:
                yield WeakModel(st, q)


# ---------------------------------------------------------------------------
# Structure files
#
#   universe 3
#   rel E/2: 0,1; 1,2
#   fun f/1: 0->1; 1->2; 2->0
#   quant Q/1: {0,1};{1,2}        (minimal sets)
#   quant Q/1: at_least(2)        (builtin)
#
# Lines starting with '#' are comments.


def _parse_tuple(text: str) -> tuple[int, ...]:
    text = text.strip()
    if text in ("", "()"):
        return ()
    text = text.strip("()")
    return tuple(int(p) for p in text.split(","))


def _split_sets(text: str) -> list[str]:
    return re.findall(r"\{([^}]*)\}", text)


def parse_structure(text: str) -> tuple[Structure, QuantifierInterpretation | None]:
    size = None
    rels: dict[str, frozenset] = {}
    rel_ar: dict[str, int] = {}
    funs: dict[str, dict] = {}
    fun_ar: dict[str, int] = {}
    quant_src = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if line.startswith("universe"):
                size = int(line.split()[1])
                continue
            m = re.match(r"^(rel|fun|quant)\s+([A-Za-z_][A-Za-z0-9_']*)\s*/\s*(\d+)\s*:?(.*)$", line)
            if not m:
                raise ModelError("unrecognised line")
            kind, name, ar, body = m.group(1), m.group(2), int(m.group(3)), m.group(4).strip()
            if kind == "rel":
                rel_ar[name] = ar
                rows = [_parse_tuple(p) for p in body.split(";") if p.strip()] if body else []
                if ar == 0 and body.strip() == "()":
                    rows = [()]
                rels[name] = frozenset(rows)
            elif kind == "fun":
                fun_ar[name] = ar
                table = {}
                for item in body.split(";"):
                    if not item.strip():
                        continue
                    lhs, rhs = item.split("->")
                    table[_parse_tuple(lhs)] = int(rhs)
                funs[name] = table
            else:
                quant_src = (ar, body)
        except (ValueError, ModelError) as e:
            raise ModelError(f"line {lineno}: {e}: {raw!r}") from None
    if size is None:
        raise ModelError("missing 'universe' line")
    st = Structure(size, rels, funs, rel_ar, fun_ar)
    q = None
    if quant_src is not None:
        ar, body = quant_src
        if "{" in body:
            sets = []
            for inner in _split_sets(body):
                inner = inner.strip()
                if ar == 1 and "(" not in inner:
                    sets.append([(int(a),) for a in inner.split(",") if a.strip()])
                else:
                    sets.append([_parse_tuple(t) for t in re.findall(r"\([^)]*\)", inner)])
            q = QuantifierInterpretation.from_sets(sets, size, ar)
        else:
            q = builtin_from_text(body, size, ar)
    return st, q


def render_structure(st: Structure, q: QuantifierInterpretation | None = None) -> str:
    lines = [f"universe {st.size}"]
    for name in sorted(st.relation_arity):
        rows = sorted(st.relations.get(name, ()))
        body = "; ".join(",".join(map(str, t)) if t else "()" for t in rows)
        lines.append(f"rel {name}/{st.relation_arity[name]}: {body}".rstrip())
    for name in sorted(st.function_arity):
        table = st.functions[name]
        body = "; ".join(f"{','.join(map(str, a))}->{v}" for a, v in sorted(table.items()))
        lines.append(f"fun {name}/{st.function_arity[name]}: {body}")
    if q is not None:
        sets = []
        for s in q.minimal_sets:
            if q.arity == 1:
                sets.append("{" + ",".join(str(t[0]) for t in sorted(s)) + "}")
            else:
                sets.append("{" + ",".join("(" + ",".join(map(str, t)) + ")" for t in sorted(s)) + "}")
        lines.append(f"quant Q/{q.arity}: " + ";".join(sets))
    return "\n".join(lines) + "\n"
