"""Teams: sets of assignments over a shared finite variable domain.

A team stores its domain as a sorted tuple of variable names and its
assignments as a frozenset of value rows aligned with that tuple, so equal
teams compare and hash equal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Sequence


class TeamError(Exception):
    pass


Assignment = Mapping[str, int]


@dataclass(frozen=True)
class Team:
    vars: tuple[str, ...]
    rows: frozenset[tuple[int, ...]]

    def __post_init__(self):
        if list(self.vars) != sorted(set(self.vars)):
            raise TeamError("team variables must be sorted and distinct")
        for r in self.rows:
            if len(r) != len(self.vars):
                raise TeamError(f"row {r} does not match domain {self.vars}")

    @classmethod
    def of(cls, assignments: Iterable[Assignment], domain: Iterable[str] | None = None) -> "Team":
        assignments = [dict(a) for a in assignments]
        if domain is None:
            if not assignments:
                domain = ()
            else:
                domain = assignments[0].keys()
        vs = tuple(sorted(set(domain)))
        rows = set()
        for a in assignments:
            if set(a) != set(vs):
                raise TeamError(f"assignment {a} is not over domain {vs}")
            rows.add(tuple(a[v] for v in vs))
        return cls(vs, frozenset(rows))

    @classmethod
    def raw(cls, vars: tuple[str, ...], rows: frozenset[tuple[int, ...]]) -> "Team":
        """Build without validation; callers guarantee the invariants."""
        t = object.__new__(cls)
        object.__setattr__(t, "vars", vars)
        object.__setattr__(t, "rows", rows)
        return t

    @classmethod
    def empty(cls, domain: Iterable[str] = ()) -> "Team":
        return cls(tuple(sorted(set(domain))), frozenset())

    @classmethod
    def unit(cls) -> "Team":
        """``{∅}``: the team holding only the empty assignment."""
        return cls((), frozenset({()}))

    @classmethod
    def full(cls, domain: Iterable[str], size: int) -> "Team":
        vs = tuple(sorted(set(domain)))
        return cls(vs, frozenset(itertools.product(range(size), repeat=len(vs))))

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[dict[str, int]]:
        for r in sorted(self.rows):
            yield dict(zip(self.vars, r))

    def __contains__(self, s: Assignment) -> bool:
        return set(s) == set(self.vars) and tuple(s[v] for v in self.vars) in self.rows

    def __le__(self, other: "Team") -> bool:
        return self.vars == other.vars and self.rows <= other.rows

    @property
    def domain(self) -> frozenset[str]:
        return frozenset(self.vars)

    def sub(self, rows: Iterable[tuple[int, ...]]) -> "Team":
        return Team(self.vars, frozenset(rows))

    def __str__(self) -> str:
        return render_team(self)


def _extend(X: Team, names: Sequence[str], pairs: Iterable[tuple[tuple[int, ...], tuple[int, ...]]]) -> Team:
    """Rows ``s[ā/x̄]`` for each ``(s, ā)`` in ``pairs``."""
    new_vars = tuple(sorted(set(X.vars) | set(names)))
    src = {v: i for i, v in enumerate(X.vars)}
    tgt = {v: i for i, v in enumerate(names)}
    plan = [(True, tgt[v]) if v in tgt else (False, src[v]) for v in new_vars]
    rows = set()
    for row, vals in pairs:
        rows.add(tuple(vals[j] if fresh else row[j] for fresh, j in plan))
    return Team(new_vars, frozenset(rows))


def extend_all(X: Team, y: str, size: int) -> Team:
    """``X[M/y]``."""
    return _extend(X, (y,), ((r, (a,)) for r in X.rows for a in range(size)))


def extend_fun(X: Team, y: str, f: Callable[[dict[str, int]], int]) -> Team:
    """``X[f/y]`` for ``f`` a total function on the assignments of ``X``."""
    def pairs():
        for r in X.rows:
            s = dict(zip(X.vars, r))
            try:
                v = f(s)
            except KeyError as e:
                raise TeamError(f"function undefined on {s}") from e
            if v is None:
                raise TeamError(f"function undefined on {s}")
            yield r, (v,)
    return _extend(X, (y,), pairs())


def extend_set(X: Team, xs: Sequence[str], F: Callable[[dict[str, int]], Iterable[Sequence[int]]]) -> Team:
    """``X[F/x̄] = {s[ā/x̄] | s ∈ X, ā ∈ F(s)}``."""
    xs = tuple(xs)
    if len(set(xs)) != len(xs):
        raise TeamError("extension tuple repeats a variable")

    def pairs():
        for r in X.rows:
            s = dict(zip(X.vars, r))
            for a in F(s):
                a = tuple(a)
                if len(a) != len(xs):
                    raise TeamError(f"tuple {a} does not match {xs}")
                yield r, a
    return _extend(X, xs, pairs())


def restrict(X: Team, V: Iterable[str]) -> Team:
    """Pointwise restriction ``{s ↾ V | s ∈ X}``."""
    V = set(V)
    if not V <= set(X.vars):
        raise TeamError(f"{sorted(V - set(X.vars))} not in the team domain")
    keep = [i for i, v in enumerate(X.vars) if v in V]
    return Team(tuple(X.vars[i] for i in keep), frozenset(tuple(r[i] for i in keep) for r in X.rows))


def rename(X: Team, mapping: Mapping[str, str]) -> Team:
    """The team ``X'`` with ``s'(mapping[x]) = s(x)``; the mapping must be injective on dom(X)."""
    new_names = [mapping.get(v, v) for v in X.vars]
    if len(set(new_names)) != len(new_names):
        raise TeamError("renaming is not injective")
    order = sorted(range(len(new_names)), key=lambda i: new_names[i])
    return Team(tuple(new_names[i] for i in order), frozenset(tuple(r[i] for i in order) for r in X.rows))


# ---------------------------------------------------------------------------
# Team files: a header of variable names, then one row of values per line.


def parse_team(text: str) -> Team:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise TeamError("empty team file")
    header = lines[0].split()
    if header == ["-"]:
        header = []
    rows = []
    for ln in lines[1:]:
        if ln == "-":
            rows.append(())
            continue
        vals = tuple(int(v) for v in ln.split())
        if len(vals) != len(header):
            raise TeamError(f"row {ln!r} has {len(vals)} values for {len(header)} variables")
        rows.append(dict(zip(header, vals)))
    if any(r == () for r in rows):
        if header:
            raise TeamError("'-' row only allowed for the empty domain")
        return Team.unit()
    return Team.of(rows, header)


def render_team(X: Team) -> str:
    """Inverse of ``parse_team``; ``-`` stands for the empty domain / empty assignment."""
    lines = [" ".join(X.vars) if X.vars else "-"]
    for r in sorted(X.rows):
        lines.append(" ".join(map(str, r)) if r else "-")
    return "\n".join(lines) + "\n"
