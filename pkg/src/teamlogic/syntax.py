"""Terms and formulas of dependence logic with a monotone quantifier Q and its dual.

Formulas are immutable dataclasses.  The negation discipline (``!`` only in
front of formulas without dependence atoms) is enforced when a ``Not`` node is
built, so every constructible value respects it.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union


class FormulaError(Exception):
    """Base class for syntax-level errors."""


class ParseError(FormulaError):
    def __init__(self, message: str, pos: int | None = None):
        self.pos = pos
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)


class NegationError(FormulaError):
    """Raised when ``!`` is applied to a formula containing a dependence atom."""


class SignatureError(FormulaError):
    pass


class CaptureError(FormulaError):
    def __init__(self, binder: "Formula", variable: str):
        self.binder = binder
        self.variable = variable
        super().__init__(f"variable {variable!r} would be captured by binder {binder_head(binder)}")


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Fn:
    name: str
    args: tuple["Term", ...] = ()

    def __str__(self) -> str:
        return f"{self.name}({', '.join(map(str, self.args))})"


Term = Union[Var, Fn]


def term_vars(t: Term) -> frozenset[str]:
    if isinstance(t, Var):
        return frozenset((t.name,))
    out: set[str] = set()
    for a in t.args:
        out |= term_vars(a)
    return frozenset(out)


def subst_term(t: Term, mapping: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    return Fn(t.name, tuple(subst_term(a, mapping) for a in t.args))


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True, slots=True)
class Rel:
    name: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True, slots=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Bot:
    pass


@dataclass(frozen=True, slots=True)
class Dep:
    args: tuple[Term, ...]

    def __post_init__(self):
        if len(self.args) < 1:
            raise FormulaError("dependence atom needs at least one term")


@dataclass(frozen=True, slots=True)
class Not:
    body: "Formula"

    def __post_init__(self):
        if not is_flat(self.body):
            raise NegationError("negation over dependence atom")


@dataclass(frozen=True, slots=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True, slots=True)
class Forall:
    var: str
    body: "Formula"


@dataclass(frozen=True, slots=True)
class Quant:
    """``Q x̄ body`` or, with ``dual=True``, ``Qd x̄ body``."""

    vars: tuple[str, ...]
    body: "Formula"
    dual: bool = False

    def __post_init__(self):
        if not self.vars:
            raise FormulaError("quantifier binds an empty tuple")
        if len(set(self.vars)) != len(self.vars):
            raise FormulaError("quantifier tuple repeats a variable")


Formula = Union[Rel, Eq, Bot, Dep, Not, And, Or, Exists, Forall, Quant]
Binder = (Exists, Forall, Quant)
BOT = Bot()


def implies(a: Formula, b: Formula) -> Formula:
    """``a -> b`` as ``!a | b``; ``a`` must be flat."""
    return Or(Not(a), b)


def neq(a: Term, b: Term) -> Formula:
    return Not(Eq(a, b))


def big_and(parts: Iterable[Formula]) -> Formula:
    """Left-nested conjunction; raises on an empty sequence."""
    parts = list(parts)
    if not parts:
        raise ValueError("empty conjunction")
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def big_or(parts: Iterable[Formula]) -> Formula:
    parts = list(parts)
    if not parts:
        raise ValueError("empty disjunction")
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def tuple_eq(xs: Iterable[Term], ys: Iterable[Term]) -> Formula | None:
    """``x̄ = ȳ`` as a conjunction of equalities; None for empty tuples."""
    eqs = [Eq(a, b) for a, b in zip(xs, ys, strict=True)]
    return big_and(eqs) if eqs else None


def bound_vars_of(f: Formula) -> tuple[str, ...]:
    if isinstance(f, Quant):
        return f.vars
    return (f.var,)


def binder_head(f: Formula) -> str:
    if isinstance(f, Exists):
        return f"E {f.var}"
    if isinstance(f, Forall):
        return f"A {f.var}"
    if isinstance(f, Quant):
        kw = "Qd" if f.dual else "Q"
        return f"{kw} {_render_tuple(f.vars)}"
    raise TypeError(f)


def rebind(f: Formula, body: Formula) -> Formula:
    """Same binder as ``f`` over a new body."""
    if isinstance(f, Exists):
        return Exists(f.var, body)
    if isinstance(f, Forall):
        return Forall(f.var, body)
    if isinstance(f, Quant):
        return Quant(f.vars, body, f.dual)
    raise TypeError(f)


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (And, Or)):
        return (f.left, f.right)
    if isinstance(f, (Not, Exists, Forall, Quant)):
        return (f.body,)
    return ()


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    for c in children(f):
        yield from subformulas(c)


def atom_terms(f: Formula) -> tuple[Term, ...]:
    if isinstance(f, (Rel, Dep)):
        return f.args
    if isinstance(f, Eq):
        return (f.left, f.right)
    return ()


def is_flat(f: Formula) -> bool:
    """True iff no dependence atom occurs in ``f``."""
    if isinstance(f, Dep):
        return False
    if isinstance(f, (Rel, Eq, Bot)):
        return True
    if isinstance(f, Not):
        return True  # the constructor guarantees a flat body
    return all(is_flat(c) for c in children(f))


def is_quantifier_free(f: Formula) -> bool:
    return not any(isinstance(g, Binder) for g in subformulas(f))


def free_variables(f: Formula) -> frozenset[str]:
    if isinstance(f, (Rel, Dep, Eq)):
        out: set[str] = set()
        for t in atom_terms(f):
            out |= term_vars(t)
        return frozenset(out)
    if isinstance(f, Bot):
        return frozenset()
    if isinstance(f, Binder):
        return free_variables(f.body) - set(bound_vars_of(f))
    out = set()
    for c in children(f):
        out |= free_variables(c)
    return frozenset(out)


def all_variables(f: Formula) -> frozenset[str]:
    """Every variable name occurring in ``f``, free or bound."""
    out: set[str] = set()
    for g in subformulas(f):
        for t in atom_terms(g):
            out |= term_vars(t)
        if isinstance(g, Binder):
            out |= set(bound_vars_of(g))
    return frozenset(out)


def _term_symbols(t: Term, acc: dict[str, int]) -> None:
    if isinstance(t, Fn):
        acc.setdefault(t.name, len(t.args))
        for a in t.args:
            _term_symbols(a, acc)


def symbols(f: Formula) -> tuple[dict[str, int], dict[str, int]]:
    """(relations, functions) used in ``f`` with the first arity seen."""
    rels: dict[str, int] = {}
    funs: dict[str, int] = {}
    for g in subformulas(f):
        if isinstance(g, Rel):
            rels.setdefault(g.name, len(g.args))
        for t in atom_terms(g):
            _term_symbols(t, funs)
    return rels, funs


def mentions_symbol(f: Formula, name: str) -> bool:
    rels, funs = symbols(f)
    return name in rels or name in funs


# ---------------------------------------------------------------------------
# Signatures


@dataclass(frozen=True)
class Signature:
    relations: Mapping[str, int] = field(default_factory=dict)
    functions: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        clash = set(self.relations) & set(self.functions)
        if clash:
            raise SignatureError(f"symbol declared as both relation and function: {sorted(clash)}")
        for name, ar in itertools.chain(self.relations.items(), self.functions.items()):
            if ar < 0:
                raise SignatureError(f"negative arity for {name}")
            if name in KEYWORDS:
                raise SignatureError(f"{name!r} is a reserved word")

    def extend(self, relations: Mapping[str, int] | None = None,
               functions: Mapping[str, int] | None = None) -> "Signature":
        rels = dict(self.relations)
        funs = dict(self.functions)
        for name, ar in (relations or {}).items():
            if name in funs or rels.get(name, ar) != ar:
                raise SignatureError(f"symbol {name!r} already declared")
            rels[name] = ar
        for name, ar in (functions or {}).items():
            if name in rels or funs.get(name, ar) != ar:
                raise SignatureError(f"symbol {name!r} already declared")
            funs[name] = ar
        return Signature(rels, funs)

    def check(self, f: Formula) -> None:
        """Raise ``SignatureError`` unless every symbol of ``f`` is declared with its arity."""
        for g in subformulas(f):
            if isinstance(g, Rel):
                if g.name not in self.relations:
                    raise SignatureError(f"undeclared relation symbol {g.name!r}")
                if self.relations[g.name] != len(g.args):
                    raise SignatureError(f"arity mismatch for {g.name}: expected "
                                         f"{self.relations[g.name]}, got {len(g.args)}")
            for t in atom_terms(g):
                self._check_term(t)

    def _check_term(self, t: Term) -> None:
        if isinstance(t, Var):
            return
        if t.name not in self.functions:
            raise SignatureError(f"undeclared function symbol {t.name!r}")
        if self.functions[t.name] != len(t.args):
            raise SignatureError(f"arity mismatch for {t.name}: expected "
                                 f"{self.functions[t.name]}, got {len(t.args)}")
        for a in t.args:
            self._check_term(a)

    @staticmethod
    def infer(*formulas: Formula) -> "Signature":
        rels: dict[str, int] = {}
        funs: dict[str, int] = {}
        for f in formulas:
            r, fn = symbols(f)
            for name, ar in r.items():
                if rels.setdefault(name, ar) != ar:
                    raise SignatureError(f"inconsistent arity for {name}")
            for name, ar in fn.items():
                if funs.setdefault(name, ar) != ar:
                    raise SignatureError(f"inconsistent arity for {name}")
        sig = Signature(rels, funs)
        for f in formulas:
            sig.check(f)
        return sig


# ---------------------------------------------------------------------------
# Substitution


def substitute(f: Formula, t: Term, x: str) -> Formula:
    """``f[t/x]``: replace the free occurrences of ``x`` by ``t``."""
    return substitute_many(f, {x: t})


def substitute_many(f: Formula, mapping: Mapping[str, Term]) -> Formula:
    """Simultaneous substitution ``f[t̄/x̄]``; raises ``CaptureError`` on capture."""
    mapping = {k: v for k, v in mapping.items() if not (isinstance(v, Var) and v.name == k)}
    if not mapping:
        return f
    return _subst(f, mapping)


def _subst(f: Formula, mapping: Mapping[str, Term]) -> Formula:
    if not mapping:
        return f
    if isinstance(f, Rel):
        return Rel(f.name, tuple(subst_term(a, mapping) for a in f.args))
    if isinstance(f, Dep):
        return Dep(tuple(subst_term(a, mapping) for a in f.args))
    if isinstance(f, Eq):
        return Eq(subst_term(f.left, mapping), subst_term(f.right, mapping))
    if isinstance(f, Bot):
        return f
    if isinstance(f, Not):
        return Not(_subst(f.body, mapping))
    if isinstance(f, And):
        return And(_subst(f.left, mapping), _subst(f.right, mapping))
    if isinstance(f, Or):
        return Or(_subst(f.left, mapping), _subst(f.right, mapping))
    bound = set(bound_vars_of(f))
    inner = {k: v for k, v in mapping.items() if k not in bound}
    fv = free_variables(f.body)
    for k, v in inner.items():
        if k in fv and term_vars(v) & bound:
            raise CaptureError(f, sorted(term_vars(v) & bound)[0])
    return rebind(f, _subst(f.body, inner))


def is_substitutable(f: Formula, t: Term, x: str) -> bool:
    try:
        substitute(f, t, x)
    except CaptureError:
        return False
    return True


# ---------------------------------------------------------------------------
# Fresh names and bound-variable renaming


class FreshNames:
    """Deterministic source of fresh variable names.

    Names are ``base_N`` with a counter shared by all bases; anything passed
    to ``avoid`` (or produced earlier) is never returned.  Not thread-safe.
    """

    def __init__(self, avoid: Iterable[str] = ()):
        self.used: set[str] = set(avoid)
        self.counter = 0

    def avoid(self, names: Iterable[str]) -> None:
        self.used.update(names)

    def __call__(self, base: str = "v") -> str:
        base = re.sub(r"_\d+$", "", base) or "v"
        while True:
            self.counter += 1
            name = f"{base}_{self.counter}"
            if name not in self.used:
                self.used.add(name)
                return name


def rename_bound(f: Formula, fresh: FreshNames | None = None) -> Formula:
    """Alpha-rename so each variable is bound once and none is both free and bound."""
    fresh = fresh or FreshNames()
    fresh.avoid(all_variables(f))
    taken = set(free_variables(f))
    return _rename(f, {}, taken, fresh)


def _rename(f: Formula, env: dict[str, str], taken: set[str], fresh: FreshNames) -> Formula:
    if isinstance(f, (Rel, Dep, Eq, Bot)):
        if not env:
            return f
        return _subst(f, {k: Var(v) for k, v in env.items()})
    if isinstance(f, Not):
        return Not(_rename(f.body, env, taken, fresh))
    if isinstance(f, (And, Or)):
        left = _rename(f.left, env, taken, fresh)
        right = _rename(f.right, env, taken, fresh)
        return type(f)(left, right)
    new_env = dict(env)
    names = []
    for v in bound_vars_of(f):
        if v in taken:
            nv = fresh(v)
            new_env[v] = nv
        else:
            nv = v
            new_env.pop(v, None)
        taken.add(nv)
        names.append(nv)
    body = _rename(f.body, new_env, taken, fresh)
    if isinstance(f, Quant):
        return Quant(tuple(names), body, f.dual)
    return type(f)(names[0], body)


def is_renamed_apart(f: Formula) -> bool:
    seen: list[str] = []
    for g in subformulas(f):
        if isinstance(g, Binder):
            seen.extend(bound_vars_of(g))
    return len(seen) == len(set(seen)) and not (set(seen) & free_variables(f))


# ---------------------------------------------------------------------------
# Rendering

KEYWORDS = {"A", "E", "Q", "Qd", "dep", "false"}
_PREC = {"or": 1, "and": 2, "not": 3}


def _render_tuple(vs: tuple[str, ...]) -> str:
    return vs[0] if len(vs) == 1 else "(" + ",".join(vs) + ")"


def render_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    return f"{t.name}({','.join(render_term(a) for a in t.args)})"


def render(f: Formula) -> str:
    """Render ``f`` in the ASCII formula grammar; ``parse(render(f)) == f``."""
    return _render(f, 0, True)


def _render(f: Formula, ctx: int, tail: bool) -> str:
    # ctx: binding strength required by the parent; tail: nothing follows on the right
    if isinstance(f, Rel):
        return f"{f.name}({','.join(render_term(a) for a in f.args)})"
    if isinstance(f, Eq):
        return f"{render_term(f.left)} = {render_term(f.right)}"
    if isinstance(f, Bot):
        return "false"
    if isinstance(f, Dep):
        return f"dep({','.join(render_term(a) for a in f.args)})"
    if isinstance(f, Not):
        if isinstance(f.body, Eq):
            return f"{render_term(f.body.left)} != {render_term(f.body.right)}"
        return "!" + _render(f.body, _PREC["not"], tail)
    if isinstance(f, (And, Or)):
        p = _PREC["and"] if isinstance(f, And) else _PREC["or"]
        op = " & " if isinstance(f, And) else " | "
        wrap = p < ctx
        inner_tail = tail or wrap
        s = _render(f.left, p, False) + op + _render(f.right, p + 1, inner_tail)
        return f"({s})" if wrap else s
    # binders extend maximally to the right
    s = binder_head(f) + " " + _render(f.body, 0, True)
    return s if tail else f"({s})"


def __str_formula(self) -> str:
    return render(self)


for _cls in (Rel, Eq, Bot, Dep, Not, And, Or, Exists, Forall, Quant):
    _cls.__str__ = __str_formula


# ---------------------------------------------------------------------------
# Parsing

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<neq>!=)
  | (?P<op>[()&|!=,])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
""", re.VERBOSE)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            val = m.group(kind)
            toks.append((val if kind in ("op", "arrow", "neq") else "ident", val, pos))
        pos = m.end()
    toks.append(("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, sig: Signature | None, k: int):
        self.toks = _tokenize(text)
        self.i = 0
        self.sig = sig
        self.k = k

    def peek(self, off: int = 0) -> tuple[str, str, int]:
        return self.toks[min(self.i + off, len(self.toks) - 1)]

    def next(self) -> tuple[str, str, int]:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> tuple[str, str, int]:
        tok = self.next()
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[1] or 'end of input'!r}", tok[2])
        return tok

    def formula(self) -> Formula:
        left = self.disjunction()
        if self.peek()[0] == "->":
            pos = self.next()[2]
            right = self.formula()
            if not is_flat(left):
                raise ParseError("'->' requires a flat antecedent", pos)
            return implies(left, right)
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.peek()[0] == "|":
            self.next()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.unary()
        while self.peek()[0] == "&":
            self.next()
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        kind, val, pos = self.peek()
        if kind == "!":
            self.next()
            body = self.unary()
            try:
                return Not(body)
            except NegationError:
                raise ParseError("negation over dependence atom", pos) from None
        if kind == "ident" and val in ("A", "E", "Q", "Qd"):
            return self.binder()
        if kind == "(":
            self.next()
            f = self.formula()
            self.expect(")")
            return f
        return self.atom()

    def binder(self) -> Formula:
        _, kw, pos = self.next()
        if self.peek()[0] == "(":
            self.next()
            names = [self.variable()]
            while self.peek()[0] == ",":
                self.next()
                names.append(self.variable())
            self.expect(")")
        else:
            names = [self.variable()]
        body = self.formula()
        if kw in ("A", "E"):
            if len(names) != 1:
                raise ParseError(f"'{kw}' binds a single variable", pos)
            return (Forall if kw == "A" else Exists)(names[0], body)
        if len(names) != self.k:
            raise ParseError(f"quantifier type is {self.k} but {len(names)} variables are bound", pos)
        try:
            return Quant(tuple(names), body, kw == "Qd")
        except FormulaError as e:
            raise ParseError(str(e), pos) from None

    def variable(self) -> str:
        _, val, pos = self.expect("ident")
        if val in KEYWORDS:
            raise ParseError(f"reserved word {val!r} used as a variable", pos)
        if self.sig is not None and (val in self.sig.functions or val in self.sig.relations):
            raise ParseError(f"symbol {val!r} used as a variable", pos)
        return val

    def atom(self) -> Formula:
        kind, val, pos = self.peek()
        if kind != "ident":
            raise ParseError(f"unexpected {val or 'end of input'!r}", pos)
        if val == "false":
            self.next()
            return BOT
        if val == "dep":
            self.next()
            self.expect("(")
            args = self.term_list()
            return Dep(tuple(args))
        if self.sig is not None and val in self.sig.relations:
            self.next()
            args: list[Term] = []
            if self.peek()[0] == "(":
                self.next()
                args = self.term_list()
            self._arity(val, self.sig.relations[val], len(args), pos)
            return Rel(val, tuple(args))
        left = self.term()
        kind = self.peek()[0]
        if kind in ("=", "!="):
            self.next()
            right = self.term()
            eq = Eq(left, right)
            return Not(eq) if kind == "!=" else eq
        if self.sig is None and isinstance(left, Fn):
            return Rel(left.name, left.args)
        if self.sig is not None and isinstance(left, Fn):
            raise ParseError(f"undeclared relation symbol {left.name!r}", pos)
        raise ParseError("expected '=' after term", self.peek()[2])

    def term_list(self) -> list[Term]:
        args: list[Term] = []
        if self.peek()[0] == ")":
            self.next()
            return args
        args.append(self.term())
        while self.peek()[0] == ",":
            self.next()
            args.append(self.term())
        self.expect(")")
        return args

    def term(self) -> Term:
        _, val, pos = self.expect("ident")
        if val in KEYWORDS:
            raise ParseError(f"reserved word {val!r} in term position", pos)
        if self.peek()[0] == "(":
            self.next()
            args = self.term_list()
            if self.sig is not None:
                if val not in self.sig.functions:
                    raise ParseError(f"undeclared function symbol {val!r}", pos)
                self._arity(val, self.sig.functions[val], len(args), pos)
            return Fn(val, tuple(args))
        if self.sig is not None and val in self.sig.functions:
            self._arity(val, self.sig.functions[val], 0, pos)
            return Fn(val, ())
        if self.sig is not None and val in self.sig.relations:
            raise ParseError(f"relation symbol {val!r} in term position", pos)
        return Var(val)

    @staticmethod
    def _arity(name: str, want: int, got: int, pos: int) -> None:
        if want != got:
            raise ParseError(f"arity mismatch for {name}: expected {want}, got {got}", pos)


def parse(text: str, sig: Signature | None = None, k: int = 1) -> Formula:
    """Parse a formula.

    With ``sig=None`` symbols are inferred from their use (``name(...)`` in
    formula position is a relation, in term position a function) and arities
    must be consistent.  ``k`` is the quantifier type for ``Q``/``Qd`` binders.
    """
    p = _Parser(text, sig, k)
    f = p.formula()
    if p.peek()[0] != "eof":
        tok = p.peek()
        raise ParseError(f"unexpected {tok[1]!r}", tok[2])
    try:
        if sig is None:
            Signature.infer(f)
        else:
            sig.check(f)
    except SignatureError as e:
        raise ParseError(str(e)) from None
    return f


def parse_term(text: str, sig: Signature | None = None) -> Term:
    p = _Parser(text, sig, 1)
    t = p.term()
    if p.peek()[0] != "eof":
        tok = p.peek()
        raise ParseError(f"unexpected {tok[1]!r}", tok[2])
    return t
