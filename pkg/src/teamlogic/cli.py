"""Command-line interface.

    teamlogic eval STRUCTURE FORMULA [TEAM]
    teamlogic check-proof SCRIPT [--sig FILE] [--q1] [--approx]
    teamlogic normalize FORMULA [--certificate FILE]
    teamlogic approx FORMULA K [--relation R]
    teamlogic b-sentence FORMULA [--relation R]
    teamlogic skolemize FORMULA

Exit codes: 0 success (including a ``false`` verdict), 1 parse error,
2 validation error or kernel violations, 3 evaluation limit exceeded.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

from .approx import ApproximationBundle, skolemize
from .kernel import KernelMode, ScriptError, check, parse_script, render_script
from .model import ModelError, WeakModel, builtin, builtin_from_text, parse_structure
from .normalform import NormalFormError, NormalFormSentence, normalize
from .semantics import EvalConfig, EvalError, EvalLimitExceeded, eval_team
from .syntax import FormulaError, ParseError, Signature, SignatureError, free_variables, parse, render
from .team import Team, TeamError, parse_team

EXIT_PARSE = 1
EXIT_INVALID = 2
EXIT_LIMIT = 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror}", EXIT_PARSE) from None


def _strip_comments(text: str) -> str:
    return "\n".join(ln.split("#", 1)[0] for ln in text.splitlines())


def read_formula(path: str, sig: Signature | None = None):
    try:
        return parse(_strip_comments(_read(path)), sig)
    except ParseError as e:
        raise CliError(f"{path}: {e}", EXIT_PARSE) from None
    except FormulaError as e:
        raise CliError(f"{path}: {e}", EXIT_INVALID) from None


def read_nf(path: str) -> NormalFormSentence:
    f = read_formula(path)
    try:
        return NormalFormSentence.from_formula(f)
    except NormalFormError as e:
        raise CliError(f"{path}: not in normal form: {e}", EXIT_INVALID) from None


_SIG_LINE = re.compile(r"^(rel|fun)\s+([A-Za-z_][A-Za-z0-9_']*)\s*/\s*(\d+)$")


def parse_signature(text: str) -> Signature:
    """Lines ``rel NAME/ARITY`` and ``fun NAME/ARITY``."""
    rels: dict[str, int] = {}
    funs: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SIG_LINE.match(line)
        if not m:
            raise ParseError(f"line {lineno}: expected 'rel NAME/ARITY' or 'fun NAME/ARITY'")
        (rels if m.group(1) == "rel" else funs)[m.group(2)] = int(m.group(3))
    return Signature(rels, funs)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_eval(args) -> int:
    try:
        st, q = parse_structure(_read(args.structure))
    except ModelError as e:
        raise CliError(f"{args.structure}: {e}", EXIT_PARSE) from None
    f = read_formula(args.formula)
    try:
        if args.quant:
            q = builtin_from_text(args.quant, st.size)
        elif q is None:
            q = builtin("exists", (), st.size)
        W = WeakModel(st, q)
        st.signature.check(f)
    except (ModelError, SignatureError) as e:
        raise CliError(str(e), EXIT_INVALID) from None
    if args.team:
        try:
            X = parse_team(_read(args.team))
        except (TeamError, ValueError) as e:
            raise CliError(f"{args.team}: {e}", EXIT_PARSE) from None
    else:
        X = Team.unit()
    missing = free_variables(f) - X.domain
    if missing:
        raise CliError(f"free variables {sorted(missing)} are not in the team domain", EXIT_INVALID)
    try:
        verdict = eval_team(W, X, f, EvalConfig(limit=args.limit))
    except EvalLimitExceeded:
        print("limit-exceeded")
        return EXIT_LIMIT
    except EvalError as e:
        raise CliError(str(e), EXIT_INVALID) from None
    print("true" if verdict else "false")
    return 0


def cmd_check_proof(args) -> int:
    sig = None
    if args.sig:
        try:
            sig = parse_signature(_read(args.sig))
        except (ParseError, SignatureError) as e:
            raise CliError(f"{args.sig}: {e}", EXIT_PARSE) from None
    try:
        d = parse_script(_read(args.script), sig)
    except ScriptError as e:
        raise CliError(f"{args.script}: {e}", EXIT_PARSE) from None
    mode = KernelMode(base=True, with_approx=args.approx, with_q1=args.q1)
    problems = check(d, sig, mode)
    if not problems:
        print("ok")
        return 0
    for v in problems:
        print(f"{v.where}: {v.kind} [{v.rule}]: {v.message}")
    return EXIT_INVALID


def cmd_normalize(args) -> int:
    f = read_formula(args.formula)
    try:
        nf, cert = normalize(f)
    except NormalFormError as e:
        raise CliError(str(e), EXIT_INVALID) from None
    print(render(nf.formula()))
    script = render_script(cert.derivation)
    if args.certificate:
        Path(args.certificate).write_text(script)
    else:
        print("# certificate")
        sys.stdout.write(script)
    return 0


def _bundle(args) -> ApproximationBundle:
    nf = read_nf(args.formula)
    try:
        return ApproximationBundle(nf, args.relation) if args.relation else ApproximationBundle.fresh(nf)
    except ValueError as e:
        raise CliError(str(e), EXIT_INVALID) from None


def cmd_approx(args) -> int:
    if args.k < 1:
        raise CliError("approximation index must be at least 1", EXIT_INVALID)
    print(render(_bundle(args).A(args.k)))
    return 0


def cmd_b_sentence(args) -> int:
    print(render(_bundle(args).B))
    return 0


def cmd_skolemize(args) -> int:
    sk = skolemize(read_nf(args.formula))
    print(render(sk.sentence))
    print("# functions: " + " ".join(f"{name}/{ar}" for name, ar in sk.functions))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="teamlogic", description="Dependence logic with generalized quantifiers.")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker count; accepted for compatibility, evaluation runs sequentially")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", help="team-semantics verdict for a formula")
    e.add_argument("structure")
    e.add_argument("formula")
    e.add_argument("team", nargs="?")
    e.add_argument("--quant", help="builtin interpretation of Q, e.g. at_least(2), majority, fraction(2,3)")
    e.add_argument("--limit", type=int, default=EvalConfig().limit, help="search budget")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("check-proof", help="check a proof script with the kernel")
    c.add_argument("script")
    c.add_argument("--sig", help="signature file (rel NAME/ARITY, fun NAME/ARITY)")
    c.add_argument("--q1", action="store_true", help="enable the Q1 rules and (Skolem)")
    c.add_argument("--approx", action="store_true", help="enable (Approx)")
    c.set_defaults(func=cmd_check_proof)

    n = sub.add_parser("normalize", help="normal form and its certificate")
    n.add_argument("formula")
    n.add_argument("--certificate", help="write the certificate script here instead of stdout")
    n.set_defaults(func=cmd_normalize)

    a = sub.add_parser("approx", help="the k-th approximation of a normal-form sentence")
    a.add_argument("formula")
    a.add_argument("k", type=int)
    a.add_argument("--relation", help="name of the fresh predicate (default R)")
    a.set_defaults(func=cmd_approx)

    b = sub.add_parser("b-sentence", help="the prefix sentence over the fresh predicate")
    b.add_argument("formula")
    b.add_argument("--relation", help="name of the fresh predicate (default R)")
    b.set_defaults(func=cmd_b_sentence)

    s = sub.add_parser("skolemize", help="Skolem translation of a normal-form sentence")
    s.add_argument("formula")
    s.set_defaults(func=cmd_skolemize)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.jobs < 1:
        parser.error("--jobs must be positive")
    if getattr(args, "limit", 1) < 1:
        parser.error("--limit must be positive")
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
