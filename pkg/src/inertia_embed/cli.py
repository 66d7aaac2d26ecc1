"""Command-line entry point: embed, verify, demo, selftest.

Exit codes
    embed   0 verified certificate written, 2 unreadable input or precision
            below the minimum, 3 group not of the form H x| L, 4 construction
            or verification failure, 5 ell < 5 without --force.
    verify  0 every check passed, 1 a check failed (named), 2 unreadable file.
    demo    as embed, plus 2 for an unknown scenario name.
    selftest 0 all invariants hold, 1 otherwise (failing invariant named).
"""

from __future__ import annotations

import argparse
import sys
import time

from . import __version__, demos, selftest, serialize
from .errors import EmbeddingError, ForceRequired, NotInertiaForm, PrecisionTooLow, UnknownFamily
from .symplectic import embed_inertia_group

DEFAULT_PRECISION = 16
MIN_EMBED_PRECISION = 8

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_PARSE = 2
EXIT_NOT_INERTIA = 3
EXIT_CONSTRUCTION = 4
EXIT_FORCE = 5


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _precision(value: int | None) -> int | None:
    if value is not None and value < MIN_EMBED_PRECISION:
        raise PrecisionTooLow(f"precision {value} is below the minimum {MIN_EMBED_PRECISION}")
    return value


def _run_embedding(structure, rep, form, seed: int, force: bool, out: str | None) -> int:
    try:
        cert = embed_inertia_group(structure, rep, form, force=force, seed=seed)
    except ForceRequired as exc:
        _err(f"{exc} (pass --force to try anyway)")
        return EXIT_FORCE
    except NotInertiaForm as exc:
        _err(str(exc))
        return EXIT_NOT_INERTIA
    except EmbeddingError as exc:
        _err(f"construction failed: {type(exc).__name__}: {exc}")
        return EXIT_CONSTRUCTION
    report = cert.report
    for line in report.lines():
        print(line)
    for note in cert.notes:
        print(f"note: {note}")
    for rec in cert.ledger:
        print(f"ledger: {rec}")
    if out:
        serialize.save_certificate(cert, out)
        print(f"certificate written to {out}")
    return EXIT_OK if report.passed else EXIT_CONSTRUCTION


def cmd_embed(args) -> int:
    try:
        N = _precision(args.precision)
        problem = serialize.load_problem(args.input, N)
    except NotInertiaForm as exc:
        _err(str(exc))
        return EXIT_NOT_INERTIA
    except (EmbeddingError, ValueError, KeyError, TypeError) as exc:
        _err(f"cannot parse input: {exc}")
        return EXIT_PARSE
    if problem.ring.N < MIN_EMBED_PRECISION:
        _err(f"precision {problem.ring.N} is below the minimum {MIN_EMBED_PRECISION}")
        return EXIT_PARSE
    return _run_embedding(problem.structure, problem.rep, problem.form, args.seed, args.force, args.out)


def cmd_verify(args) -> int:
    try:
        report = serialize.verify_certificate_file(args.certificate)
    except (EmbeddingError, ValueError) as exc:
        _err(f"cannot parse certificate: {exc}")
        return EXIT_PARSE
    for line in report.lines():
        print(line)
    if report.passed:
        return EXIT_OK
    print(f"FAILED: {', '.join(report.failed)}")
    return EXIT_CHECK_FAILED


def cmd_demo(args) -> int:
    name = args.family or args.name
    if not name:
        print("available demos: " + ", ".join(sorted(demos.BUILDERS)))
        return EXIT_OK
    try:
        sc = demos.build(name, ell=args.ell, precision=_precision(args.precision), seed=args.seed)
    except UnknownFamily as exc:
        _err(str(exc))
        return EXIT_PARSE
    except NotInertiaForm as exc:
        _err(str(exc))
        return EXIT_NOT_INERTIA
    except EmbeddingError as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_PARSE
    st = sc.structure
    print(f"demo {sc.name}: {sc.description}")
    print(f"group order {st.group.order}, #H = {len(st.H)}, #L = {st.L_order}, "
          f"ell = {sc.ring.ell}, precision ell^{sc.ring.N}, input dimension {sc.rep.dim}")
    if name == "c41sd5":
        t = time.time()
        _images, trace, _st, _F = demos.c41_extension(sc.ring, args.seed)
        print(f"extension from H to G ({time.time() - t:.1f}s):")
        for k, v in trace.summary().items():
            print(f"  {k}: {v}")
    if name == "ell3-budget-probe":
        return _budget_probe(sc, args)
    t = time.time()
    code = _run_embedding(st, sc.rep, sc.form, args.seed, args.force, args.out)
    print(f"elapsed {time.time() - t:.1f}s, expected dimension {sc.expected_dim}")
    return code


def _budget_probe(sc, args) -> int:
    from .errors import BudgetViolation

    if not args.force:
        return _run_embedding(sc.structure, sc.rep, sc.form, args.seed, False, args.out)
    try:
        cert = embed_inertia_group(sc.structure, sc.rep, sc.form, force=True, seed=args.seed)
    except BudgetViolation as exc:
        print(f"BudgetViolation fired: {exc}")
        return EXIT_CONSTRUCTION
    except EmbeddingError as exc:
        print(f"BudgetViolation did not fire; construction stopped with {type(exc).__name__}: {exc}")
        return EXIT_CONSTRUCTION
    print("BudgetViolation did not fire")
    for line in cert.report.lines():
        print(line)
    if args.out:
        serialize.save_certificate(cert, args.out)
    return EXIT_OK if cert.report.passed else EXIT_CONSTRUCTION


def cmd_selftest(args) -> int:
    ok = selftest.run(args.seed, args.inject_fault)
    print("selftest passed" if ok else "selftest FAILED")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="inertia-embed", description="Certified symplectic embeddings of inertia groups.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("embed", help="embed a group given by a JSON problem file")
    e.add_argument("input")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--force", action="store_true", help="allow ell = 3")
    e.add_argument("--out", help="certificate output path")
    e.add_argument("--precision", type=int, help=f"ell-adic precision N (default {DEFAULT_PRECISION})")
    e.set_defaults(func=cmd_embed)

    v = sub.add_parser("verify", help="check a certificate file")
    v.add_argument("certificate")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("demo", help="run a built-in scenario")
    d.add_argument("name", nargs="?")
    d.add_argument("--family")
    d.add_argument("--ell", type=int)
    d.add_argument("--precision", type=int)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--force", action="store_true")
    d.add_argument("--out")
    d.set_defaults(func=cmd_demo)

    s = sub.add_parser("selftest", help="run the seeded invariant corpus")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--inject-fault", action="store_true", help="corrupt one check on purpose")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PrecisionTooLow as exc:
        _err(str(exc))
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
