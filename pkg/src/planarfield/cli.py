"""Command-line front end."""

from __future__ import annotations

import argparse
import sys

from . import corpus
from .exprcore import DomainError, ParseError, parse_field
from .flow import RectangleError, build_rectangle, green_check
from .report import build_report, dumps
from .singular import find_singularities
from .spectral import TAU_AE, TOL_ZERO, Region
from .topo import CircleSpec, IndexComputationError, poincare_index
from .verdict import VerdictParams

EXIT_OK, EXIT_FAILED, EXIT_PARSE, EXIT_DOMAIN, EXIT_COMPUTE = 0, 1, 2, 3, 4


def _point(text: str) -> tuple:
    try:
        a, b = (float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'x,y', got {text!r}") from None
    return (a, b)


def _region(text: str) -> Region:
    try:
        return Region.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _common(p: argparse.ArgumentParser, field_required: bool = True) -> None:
    src = p.add_argument_group("field")
    src.add_argument("--fx", help="first component, an expression in x and y")
    src.add_argument("--fy", help="second component")
    src.add_argument("--field", choices=sorted(corpus.BY_NAME), help="built-in corpus field")
    p.add_argument("--region", type=_region, default=Region(-3.0, 3.0, -3.0, 3.0), metavar="XMIN,XMAX,YMIN,YMAX")
    p.add_argument("--grid", type=int, default=200)
    p.add_argument("--tol-zero", type=float, default=TOL_ZERO)
    p.add_argument("--tau-ae", type=float, default=TAU_AE)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="planarfield", description="Analyze planar vector fields.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="full report: spectrum, singularities, indices, verdicts")
    _common(p)
    p.add_argument("--timing", action="store_true", help="include wall time (breaks byte-stability)")

    p = sub.add_parser("singularities", help="locate and classify zeros")
    _common(p)

    p = sub.add_parser("index", help="Poincare index along a circle")
    _common(p)
    p.add_argument("--center", type=_point, default=(0.0, 0.0))
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--samples", type=int, default=64)

    p = sub.add_parser("green", help="flow rectangle and Green identity check")
    _common(p)
    p.add_argument("--p1", type=_point, required=True)
    p.add_argument("--flow-time", type=float, required=True)
    p.add_argument("--transversal-time", type=float, required=True)
    p.add_argument("--samples", type=int, default=256, help="arc samples are 2*samples+1")

    p = sub.add_parser("portrait", help="SVG phase portrait")
    _common(p)
    p.add_argument("--seeds", type=int, default=10, help="streamline seeds per side")
    p.add_argument("--width", type=float, default=600.0)

    p = sub.add_parser("corpus", help="run the built-in example corpus")
    p.add_argument("--filter", action="append", metavar="NAME", help="run only these entries (repeatable)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    p.add_argument("--out")
    return ap


def _field(args):
    if args.field:
        e = corpus.get(args.field)
        return parse_field(e.fx, e.fy)
    if args.fx is None or args.fy is None:
        raise SystemExit("error: give --field NAME or both --fx and --fy")
    return parse_field(args.fx, args.fy)


def _params(args) -> VerdictParams:
    return VerdictParams(grid=args.grid, tol_zero=args.tol_zero, tau_ae=args.tau_ae, seed=args.seed)


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_analyze(args) -> int:
    field = _field(args)
    _emit(args, dumps(build_report(field, args.region, _params(args), timing=args.timing)))
    return EXIT_OK


def cmd_singularities(args) -> int:
    field = _field(args)
    rep = find_singularities(field, args.region, args.grid, args.tol_zero)
    _emit(args, dumps({"field": list(field.source_strings), "singularities": rep.to_dict()}))
    return EXIT_OK


def cmd_index(args) -> int:
    field = _field(args)
    res = poincare_index(field, CircleSpec(args.center, args.radius, args.samples), args.tol_zero)
    _emit(args, dumps({"center": list(args.center), "radius": args.radius, **res.to_dict()}))
    return EXIT_OK


def cmd_green(args) -> int:
    field = _field(args)
    rect = build_rectangle(field, args.p1, args.flow_time, args.transversal_time, m=args.samples)
    res = green_check(field, rect)
    _emit(args, dumps({"rectangle": rect.to_dict(), **res.to_dict()}))
    return EXIT_OK


def cmd_portrait(args) -> int:
    from .portrait import render_svg

    field = _field(args)
    sing = find_singularities(field, args.region, min(args.grid, 100), args.tol_zero)
    _emit(args, render_svg(field, args.region, sing, args.width, args.seeds))
    return EXIT_OK


def cmd_corpus(args) -> int:
    results = corpus.run_corpus(set(args.filter) if args.filter else None, seed=args.seed)
    if not results:
        sys.stderr.write("no corpus entry matched the filter\n")
        return EXIT_FAILED
    if args.json:
        _emit(args, dumps([r.to_dict() for r in results]))
    else:
        lines = []
        for r in results:
            failed = [k for k, v in r.checks.items() if not v]
            status = "PASS" if r.passed else "FAIL " + ",".join(failed)
            lines.append(f"{r.name:<14} {r.info.get('verdict', '?'):<36} {status}")
        _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


COMMANDS = {
    "analyze": cmd_analyze,
    "singularities": cmd_singularities,
    "index": cmd_index,
    "green": cmd_green,
    "portrait": cmd_portrait,
    "corpus": cmd_corpus,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ParseError as e:
        sys.stderr.write(f"parse error: {e}\n")
        return EXIT_PARSE
    except DomainError as e:
        sys.stderr.write(f"domain error: {e}\n")
        return EXIT_DOMAIN
    except (IndexComputationError, RectangleError, ArithmeticError) as e:
        sys.stderr.write(f"computation error: {type(e).__name__}: {e}\n")
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
