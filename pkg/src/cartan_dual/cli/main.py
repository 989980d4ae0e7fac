"""``cartan-dual`` command line entry point.

Exit codes: 0 every check passed, 1 some check failed, 2 some check was
indeterminate and none failed, 3 the input file could not be loaded or
a check raised a domain error.
"""
from __future__ import annotations

import argparse
import sys
from importlib import resources

from .checks import CheckError, run_checks
from .report import build_report, emit_report
from .spec import CHECKS, SpecError, load_spec

EXIT_PASS, EXIT_FAIL, EXIT_INDETERMINATE, EXIT_ERROR = 0, 1, 2, 3


def fixture_names() -> list:
    root = resources.files("cartan_dual.cli").joinpath("fixtures")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def fixture_text(name: str) -> str:
    if name not in fixture_names():
        raise KeyError(name)
    return resources.files("cartan_dual.cli").joinpath("fixtures", f"{name}.json").read_text("utf-8")


def fixture_path(name: str):
    """Filesystem path of a bundled fixture (package data is installed as files)."""
    return resources.files("cartan_dual.cli").joinpath("fixtures", f"{name}.json")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cartan-dual", description="Riemann-Cartan identity and duality checks")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("validate", help="validate a structure specification")
    v.add_argument("spec")
    c = sub.add_parser("check", help="run checks on a structure specification")
    c.add_argument("spec")
    c.add_argument("--only", help="comma-separated check names", default=None)
    c.add_argument("--format", choices=("json", "text"), default="json")
    c.add_argument("--tolerance", type=float, default=None, help="hold tolerance override")
    c.add_argument("--output", "-o", help="write the report here instead of stdout")
    f = sub.add_parser("fixtures", help="list or print bundled fixtures")
    g = f.add_mutually_exclusive_group(required=True)
    g.add_argument("--list", action="store_true")
    g.add_argument("--emit", metavar="NAME")
    return p


def _spec_errors(err: SpecError) -> None:
    print(f"{type(err).__name__}: {len(err.violations)} problem(s)", file=sys.stderr)
    for v in err.violations:
        print(f"  {v}", file=sys.stderr)


def _resolve(spec: str):
    """Accept a path or the name of a bundled fixture."""
    from pathlib import Path

    if not Path(spec).exists() and spec in fixture_names():
        return fixture_path(spec)
    return spec


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "fixtures":
        if args.list:
            print("\n".join(fixture_names()))
            return EXIT_PASS
        try:
            sys.stdout.write(fixture_text(args.emit))
        except KeyError:
            print(f"no fixture named {args.emit!r}; try --list", file=sys.stderr)
            return EXIT_ERROR
        return EXIT_PASS

    try:
        st = load_spec(_resolve(args.spec))
    except FileNotFoundError as e:
        print(f"cannot read {args.spec}: {e.strerror}", file=sys.stderr)
        return EXIT_ERROR
    except SpecError as e:
        _spec_errors(e)
        return EXIT_ERROR
    if args.command == "validate":
        print(f"{args.spec}: valid ({len(st.points)} sample points, checks: {', '.join(st.checks)})")
        return EXIT_PASS

    only = None
    if args.only:
        only = [s.strip() for s in args.only.split(",") if s.strip()]
        unknown = [n for n in only if n not in CHECKS]
        if unknown:
            print(f"unknown checks: {', '.join(unknown)}; known: {', '.join(CHECKS)}", file=sys.stderr)
            return EXIT_ERROR
        if "gprime" in only and st.candidate_doc is None:
            print("check gprime: the input file has no candidate block", file=sys.stderr)
            return EXIT_ERROR
    try:
        results = run_checks(st, only, args.tolerance)
    except CheckError as e:
        print(str(e), file=sys.stderr)
        return EXIT_ERROR
    report = build_report(st, results)
    data = emit_report(report, args.format)
    if args.output:
        with open(args.output, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    return {"PASS": EXIT_PASS, "FAIL": EXIT_FAIL, "INDETERMINATE": EXIT_INDETERMINATE}[report["verdict"]]


if __name__ == "__main__":
    sys.exit(main())
