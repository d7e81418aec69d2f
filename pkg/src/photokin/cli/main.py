"""photokin command line: run | bands | check."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..core.constants import DEFAULT_CONSTANTS, load_constants
from ..errors import IoError, PhysicsError
from .scenario import ScenarioError, parse_scenario

EXIT_OK, EXIT_PARSE, EXIT_PHYSICS, EXIT_IO = 0, 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="photokin", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("run", "sweep the photon grid and write a spectrum table"),
                       ("bands", "export band structure, DOS, joint DOS or Bloch factors"),
                       ("check", "run the invariant suite on the scenario's objects")):
        p = sub.add_parser(name, help=text)
        p.add_argument("scenario", type=Path)
        p.add_argument("--constants", type=Path, help="key=value constants file")
        if name != "check":
            p.add_argument("--out", type=Path, help="output file (default: stdout or output.path)")
            p.add_argument("--format", choices=("csv", "json"))
        if name == "bands":
            p.add_argument("--kind", choices=("bands", "dos", "jdos", "bloch"), default="bands")
    return parser


def _fail(code: int, message: str) -> int:
    print(f"photokin: {message}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        raw = args.scenario.read_bytes()
        const = load_constants(args.constants) if args.constants else DEFAULT_CONSTANTS
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    except ValueError as exc:
        return _fail(EXIT_PARSE, f"constants file: {exc}")
    base_dir = args.scenario.parent
    try:
        scenario = parse_scenario(raw)
        from .runner import build_context, emit_output, export_bands, run_scan

        if args.command == "check":
            from .checks import run_checks

            results = run_checks(build_context(scenario, const, base_dir))
            for r in results:
                print(r)
            return EXIT_PHYSICS if any(r.status == "FAIL" for r in results) else EXIT_OK
        if args.command == "run":
            table = run_scan(scenario, const, base_dir)
        else:
            table = export_bands(build_context(scenario, const, base_dir), args.kind)
        fmt = args.format or scenario.get("output", "format", "csv")
        out = args.out
        if out is None and scenario.has("output", "path") and args.command == "run":
            out = base_dir / scenario.get("output", "path")
        emit_output(table, fmt, out)
    except ScenarioError as exc:
        return _fail(EXIT_PARSE, f"{args.scenario}:{exc}")
    except IoError as exc:
        return _fail(EXIT_IO, str(exc))
    except PhysicsError as exc:
        return _fail(EXIT_PHYSICS, f"{type(exc).__name__}: {exc}")
    except ValueError as exc:
        return _fail(EXIT_PHYSICS, f"{type(exc).__name__}: {exc}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
