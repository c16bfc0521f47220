"""Command line interface.

    migron migrate <file> [--mode precise|compatible] [--weaken neg-base|all-inputs]
                          [--show surface|coercions|type] [--json]
    migron bench  <manifest> [--mode precise|compatible|both] [--jobs N] [--json]
    migron eval   <file>     coercion-insert and run an un-migrated program
    migron check  <file>     surface typecheck only

Exit status: 0 on success, 1 on tool error, 2 on usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import run_suite
from .migrate import MigrationMode, WeakenVariant, migrate
from .parser import ParseError, parse
from .printer import Style, print_expr, print_typ
from .runtime import StuckCoercion, StuckOther, Timeout, Val, Machine, insert_coercions
from .typecheck import IllTyped, typecheck_gtlc


class ToolError(Exception):
    pass


def _read_program(path: str):
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    return parse(text)


def cmd_migrate(args) -> int:
    program = _read_program(args.file)
    result = migrate(
        MigrationMode(args.mode),
        program,
        variant=WeakenVariant(args.weaken),
    )
    surface = print_expr(result.migrated_surface)
    coercions = print_expr(result.migrated_coerced, Style.WITH_COERCIONS)
    typ = print_typ(result.program_type)
    if args.json:
        print(
            json.dumps(
                {
                    "mode": result.mode.value,
                    "surface": surface,
                    "coercions": coercions,
                    "type": typ,
                    "weights_satisfied": result.weights_satisfied,
                }
            )
        )
        return 0
    if args.show == "surface":
        print(surface)
    elif args.show == "coercions":
        print(coercions)
    else:
        print(typ)
    return 0


def cmd_bench(args) -> int:
    modes = (
        [MigrationMode.PRECISE, MigrationMode.COMPATIBLE]
        if args.mode == "both"
        else [MigrationMode(args.mode)]
    )
    reports = run_suite(args.manifest, modes, jobs=args.jobs)
    if args.json:
        payload = [r.to_json() for r in reports]
        print(json.dumps(payload[0] if len(payload) == 1 else payload, indent=2))
    else:
        for r in reports:
            print(r.table())
    failures = [p for r in reports for p in r.programs if p.error and not p.classification]
    return 1 if failures else 0


def cmd_eval(args) -> int:
    program = _read_program(args.file)
    machine = Machine()
    coerced, typ = insert_coercions({}, program)
    outcome = machine.eval(coerced, args.steps)
    match outcome:
        case Val(v):
            print(f"value: {machine.observe(v)}")
        case StuckCoercion(_, expected, found):
            found_text = found.kind if found else "?"
            print(f"stuck: failed coercion (expected {expected.kind}, found {found_text})")
        case StuckOther(reason):
            print(f"stuck: {reason}")
        case Timeout(steps):
            print(f"timeout after {steps} steps")
    return 0


def cmd_check(args) -> int:
    program = _read_program(args.file)
    print(print_typ(typecheck_gtlc({}, program)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="migron", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("migrate", help="migrate one program")
    p.add_argument("file")
    p.add_argument("--mode", choices=["precise", "compatible"], default="precise")
    p.add_argument("--weaken", choices=["neg-base", "all-inputs"], default="neg-base")
    p.add_argument("--show", choices=["surface", "coercions", "type"], default="surface")
    p.add_argument("--json", action="store_true")
    p.set_defaults(run=cmd_migrate)

    p = sub.add_parser("bench", help="run a suite manifest")
    p.add_argument("manifest")
    p.add_argument("--mode", choices=["precise", "compatible", "both"], default="both")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(run=cmd_bench)

    p = sub.add_parser("eval", help="run a program without migrating it")
    p.add_argument("file")
    p.add_argument("--steps", type=int, default=1_000_000)
    p.set_defaults(run=cmd_eval)

    p = sub.add_parser("check", help="typecheck a surface program")
    p.add_argument("file")
    p.set_defaults(run=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except (ParseError, IllTyped, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
