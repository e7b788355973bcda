"""Command-line driver: compile, run either side, diff, and fuzz.

Exit status: 0 on success, 1 on mismatch findings or a failed run, 2 on usage,
I/O, parse, schema, or validity errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import ir, ir_eval, ml_eval, simcheck
from .compiler import Compiler
from .generator import FEATURES, GenConfig
from .ml_ast import pretty
from .mutants import MUTANTS
from .sexp import SexpError, load

log = logging.getLogger("dafny2cml")

EXIT_OK, EXIT_FINDING, EXIT_USAGE = 0, 1, 2


class _Usage(Exception):
    pass


def _load_program(path: str) -> ir.IrProgram:
    try:
        expr = load(path)
    except OSError as exc:
        raise _Usage(f"cannot read {path}: {exc.strerror or exc}") from exc
    except SexpError as exc:
        raise _Usage(f"{path}: parse error: {exc}") from exc
    try:
        program = ir.from_sexp(expr)
    except ir.SchemaError as exc:
        raise _Usage(f"{path}: schema error {exc}") from exc
    report = ir.validate(program)
    if not report.ok:
        raise _Usage(f"{path}: invalid program:\n  " + "\n  ".join(report.violations))
    return program


def _features(csv: str | None) -> frozenset[str]:
    if csv is None or csv == "all":
        return FEATURES
    chosen = frozenset(f.strip() for f in csv.split(",") if f.strip())
    unknown = chosen - FEATURES
    if unknown:
        raise _Usage(f"unknown feature(s): {', '.join(sorted(unknown))}; "
                     f"choose from {', '.join(sorted(FEATURES))}")
    return chosen


def cmd_compile(args) -> int:
    program = _load_program(args.input)
    text = pretty(Compiler().compile_program(program))
    if args.output:
        try:
            Path(args.output).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise _Usage(f"cannot write {args.output}: {exc.strerror or exc}") from exc
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_run_ir(args) -> int:
    program = _load_program(args.input)
    state, result = ir_eval.run_program(program, args.clock)
    sys.stdout.write(state.output_text)
    sys.stdout.flush()
    print(f"result: {result}", file=sys.stderr)
    return EXIT_OK if isinstance(result, ir_eval.Done) else EXIT_FINDING


def cmd_run_target(args) -> int:
    program = _load_program(args.input)
    compiled = Compiler().compile_program(program)
    state, result = ml_eval.run_ml_program(compiled, args.fuel_cap)
    sys.stdout.write(state.output_text)
    sys.stdout.flush()
    print(f"result: {result}", file=sys.stderr)
    ok = isinstance(result, ml_eval.RVal) and result.value == ml_eval.UNIT_V
    return EXIT_OK if ok else EXIT_FINDING


def cmd_diff(args) -> int:
    program = _load_program(args.input)
    outcome = simcheck.check_simulation(program, args.clock, args.fuel_cap)
    print(simcheck.outcome_label(outcome))
    if isinstance(outcome, simcheck.FINDINGS):
        print(outcome, file=sys.stderr)
        if args.witness_dir:
            d = simcheck.write_witness(args.witness_dir, Path(args.input).stem, program, outcome,
                                       args.clock, args.fuel_cap)
            print(f"witness written to {d}", file=sys.stderr)
        return EXIT_FINDING
    if isinstance(outcome, simcheck.SKIPS):
        print(f"skipped: {outcome}", file=sys.stderr)
    return EXIT_OK


def cmd_fuzz(args) -> int:
    cfg = GenConfig(features=_features(args.features))
    compiler_cls = Compiler
    if args.mutant:
        compiler_cls = MUTANTS[args.mutant]
    compiler = compiler_cls(instrument=True)
    report = simcheck.fuzz(args.count, args.seed, cfg, args.clock, args.fuel_cap,
                           compiler=compiler, jobs=args.jobs)
    print(report.table())
    for case_seed, outcome in report.findings:
        print(f"seed {case_seed}: {outcome}", file=sys.stderr)
        if args.witness_dir:
            program = simcheck.case_program(case_seed, cfg)
            simcheck.write_witness(args.witness_dir, f"seed-{case_seed}", program, outcome,
                                   args.clock, args.fuel_cap, compiler)
    if report.vacuous():
        print(f"vacuity guard: {report.skipped} of {report.total} cases skipped (> 10%)",
              file=sys.stderr)
        return EXIT_FINDING
    return EXIT_FINDING if report.findings else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dafny2cml",
                                     description="Compile Dafny-IR S-expressions to ML and "
                                                 "check the translation differentially.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, clock=True, fuel=True):
        p.add_argument("-v", "--verbose", action="count", default=0)
        if clock:
            p.add_argument("--clock", type=int, default=simcheck.DEFAULT_CLOCK,
                           help="source interpreter clock (default %(default)s)")
        if fuel:
            p.add_argument("--fuel-cap", type=int, default=simcheck.DEFAULT_FUEL_CAP,
                           help="target interpreter fuel cap (default %(default)s)")

    p = sub.add_parser("compile", help="write the pretty-printed target program")
    p.add_argument("input")
    p.add_argument("-o", "--output", help="output .cml.sml path (default: stdout)")
    common(p, clock=False, fuel=False)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("run-ir", help="run the source interpreter")
    p.add_argument("input")
    common(p, fuel=False)
    p.set_defaults(func=cmd_run_ir)

    p = sub.add_parser("run-target", help="compile, then run the target interpreter")
    p.add_argument("input")
    common(p, clock=False)
    p.set_defaults(func=cmd_run_target)

    p = sub.add_parser("diff", help="check one program differentially")
    p.add_argument("input")
    p.add_argument("--witness-dir", help="directory for failure witnesses")
    common(p)
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("fuzz", help="check generated programs differentially")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--features", help=f"comma-separated subset of {','.join(sorted(FEATURES))}")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--mutant", choices=sorted(MUTANTS), help="use a deliberately broken compiler")
    p.add_argument("--witness-dir", help="directory for failure witnesses")
    common(p)
    p.set_defaults(func=cmd_fuzz)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _Usage as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
