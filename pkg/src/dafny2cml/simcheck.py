"""Differential check of the compiler against the source semantics.

When the source run of ``p`` terminates without error, some amount of fuel
must let the compiled program finish with unit and print the same text.  The
parameters of every method must also agree at each method exit.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Union

from . import ir_eval as src
from . import ml_eval as tgt
from .compiler import Compiler
from .generator import GenConfig, generate
from .ir import IrProgram, to_sexp
from .ml_ast import pretty
from .sexp import print_sexp

log = logging.getLogger(__name__)

DEFAULT_CLOCK = 10_000
DEFAULT_FUEL_CAP = 2 ** 20

# the harness encoder; decoding lives in ir.from_sexp
to_schema = to_sexp


# -- relations --------------------------------------------------------------

def value_rel(v: src.SrcValue, w: tgt.MlValue) -> bool:
    match v:
        case src.VInt(n):
            return type(w) is tgt.VInt and w.value == n
        case src.VBool(b):
            return type(w) is tgt.VBool and w.value == b
        case src.VChar(c):
            return type(w) is tgt.VChar and w.value == c
        case src.VStr(s):
            return type(w) is tgt.VCharList and w.chars == tuple(s)
    return False


def exits_rel(exits, probes) -> bool:
    if len(exits) != len(probes):
        return False
    for (name, values), (tag, items) in zip(exits, probes):
        if name != tag or len(values) != len(items):
            return False
        for (n1, v), (n2, w) in zip(values, items):
            if n1 != n2 or not value_rel(v, w):
                return False
    return True


def state_rel(s: src.SrcState, t: tgt.TgtState) -> bool:
    return s.output_text == t.output_text and exits_rel(s.exits, t.probes)


def res_rel(r: src.SrcResult, r2: tgt.TgtResult) -> bool:
    """Timeout ~ RTimeout holds only at the current fuel; check_simulation retries it."""
    if isinstance(r, src.Done):
        return isinstance(r2, tgt.RVal) and r2.value == tgt.UNIT_V
    if isinstance(r, src.Timeout):
        return isinstance(r2, tgt.RTimeout)
    return False


# -- outcomes ---------------------------------------------------------------

@dataclass(frozen=True)
class Related:
    fuel_used: int


@dataclass(frozen=True)
class OutputMismatch:
    src: str
    tgt: str


@dataclass(frozen=True)
class ResultMismatch:
    src: src.SrcResult
    tgt: tgt.TgtResult


@dataclass(frozen=True)
class StateMismatch:
    src_exits: tuple
    tgt_probes: tuple


@dataclass(frozen=True)
class TargetFuelExhausted:
    cap_reached: int


@dataclass(frozen=True)
class SourceErr:
    result: src.Err


@dataclass(frozen=True)
class SourceTimeout:
    clock: int


DiffOutcome = Union[Related, OutputMismatch, ResultMismatch, StateMismatch,
                    TargetFuelExhausted, SourceErr, SourceTimeout]

SKIPS = (SourceErr, SourceTimeout)
FINDINGS = (OutputMismatch, ResultMismatch, StateMismatch, TargetFuelExhausted)


def outcome_label(o: DiffOutcome) -> str:
    return type(o).__name__


def run_target(compiled, src_clock: int, fuel_cap: int):
    """Run by fuel doubling from ``src_clock``; returns (state, result, fuel)."""
    fuel = max(1, min(src_clock, fuel_cap))
    while True:
        t, r = tgt.run_ml_program(compiled, fuel)
        if not isinstance(r, tgt.RTimeout) or fuel >= fuel_cap:
            return t, r, fuel
        fuel = min(fuel * 2, fuel_cap)


def check_simulation(p: IrProgram, src_clock: int = DEFAULT_CLOCK,
                     fuel_cap: int = DEFAULT_FUEL_CAP,
                     compiler: Compiler | None = None) -> DiffOutcome:
    s, r = src.run_program(p, src_clock)
    if isinstance(r, src.Err):
        return SourceErr(r)
    if isinstance(r, src.Timeout):
        return SourceTimeout(src_clock)
    if compiler is None:
        compiler = Compiler(instrument=True)
    compiled = compiler.compile_program(p)
    t, r2, fuel = run_target(compiled, src_clock, fuel_cap)
    if isinstance(r2, tgt.RTimeout):
        return TargetFuelExhausted(fuel_cap)
    if not res_rel(r, r2):
        return ResultMismatch(r, r2)
    if s.output_text != t.output_text:
        return OutputMismatch(s.output_text, t.output_text)
    if not exits_rel(s.exits, t.probes):
        return StateMismatch(tuple(s.exits), tuple(t.probes))
    return Related(fuel - t.fuel)


# -- fuzzing ----------------------------------------------------------------

@dataclass
class FuzzReport:
    counts: Counter = field(default_factory=Counter)
    findings: list[tuple[int, DiffOutcome]] = field(default_factory=list)
    total: int = 0

    @property
    def skipped(self) -> int:
        return self.counts["SourceErr"] + self.counts["SourceTimeout"]

    @property
    def mismatched(self) -> int:
        return len(self.findings)

    @property
    def related(self) -> int:
        return self.counts["Related"]

    def vacuous(self, max_skip_ratio: float = 0.1) -> bool:
        return self.total > 0 and self.skipped > max_skip_ratio * self.total

    def table(self) -> str:
        rows = [("Related", self.related), ("skipped", self.skipped),
                ("mismatched", self.mismatched), ("total", self.total)]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v:>6}" for k, v in rows)


def case_program(case_seed: int, cfg: GenConfig | None = None) -> IrProgram:
    return generate(replace(cfg or GenConfig(), seed=case_seed))


def _case(args) -> tuple[int, DiffOutcome]:
    case_seed, cfg, src_clock, fuel_cap, compiler = args
    return case_seed, check_simulation(case_program(case_seed, cfg), src_clock, fuel_cap, compiler)


def fuzz(count: int = 1000, seed: int = 0, cfg: GenConfig | None = None,
         src_clock: int = DEFAULT_CLOCK, fuel_cap: int = DEFAULT_FUEL_CAP,
         compiler: Compiler | None = None, jobs: int = 1,
         stop_on_finding: bool = False) -> FuzzReport:
    """Check ``count`` generated programs; case ``i`` uses generator seed ``seed + i``."""
    cfg = cfg or GenConfig()
    compiler = compiler or Compiler(instrument=True)
    work = [(seed + i, cfg, src_clock, fuel_cap, compiler) for i in range(count)]
    report = FuzzReport()
    if jobs > 1 and not stop_on_finding:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_case, work, chunksize=16))
    else:
        results = map(_case, work)
    for case_seed, outcome in results:
        report.total += 1
        report.counts[outcome_label(outcome)] += 1
        if isinstance(outcome, FINDINGS):
            log.info("seed %d: %s", case_seed, outcome)
            report.findings.append((case_seed, outcome))
            if stop_on_finding:
                break
    return report


def find_counterexample(compiler: Compiler, count: int = 1000, seed: int = 0,
                        cfg: GenConfig | None = None) -> tuple[int, DiffOutcome] | None:
    report = fuzz(count, seed, cfg, compiler=compiler, stop_on_finding=True)
    return report.findings[0] if report.findings else None


# -- witnesses --------------------------------------------------------------

def _describe(r) -> str:
    return repr(r)


def write_witness(root: Path | str, name: str, p: IrProgram, outcome: DiffOutcome,
                  src_clock: int = DEFAULT_CLOCK, fuel_cap: int = DEFAULT_FUEL_CAP,
                  compiler: Compiler | None = None) -> Path:
    """One directory per failure: program, target text, both outputs, both results."""
    compiler = compiler or Compiler(instrument=True)
    d = Path(root) / name
    d.mkdir(parents=True, exist_ok=True)
    s, r = src.run_program(p, src_clock)
    compiled = compiler.compile_program(p)
    t, r2, fuel = run_target(compiled, src_clock, fuel_cap)
    (d / "program.dfy.sexp").write_text(print_sexp(to_schema(p)) + "\n", encoding="utf-8")
    (d / "target.cml.sml").write_text(pretty(compiled), encoding="utf-8")
    (d / "source_output.txt").write_text(s.output_text, encoding="utf-8")
    (d / "target_output.txt").write_text(t.output_text, encoding="utf-8")
    (d / "results.json").write_text(json.dumps({
        "outcome": _describe(outcome),
        "source_result": _describe(r),
        "target_result": _describe(r2),
        "target_fuel": fuel,
    }, indent=2) + "\n", encoding="utf-8")
    return d
