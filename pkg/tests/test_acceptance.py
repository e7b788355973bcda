"""Acceptance criteria, one test per criterion, each under its runtime limit.

Each test logs a PASS/FAIL line; the lines are collected in the terminal summary.
Run on its own with ``pytest tests/test_acceptance.py -v``.
"""

import math
import sys
from contextlib import contextmanager
from pathlib import Path
from time import perf_counter

from hypothesis import given, settings

import test_properties as laws
from test_sexp import trees

from dafny2cml import ir_eval as src
from dafny2cml import ml_ast as ml
from dafny2cml import ml_eval as tgt
from dafny2cml.compiler import BREAK, RETURN, compile_program
from dafny2cml.generator import GenConfig
from dafny2cml.ir import Call, IrMethod, IrModule, IrProgram, LitInt, from_sexp, to_sexp
from dafny2cml.mutants import MUTANTS
from dafny2cml.sexp import load, loads, print_sexp
from dafny2cml.simcheck import case_program, find_counterexample, fuzz

HERE = Path(__file__).parent
CORPUS = HERE / "corpus"
GOLDEN = HERE / "golden"


@contextmanager
def criterion(log, n, title, limit):
    t0 = perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        dt = perf_counter() - t0
        verdict = "PASS" if ok and dt < limit else "FAIL"
        line = f"criterion {n}: {verdict}  {title}  ({dt:.2f} s, limit {limit} s)"
        log.append(line)
        print(line, file=sys.stderr)
    assert dt < limit, f"criterion {n} took {dt:.2f} s, limit {limit} s"


def module_binding(p, name, module="_module"):
    struct = next(d for d in p.decs if isinstance(d, ml.StructureDec) and d.name == module)
    (group,) = struct.decs
    return next(b for b in group.bindings if b.name == name)


def run_both(p, clock=10_000, fuel=2**20):
    s, r = src.run_program(p, clock)
    t, r2 = tgt.run_ml_program(compile_program(p), fuel)
    return s, r, t, r2


def test_criterion_1_hello_world(acceptance_log):
    with criterion(acceptance_log, 1, "hello-world fidelity", 1):
        p = from_sexp(load(CORPUS / "hello.dfy.sexp"))
        compiled = compile_program(p)
        text = ml.pretty(compiled)
        assert "structure _module" in text
        main = module_binding(compiled, "Main")
        # the whole body sits under the Return handler
        assert main.body == ml.catch(main.body.body, RETURN)
        print_site, ret = main.body.body.first, main.body.body.second
        assert isinstance(print_site, ml.PrintPrim) and isinstance(print_site.arg, ml.Implode)
        assert ret == ml.Raise(ml.Con(RETURN))
        assert "String.implode" in text and "raise Dafny.Return" in text
        assert "handle Dafny.Return => ()" in text
        s, r, t, r2 = run_both(p, 1000, 1000)
        expected = "Hello, Cake\n"
        assert len(expected) == 12
        assert s.output_text == expected and r == src.Done()
        assert t.output_text == expected and r2 == tgt.RVal(tgt.UNIT_V)


def test_criterion_2_loop_shape(acceptance_log):
    with criterion(acceptance_log, 2, "loop-shape fidelity", 1):
        compiled = compile_program(from_sexp(load(CORPUS / "factorial.dfy.sexp")))
        text = ml.pretty(compiled)
        assert text == (GOLDEN / "factorial.cml.sml").read_text(encoding="utf-8")
        assert "if not ((! n) < (! _0_i))" in text
        fact = module_binding(compiled, "Factorial")
        stack, loops = [fact.body], []
        while stack:
            node = stack.pop()
            if isinstance(node, ml.LetRecFuns):
                loops.append(node)
            stack.extend(v for v in (getattr(node, f) for f in getattr(node, "__slots__", ()))
                         if isinstance(v, (ml.Let, ml.Seq, ml.Handle, ml.If, ml.LetRecFuns,
                                           ml.Fn)))
        (loop,) = loops
        (fb,) = loop.bindings
        assert fb.name == "CML_while_0"
        assert fb.body.cond == ml.not_(ml.BinPrim("IntLt", ml.Deref(ml.Var("n")),
                                                  ml.Deref(ml.Var("_0_i"))))
        # Break is handled at the initial invocation only, never inside the recursion
        assert loop.body == ml.catch(ml.App(ml.Var("CML_while_0"), ml.UNIT), BREAK)
        assert "handle" not in "\n".join(ml.lines(fb.body))


def test_criterion_3_factorial(acceptance_log):
    with criterion(acceptance_log, 3, "factorial semantics, n in [0, 10]", 1):
        base = from_sexp(load(CORPUS / "factorial.dfy.sexp"))
        main, fact = base.lookup("_module.Main"), base.lookup("_module.Factorial")
        for n in range(11):
            oracle = 1
            for k in range(2, n + 1):
                oracle *= k
            assert oracle == math.factorial(n)
            body = tuple(Call(s.outs, s.callee, (LitInt(n),)) if isinstance(s, Call) else s
                         for s in main.body)
            p = IrProgram((IrModule("_module",
                                    (IrMethod("Main", (), (), body), fact)),))
            s, r, t, r2 = run_both(p)
            assert s.output_text == t.output_text == f"{oracle}\n"
            assert r == src.Done() and r2 == tgt.RVal(tgt.UNIT_V)


def test_criterion_4_simulation(acceptance_log):
    with criterion(acceptance_log, 4, "simulation on 1000 generated programs", 120):
        report = fuzz(1000, seed=0, cfg=GenConfig())
        print(report.table(), file=sys.stderr)
        assert report.total == 1000
        assert report.findings == []
        assert not report.vacuous(0.1)


def test_criterion_5_mutants(acceptance_log):
    # five separate suite runs, one per mutant
    with criterion(acceptance_log, 5, "mutation sensitivity, five mutants", 600):
        survivors = []
        for name in sorted(MUTANTS):
            found = find_counterexample(MUTANTS[name](instrument=True), 1000, 0, GenConfig())
            if found is None:
                survivors.append(name)
            else:
                print(f"{name}: seed {found[0]} -> {type(found[1]).__name__}", file=sys.stderr)
        assert survivors == [], f"survived 1000 cases: {survivors}"


CONTROL_FLOW = {
    "break": "012|done\n",
    "continue": "1 3 5 7 9 \n",
    # i=1: j=1 leaves inner; i=2: j=2 continues; i=3: j=3 leaves inner;
    # i=4, j=3: break-label to the outer loop passes the inner handler
    "labeled": ";21,23,24,25,;31,;41,4\n",
    "long_loop": f"{100_000 * 100_001 // 2}\n",
}


def test_criterion_6_control_flow(acceptance_log):
    with criterion(acceptance_log, 6, "control-flow suite", 5):
        for name, expected in CONTROL_FLOW.items():
            p = from_sexp(load(CORPUS / f"{name}.dfy.sexp"))
            s, r, t, r2 = run_both(p, clock=10**6, fuel=10**6)
            assert r == src.Done(), name
            assert s.output_text == expected, name
            assert r2 == tgt.RVal(tgt.UNIT_V), (name, r2)
            assert t.output_text == expected, name
        text = ml.pretty(compile_program(from_sexp(load(CORPUS / "labeled.dfy.sexp"))))
        inner = text.index('Dafny.LabeledBreak l => if l = "inner"')
        outer = text.index('Dafny.LabeledBreak l => if l = "outer"')
        assert inner < outer and 'raise (Dafny.LabeledBreak l)' in text


def test_criterion_7_interpreter_laws(acceptance_log):
    with criterion(acceptance_log, 7, "interpreter laws on both evaluators", 30):
        for law in (laws.test_source_deterministic, laws.test_target_deterministic,
                    laws.test_source_timeout_stability, laws.test_target_timeout_stability,
                    laws.test_source_clock_monotone, laws.test_target_fuel_monotone,
                    laws.test_euclid_law_source, laws.test_euclid_law_target):
            law()


@settings(max_examples=1000, deadline=None, database=None)
@given(trees())
def _sexp_roundtrip(tree):
    assert loads(print_sexp(tree)) == tree


def test_criterion_8_round_trips(acceptance_log):
    with criterion(acceptance_log, 8, "S-expression and schema round-trips", 10):
        _sexp_roundtrip()
        for seed in range(1000):
            p = case_program(seed)
            assert from_sexp(to_sexp(p)) == p
