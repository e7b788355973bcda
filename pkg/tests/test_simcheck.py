import json
from pathlib import Path

from dafny2cml import ir_eval as src
from dafny2cml import ml_eval as tgt
from dafny2cml.generator import FEATURES, GenConfig, generate
from dafny2cml.ir import from_sexp, validate
from dafny2cml.mutants import MUTANTS, DropBreakHandler
from dafny2cml.sexp import load, loads
from dafny2cml.simcheck import (FuzzReport, OutputMismatch, Related, ResultMismatch,
                                SourceErr, SourceTimeout, case_program, check_simulation, fuzz,
                                res_rel, state_rel, value_rel, write_witness)

CORPUS = Path(__file__).parent / "corpus"


def test_state_rel_examples():
    s = src.SrcState(clock=0, output=["Hello, Cake\n"])
    t = tgt.TgtState(fuel=0, output=["Hello, Cake\n"])
    assert state_rel(s, t)
    assert not state_rel(src.SrcState(clock=0, output=["a"]), tgt.TgtState(fuel=0, output=["b"]))


def test_state_rel_compares_exits():
    s = src.SrcState(clock=0, exits=[("_module.F", (("i", src.VInt(5)),))])
    t = tgt.TgtState(fuel=0, probes=[("_module.F", (("i", tgt.VInt(5)),))])
    assert state_rel(s, t)
    t.probes[0] = ("_module.F", (("i", tgt.VInt(6)),))
    assert not state_rel(s, t)


def test_value_rel():
    assert value_rel(src.VInt(5), tgt.VInt(5))
    assert value_rel(src.VStr("ab"), tgt.char_list("ab"))
    assert value_rel(src.VChar("a"), tgt.VChar("a"))
    assert not value_rel(src.VBool(True), tgt.VInt(1))
    assert not value_rel(src.VStr("ab"), tgt.VStrPacked("ab"))


def test_res_rel():
    assert res_rel(src.Done(), tgt.RVal(tgt.UNIT_V))
    assert not res_rel(src.Done(), tgt.RRaise(tgt.VExn("Dafny.Return")))
    # a timeout pair relates only at the current fuel; the fuel search retries it
    assert res_rel(src.Timeout(), tgt.RTimeout())
    assert not res_rel(src.Done(), tgt.RTimeout())


def test_hello_related():
    p = from_sexp(load(CORPUS / "hello.dfy.sexp"))
    assert isinstance(check_simulation(p, 1000, 10**6), Related)


def test_factorial_related():
    p = from_sexp(load(CORPUS / "factorial.dfy.sexp"))
    out = check_simulation(p)
    assert isinstance(out, Related)
    s, _ = src.run_program(p, 1000)
    assert s.output_text == "120\n"


def test_drop_break_handler_is_caught():
    p = from_sexp(load(CORPUS / "break.dfy.sexp"))
    out = check_simulation(p, compiler=DropBreakHandler(instrument=True))
    assert isinstance(out, ResultMismatch)
    assert out.src == src.Done()
    assert out.tgt == tgt.RRaise(tgt.VExn("Dafny.Break"))


def test_skips():
    div0 = loads("(program (module _module (method Main () () ((print (div 1 0))))))")
    assert isinstance(check_simulation(from_sexp(div0)), SourceErr)
    spin = loads("(program (module _module (method Main () () ((while (bool true) ())))))")
    assert check_simulation(from_sexp(spin), 50) == SourceTimeout(50)


def test_fuel_search_reaches_beyond_clock():
    # the target needs more fuel than the source clock: doubling must find it
    p = from_sexp(load(CORPUS / "factorial.dfy.sexp"))
    out = check_simulation(p, src_clock=3)
    assert isinstance(out, (Related, SourceTimeout))
    out = check_simulation(p, src_clock=8)
    assert isinstance(out, Related) and out.fuel_used > 0


def test_generator_seed0_loops_only_valid():
    p = generate(GenConfig(seed=0, features=frozenset({"loops"})))
    assert validate(p).ok


def test_generator_deterministic():
    for seed in (0, 1, 17, 999):
        assert generate(GenConfig(seed=seed)) == generate(GenConfig(seed=seed))
    assert generate(GenConfig(seed=1)) != generate(GenConfig(seed=2))


def test_generator_valid_across_features():
    subsets = [frozenset(), frozenset({"loops"}), frozenset({"labels", "loops"}),
               frozenset({"calls", "outs"}), frozenset({"strings"}), FEATURES]
    for feats in subsets:
        for seed in range(60):
            p = generate(GenConfig(seed=seed, features=feats))
            assert validate(p).ok, (feats, seed, str(validate(p)))


def test_generator_termination_rate():
    done = 0
    for seed in range(1000):
        _, r = src.run_program(case_program(seed), 10_000)
        done += isinstance(r, src.Done)
    assert done >= 900


def test_generator_exercises_features():
    seen = set()
    for seed in range(200):
        text = repr(case_program(seed))
        for name in ("While", "Labeled", "Call(", "BreakLabel", "ContinueLabel", "Continue()",
                     "Break()", "Return()", "LitString", "CONCAT", "DIV", "MOD"):
            if name in text:
                seen.add(name)
    assert len(seen) == 12


def test_fuzz_small_run():
    report = fuzz(50, seed=123)
    assert report.total == 50
    assert report.mismatched == 0
    assert not report.vacuous()
    assert "Related" in report.table()


def test_fuzz_report_vacuity():
    r = FuzzReport(total=10)
    r.counts["SourceTimeout"] = 2
    assert r.vacuous()
    r.counts["SourceTimeout"] = 1
    assert not r.vacuous()


def test_mutant_registry():
    assert sorted(MUTANTS) == ["drop-break-handler", "int-refs-init-one",
                               "return-handler-in-loops", "skip-implode", "swap-le-operands"]


def test_witness_files(tmp_path):
    p = from_sexp(load(CORPUS / "break.dfy.sexp"))
    compiler = DropBreakHandler(instrument=True)
    out = check_simulation(p, compiler=compiler)
    d = write_witness(tmp_path, "case", p, out, compiler=compiler)
    names = sorted(f.name for f in d.iterdir())
    assert names == ["program.dfy.sexp", "results.json", "source_output.txt",
                     "target.cml.sml", "target_output.txt"]
    assert from_sexp(load(d / "program.dfy.sexp")) == p
    data = json.loads((d / "results.json").read_text())
    assert "ResultMismatch" in data["outcome"]
    assert (d / "source_output.txt").read_text() == "012|done\n"


def test_output_mismatch_reported():
    # the swapped `<=` flips a printed comparison
    p = from_sexp(loads("(program (module _module (method Main () () "
                        "((print (le 1 2))))))"))
    out = check_simulation(p, compiler=MUTANTS["swap-le-operands"](instrument=True))
    assert out == OutputMismatch("true", "false")
