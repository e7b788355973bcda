"""Interpreter laws, checked on generated programs for both evaluators."""

from functools import lru_cache

from hypothesis import given, settings
from hypothesis import strategies as st

from dafny2cml import ir_eval as src
from dafny2cml import ml_eval as tgt
from dafny2cml import ml_ast as ml
from dafny2cml.compiler import compile_program, runtime_structure
from dafny2cml.generator import GenConfig, generate
from dafny2cml.ir import Binary, BinOp, LitInt, from_sexp, to_sexp
from dafny2cml.sexp import loads, print_sexp
from dafny2cml.simcheck import FINDINGS, check_simulation

seeds = st.integers(min_value=0, max_value=10**6)
budgets = st.integers(min_value=0, max_value=400)


@lru_cache(maxsize=None)
def program(seed):
    return generate(GenConfig(seed=seed))


@lru_cache(maxsize=None)
def compiled(seed):
    return compile_program(program(seed))


def src_run(seed, clock):
    s, r = src.run_program(program(seed), clock)
    return s.output_text, tuple(s.exits), r, s.clock


def tgt_run(seed, fuel):
    t, r = tgt.run_ml_program(compiled(seed), fuel)
    return t.output_text, r, t.fuel


# -- determinism --

@settings(max_examples=150, deadline=None)
@given(seeds, budgets)
def test_source_deterministic(seed, clock):
    assert src_run(seed, clock) == src_run(seed, clock)


@settings(max_examples=150, deadline=None)
@given(seeds, budgets)
def test_target_deterministic(seed, fuel):
    assert tgt_run(seed, fuel) == tgt_run(seed, fuel)


# -- timeout stability: a finished run is unchanged by extra budget --

@settings(max_examples=150, deadline=None)
@given(seeds, budgets, st.integers(min_value=0, max_value=5000))
def test_source_timeout_stability(seed, clock, extra):
    out, exits, r, left = src_run(seed, clock)
    if not isinstance(r, src.Timeout):
        out2, exits2, r2, left2 = src_run(seed, clock + extra)
        assert (out2, exits2, r2) == (out, exits, r)
        assert left2 == left + extra


@settings(max_examples=150, deadline=None)
@given(seeds, budgets, st.integers(min_value=0, max_value=5000))
def test_target_timeout_stability(seed, fuel, extra):
    out, r, left = tgt_run(seed, fuel)
    if not isinstance(r, tgt.RTimeout):
        out2, r2, left2 = tgt_run(seed, fuel + extra)
        assert (out2, r2) == (out, r)
        assert left2 == left + extra


# -- clock monotonicity: less budget times out no later and prints a prefix --

@settings(max_examples=150, deadline=None)
@given(seeds, budgets, budgets)
def test_source_clock_monotone(seed, a, b):
    lo, hi = sorted((a, b))
    out_lo, _, r_lo, _ = src_run(seed, lo)
    out_hi, _, r_hi, _ = src_run(seed, hi)
    assert out_hi.startswith(out_lo)
    if isinstance(r_hi, src.Timeout):
        assert isinstance(r_lo, src.Timeout)


@settings(max_examples=150, deadline=None)
@given(seeds, budgets, budgets)
def test_target_fuel_monotone(seed, a, b):
    lo, hi = sorted((a, b))
    out_lo, r_lo, _ = tgt_run(seed, lo)
    out_hi, r_hi, _ = tgt_run(seed, hi)
    assert out_hi.startswith(out_lo)
    if isinstance(r_hi, tgt.RTimeout):
        assert isinstance(r_lo, tgt.RTimeout)


# -- Euclidean division on both sides --

def test_euclid_law_source():
    for a in range(-20, 21):
        for b in range(-20, 21):
            if b == 0:
                continue
            _, q = src.eval_expr(src.SrcState(clock=0), Binary(BinOp.DIV, LitInt(a), LitInt(b)))
            _, r = src.eval_expr(src.SrcState(clock=0), Binary(BinOp.MOD, LitInt(a), LitInt(b)))
            assert a == b * q.value + r.value and 0 <= r.value < abs(b)


def test_euclid_law_target():
    runtime = tgt.declare_globals((runtime_structure(),))
    for a in range(-20, 21):
        for b in range(-20, 21):
            if b == 0:
                continue
            vals = []
            for helper in ("Dafny.ediv", "Dafny.emod"):
                e = ml.apps(ml.Var(helper), ml.lit_int(a), ml.lit_int(b))
                _, res = tgt.eval_ml(tgt.TgtState(fuel=10), {}, e, dict(runtime))
                vals.append(res.value.value)
            q, r = vals
            assert a == b * q + r and 0 <= r < abs(b)


# -- the simulation property itself --

@settings(max_examples=100, deadline=None)
@given(seeds)
def test_generated_programs_simulate(seed):
    out = check_simulation(program(seed))
    assert not isinstance(out, FINDINGS), out


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_schema_roundtrip(seed):
    p = program(seed)
    assert from_sexp(loads(print_sexp(to_sexp(p)))) == p
