from pathlib import Path

import pytest

from dafny2cml import ir
from dafny2cml.generator import GenConfig, generate
from dafny2cml.ir import (Assign, Binary, BinOp, Break, DeclVar, IrMethod, IrModule, IrProgram,
                          IrType, LitBool, LitInt, LitString, Print, SchemaError, Var, While,
                          from_sexp, to_sexp, validate)
from dafny2cml.sexp import load, loads, print_sexp

CORPUS = Path(__file__).parent / "corpus"

HELLO = '(program (module _module (method Main () () ((print (str "Hello, Cake\\n"))))))'


def main_only(*body, extra=()):
    return IrProgram((IrModule("_module", (IrMethod("Main", (), (), tuple(body)),) + extra),))


def test_decode_hello():
    p = from_sexp(loads(HELLO))
    assert p == main_only(Print(LitString("Hello, Cake\n")))


def test_decode_empty_program():
    p = from_sexp(loads("(program)"))
    assert p.modules == ()
    assert not validate(p).ok


def test_schema_error_path():
    with pytest.raises(SchemaError) as info:
        from_sexp(loads("(program 5)"))
    assert info.value.path == "program[0]"
    assert "module" in str(info.value)


@pytest.mark.parametrize("text, path", [
    ("(module _module)", "program"),
    ("(program (module _module (method Main () () ((frobnicate)))))",
     "program[0].module[0].method.body[0]"),
    ("(program (module _module (method Main () () ((print (pow 1 2))))))",
     "program[0].module[0].method.body[0].print"),
    ("(program (module _module (method Main ((x float)) () ())))",
     "program[0].module[0].method.ins[0]"),
    ("(program (module _module (method A () () ()) "
     "(method Main () () ((while (bool true) ((print 1) (assign 3 4)))))))",
     "program[0].module[1].method.body[0].while.body[1].assign"),
])
def test_schema_error_paths(text, path):
    with pytest.raises(SchemaError) as info:
        from_sexp(loads(text))
    assert info.value.path.startswith(path)


def test_validate_hello_ok():
    report = validate(from_sexp(loads(HELLO)))
    assert report.ok
    assert str(report) == "OK"


def test_break_outside_loop():
    report = validate(main_only(Break()))
    assert not report.ok
    assert any("Break outside loop" in v for v in report.violations)


def test_assign_type_mismatch():
    report = validate(main_only(DeclVar("x", IrType.INT, LitInt(0)), Assign("x", LitBool(True))))
    assert any("type mismatch" in v for v in report.violations)


def test_missing_main():
    report = validate(IrProgram((IrModule("_module", ()),)))
    assert any("missing method _module.Main" in v for v in report.violations)


@pytest.mark.parametrize("body, needle", [
    ((Print(Var("ghost")),), "ghost"),
    ((DeclVar("x", IrType.INT, LitInt(0)), DeclVar("x", IrType.INT, LitInt(1))), "x"),
    ((DeclVar("CML_x", IrType.INT, LitInt(0)),), "CML_"),
    ((While(LitInt(1), ()),), "type mismatch"),
])
def test_validity_violations(body, needle):
    report = validate(main_only(*body))
    assert not report.ok
    assert needle in str(report)


def test_corpus_programs_are_valid():
    for path in sorted(CORPUS.glob("*.dfy.sexp")):
        assert validate(from_sexp(load(path))).ok, path.name


def test_encode_decode_corpus():
    for path in sorted(CORPUS.glob("*.dfy.sexp")):
        p = from_sexp(load(path))
        assert from_sexp(loads(print_sexp(to_sexp(p)))) == p


def test_generated_roundtrip():
    for seed in range(50):
        p = generate(GenConfig(seed=seed))
        assert from_sexp(to_sexp(p)) == p


def test_type_of():
    env = {"i": IrType.INT}.get
    assert ir.type_of(Binary(BinOp.LE, Var("i"), LitInt(3)), env) is IrType.BOOL
    with pytest.raises(ir.IrTypeError):
        ir.type_of(Binary(BinOp.ADD, Var("i"), LitBool(True)), env)


def test_lookup_qualname():
    p = from_sexp(load(CORPUS / "factorial.dfy.sexp"))
    m = p.lookup("_module.Factorial")
    assert m.in_params == (("n", IrType.INT),)
    assert m.out_params == (("result", IrType.INT),)
    assert p.lookup("_module.Nope") is None
