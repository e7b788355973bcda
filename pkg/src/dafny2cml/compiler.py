"""Lowering from the Dafny IR to the ML target.

Every method becomes a unit-returning function in one mutually recursive
group per module.  Locals become references and loops become tail-recursive
local functions.  Each jump statement raises an exception declared in the
``Dafny`` runtime structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ir
from . import ml_ast as ml
from .ir import BinOp, IrType
from .ml_ast import (UNIT, App, AssignRef, BinPrim, CharList, Con, Deref, ExceptionDec, Fn,
                     FunBinding, FunGroup, If, Implode, Let, LetRecFuns, Lit, MlProgramT, PrintPrim,
                     Probe, Raise, Ref, StructureDec, UnPrim, Var, apps, catch, catch_label,
                     lit_int, not_, seq)

RUNTIME = "Dafny"
RETURN = "Dafny.Return"
BREAK = "Dafny.Break"
CONTINUE = "Dafny.Continue"
LABELED_BREAK = "Dafny.LabeledBreak"
LABELED_CONTINUE = "Dafny.LabeledContinue"
DIV_BY_ZERO = "Dafny.DivByZero"

UNIT_PARAM = "_"
OUT_PREFIX = "_out_"


class CompileOnInvalid(Exception):
    def __init__(self, report: ir.ValidityReport):
        self.report = report
        super().__init__("cannot compile an invalid program:\n" + str(report))


def runtime_structure() -> StructureDec:
    a, b, n, r = Var("a"), Var("b"), Var("n"), Var("r")
    zero_check = BinPrim("PolyEq", b, lit_int(0))
    emod = If(zero_check, Raise(Con("DivByZero")),
              Let("r", BinPrim("IntMod", a, b),
                  If(BinPrim("IntLt", r, lit_int(0)), BinPrim("IntSub", r, b), r)))
    ediv = If(zero_check, Raise(Con("DivByZero")),
              BinPrim("IntDiv", BinPrim("IntSub", a, apps(Var("emod"), a, b)), b))
    helpers = FunGroup((
        FunBinding("emod", "a", Fn("b", emod)),
        FunBinding("ediv", "a", Fn("b", ediv)),
        FunBinding("int_to_string", "n", UnPrim("IntToChars", n)),
        FunBinding("bool_to_string", "b", If(b, CharList("true"), CharList("false"))),
        FunBinding("char_to_string", "c", UnPrim("CharToChars", Var("c"))),
    ))
    return StructureDec(RUNTIME, (
        ExceptionDec("Return"),
        ExceptionDec("Break"),
        ExceptionDec("Continue"),
        ExceptionDec("LabeledBreak", "string"),
        ExceptionDec("LabeledContinue", "string"),
        ExceptionDec("DivByZero"),
        helpers,
    ))


@dataclass
class CompileCtx:
    program: ir.IrProgram
    module: str
    while_counter: int = 0
    decl_counter: int = 0
    scopes: list[dict[str, tuple[str, IrType]]] = field(default_factory=list)
    current_outs: list[str] = field(default_factory=list)

    def fresh_while(self) -> str:
        name = f"CML_while_{self.while_counter}"
        self.while_counter += 1
        return name

    def declare(self, name: str, ty: IrType) -> str:
        mangled = f"_{self.decl_counter}_{name}"
        self.decl_counter += 1
        self.scopes[-1][name] = (mangled, ty)
        return mangled

    def resolve(self, name: str) -> tuple[str, IrType]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        raise KeyError(name)

    def type_of(self, e: ir.IrExpr) -> IrType:
        def lookup(n):
            try:
                return self.resolve(n)[1]
            except KeyError:
                return None
        return ir.type_of(e, lookup)


def _continues(stmts, label: str | None) -> bool:
    """Does a continue in ``stmts`` target the enclosing loop (by label if given)?"""
    for s in stmts:
        match s:
            case ir.Continue() if label is None:
                return True
            case ir.ContinueLabel(l) if l == label:
                return True
            case ir.If(_, t, e):
                if _continues(t, label) or _continues(e, label):
                    return True
            case ir.While(_, body):
                if label is not None and _continues(body, label):
                    return True
            case ir.Labeled(_, body):
                if isinstance(body, ir.While):
                    if label is not None and _continues(body.body, label):
                        return True
                elif _continues((body,), label):
                    return True
    return False


class Compiler:
    def __init__(self, instrument: bool = False):
        # instrument: emit Probe nodes recording parameter values at method exit
        self.instrument = instrument

    # -- seams overridden by deliberately broken variants in simcheck --

    def default_value(self, ty: IrType) -> ml.MlExp:
        if ty is IrType.INT:
            return lit_int(0)
        if ty is IrType.BOOL:
            return ml.FALSE
        if ty is IrType.CHAR:
            return Lit("char", "a")
        return CharList("")

    def loop_entry(self, first_call: ml.MlExp) -> ml.MlExp:
        return catch(first_call, BREAK)

    def loop_body(self, body: ml.MlExp) -> ml.MlExp:
        return body

    def less_equal(self, lhs: ml.MlExp, rhs: ml.MlExp, ty: IrType) -> ml.MlExp:
        return not_(self.less_than(rhs, lhs, ty))

    def implode(self, chars: ml.MlExp) -> ml.MlExp:
        return Implode(chars)

    # -- program structure --

    def compile_program(self, p: ir.IrProgram) -> MlProgramT:
        report = ir.validate(p)
        if not report.ok:
            raise CompileOnInvalid(report)
        decs = [runtime_structure()]
        for mod in p.modules:
            bindings = tuple(self.compile_method(m, CompileCtx(p, mod.name))
                             for m in mod.methods)
            decs.append(StructureDec(mod.name, (FunGroup(bindings),) if bindings else ()))
        return MlProgramT(tuple(decs))

    def compile_method(self, m: ir.IrMethod, ctx: CompileCtx) -> FunBinding:
        params = {name: (name, ty) for name, ty in m.in_params + m.out_params}
        ctx.scopes = [params]
        ctx.current_outs = [OUT_PREFIX + name for name, _ in m.out_params]
        body = self.compile_stmts(m.body + (ir.Return(),), ctx)
        tail: list[ml.MlExp] = [catch(body, RETURN)]
        if self.instrument:
            tail.append(Probe(f"{ctx.module}.{m.name}",
                              tuple((n, Deref(Var(n))) for n in params)))
        for cell, (name, _) in zip(ctx.current_outs, m.out_params):
            tail.append(AssignRef(Var(cell), Deref(Var(name))))
        out = seq(*tail)
        for name, ty in reversed(m.out_params):
            out = Let(name, Ref(self.default_value(ty)), out)
        for name, _ in reversed(m.in_params):
            out = Let(name, Ref(Var(name)), out)
        fn_params = [name for name, _ in m.in_params] + ctx.current_outs or [UNIT_PARAM]
        for p in reversed(fn_params[1:]):
            out = Fn(p, out)
        return FunBinding(m.name, fn_params[0], out)

    # -- statements --

    def compile_stmts(self, stmts, ctx: CompileCtx) -> ml.MlExp:
        ctx.scopes.append({})
        try:
            items: list[tuple] = []
            for s in stmts:
                if isinstance(s, ir.DeclVar):
                    init = self.compile_expr(s.init, ctx)
                    items.append(("let", ctx.declare(s.name, s.type), s.type, init))
                else:
                    items.append(("exp", self.compile_stmt(s, ctx)))
        finally:
            ctx.scopes.pop()
        acc: ml.MlExp | None = None
        for item in reversed(items):
            if item[0] == "exp":
                acc = item[1] if acc is None else ml.Seq(item[1], acc)
            else:
                _, name, ty, init = item
                assign = AssignRef(Var(name), init)
                acc = Let(name, Ref(self.default_value(ty)),
                          assign if acc is None else ml.Seq(assign, acc))
        return UNIT if acc is None else acc

    def compile_stmt(self, s: ir.IrStmt, ctx: CompileCtx) -> ml.MlExp:
        match s:
            case ir.Assign(name, rhs):
                return AssignRef(Var(ctx.resolve(name)[0]), self.compile_expr(rhs, ctx))
            case ir.If(cond, thn, els):
                return If(self.compile_expr(cond, ctx),
                          self.compile_stmts(thn, ctx), self.compile_stmts(els, ctx))
            case ir.While():
                return self.compile_while(s, ctx)
            case ir.Labeled(label, body):
                if isinstance(body, ir.While):
                    inner = self.compile_while(body, ctx, label)
                else:
                    inner = self.compile_stmts((body,), ctx)
                return catch_label(inner, LABELED_BREAK, label)
            case ir.Call(outs, callee, args):
                mod, meth = ir.split_qualname(callee)
                fn = Var(meth if mod == ctx.module else callee)
                actuals = [self.compile_expr(a, ctx) for a in args]
                actuals += [Var(ctx.resolve(o)[0]) for o in outs]
                return apps(fn, *(actuals or [UNIT]))
            case ir.Print(arg):
                return PrintPrim(self.implode(self.to_chars(arg, ctx)))
            case ir.Return():
                return Raise(Con(RETURN))
            case ir.Break():
                return Raise(Con(BREAK))
            case ir.Continue():
                return Raise(Con(CONTINUE))
            case ir.BreakLabel(label):
                return Raise(Con(LABELED_BREAK, (ml.lit_str(label),)))
            case ir.ContinueLabel(label):
                return Raise(Con(LABELED_CONTINUE, (ml.lit_str(label),)))
        raise TypeError(f"cannot compile statement {s!r}")

    def compile_while(self, w: ir.While, ctx: CompileCtx, label: str | None = None) -> ml.MlExp:
        fname = ctx.fresh_while()
        call = App(Var(fname), UNIT)
        cond = self.compile_expr(w.cond, ctx)
        body = self.compile_stmts(w.body, ctx)
        if _continues(w.body, None):
            body = catch(body, CONTINUE)
        if label is not None and _continues(w.body, label):
            body = catch_label(body, LABELED_CONTINUE, label)
        body = self.loop_body(body)
        loop = If(cond, ml.Seq(body, call), UNIT)
        return LetRecFuns((FunBinding(fname, UNIT_PARAM, loop),), self.loop_entry(call))

    def to_chars(self, e: ir.IrExpr, ctx: CompileCtx) -> ml.MlExp:
        ty = ctx.type_of(e)
        value = self.compile_expr(e, ctx)
        if ty is IrType.STRING:
            return value
        helper = {IrType.INT: "int_to_string", IrType.BOOL: "bool_to_string",
                  IrType.CHAR: "char_to_string"}[ty]
        return App(Var(f"{RUNTIME}.{helper}"), value)

    # -- expressions --

    def less_than(self, lhs: ml.MlExp, rhs: ml.MlExp, ty: IrType) -> ml.MlExp:
        return BinPrim("CharLt" if ty is IrType.CHAR else "IntLt", lhs, rhs)

    def compile_expr(self, e: ir.IrExpr, ctx: CompileCtx) -> ml.MlExp:
        match e:
            case ir.LitInt(v):
                return lit_int(v)
            case ir.LitBool(v):
                return ml.TRUE if v else ml.FALSE
            case ir.LitChar(v):
                return Lit("char", v)
            case ir.LitString(v):
                return CharList(v)
            case ir.Var(name):
                return Deref(Var(ctx.resolve(name)[0]))
            case ir.Not(x):
                return not_(self.compile_expr(x, ctx))
            case ir.Binary(op, lhs, rhs):
                a, b = self.compile_expr(lhs, ctx), self.compile_expr(rhs, ctx)
                return self.binary(op, a, b, ctx.type_of(lhs))
        raise TypeError(f"cannot compile expression {e!r}")

    def binary(self, op: BinOp, a: ml.MlExp, b: ml.MlExp, operand_type: IrType) -> ml.MlExp:
        match op:
            case BinOp.ADD:
                return BinPrim("IntAdd", a, b)
            case BinOp.SUB:
                return BinPrim("IntSub", a, b)
            case BinOp.MUL:
                return BinPrim("IntMul", a, b)
            case BinOp.DIV:
                return apps(Var(f"{RUNTIME}.ediv"), a, b)
            case BinOp.MOD:
                return apps(Var(f"{RUNTIME}.emod"), a, b)
            case BinOp.LT:
                return self.less_than(a, b, operand_type)
            case BinOp.LE:
                return self.less_equal(a, b, operand_type)
            case BinOp.GT:
                return self.less_than(b, a, operand_type)
            case BinOp.GE:
                return not_(self.less_than(a, b, operand_type))
            case BinOp.EQ:
                return BinPrim("PolyEq", a, b)
            case BinOp.NEQ:
                return not_(BinPrim("PolyEq", a, b))
            case BinOp.AND:
                return If(a, b, ml.FALSE)
            case BinOp.OR:
                return If(a, ml.TRUE, b)
            case BinOp.CONCAT:
                return BinPrim("ListAppend", a, b)
        raise TypeError(f"unknown operator {op}")


def compile_program(p: ir.IrProgram, instrument: bool = False) -> MlProgramT:
    return Compiler(instrument).compile_program(p)
