"""Clocked big-step interpreter for the Dafny IR.

The clock ticks once per loop iteration and once per method call; expressions
and straight-line statements are free.  Running out of clock is a ``Timeout``
result, never divergence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from . import ir
from .ir import (Assign, Binary, BinOp, Break, BreakLabel, Call, Continue, ContinueLabel,
                 DeclVar, If, IrProgram, IrStmt, IrType, Labeled, LitBool, LitChar, LitInt,
                 LitString, Not, Print, Return, Var, While)


# -- values -----------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class VInt:
    value: int


@dataclass(frozen=True, slots=True)
class VBool:
    value: bool


@dataclass(frozen=True, slots=True)
class VChar:
    value: str


@dataclass(frozen=True, slots=True)
class VStr:
    value: str


SrcValue = Union[VInt, VBool, VChar, VStr]

DEFAULTS: dict[IrType, SrcValue] = {
    IrType.INT: VInt(0),
    IrType.BOOL: VBool(False),
    IrType.CHAR: VChar("a"),
    IrType.STRING: VStr(""),
}


def stringify(v: SrcValue) -> str:
    match v:
        case VInt(n):
            return str(n)
        case VBool(b):
            return "true" if b else "false"
        case VChar(c) | VStr(c):
            return c
    raise TypeError(v)


def euclid_divmod(a: int, b: int) -> tuple[int, int]:
    r = a % abs(b)
    return (a - r) // b, r


# -- control, results, state ------------------------------------------------

@dataclass(frozen=True, slots=True)
class Normal:
    pass


@dataclass(frozen=True, slots=True)
class Returned:
    pass


@dataclass(frozen=True, slots=True)
class Broke:
    pass


@dataclass(frozen=True, slots=True)
class BrokeLabel:
    label: str


@dataclass(frozen=True, slots=True)
class Continued:
    pass


@dataclass(frozen=True, slots=True)
class ContinuedLabel:
    label: str


SrcControl = Union[Normal, Returned, Broke, BrokeLabel, Continued, ContinuedLabel]

NORMAL = Normal()


@dataclass(frozen=True, slots=True)
class Done:
    pass


@dataclass(frozen=True, slots=True)
class Timeout:
    pass


ERR_KINDS = ("DivByZero", "TypeConfusion", "UnboundName", "ControlEscape")


@dataclass(frozen=True, slots=True)
class Err:
    kind: str
    detail: str = ""


SrcResult = Union[Done, Timeout, Err]


@dataclass
class SrcState:
    clock: int
    locals: list[dict[str, SrcValue]] = field(default_factory=lambda: [{}])
    output: list[str] = field(default_factory=list)
    # one entry per completed method: (qualified name, ((param, value), ...))
    exits: list[tuple[str, tuple[tuple[str, SrcValue], ...]]] = field(default_factory=list)

    @property
    def output_text(self) -> str:
        return "".join(self.output)

    def lookup(self, name: str) -> SrcValue | None:
        for scope in reversed(self.locals):
            if name in scope:
                return scope[name]
        return None


class _Timeout(Exception):
    pass


class _Error(Exception):
    def __init__(self, kind: str, detail: str):
        super().__init__(kind, detail)
        self.err = Err(kind, detail)


def _type_err(detail: str):
    return _Error("TypeConfusion", detail)


# -- evaluation -------------------------------------------------------------

def _eval(state: SrcState, e) -> SrcValue:
    # dispatch on the node class directly; this is the interpreter's hot path
    t = type(e)
    if t is Var:
        v = state.lookup(e.name)
        if v is None:
            raise _Error("UnboundName", e.name)
        return v
    if t is Binary:
        return _binary(state, e.op, e.lhs, e.rhs)
    if t is LitInt:
        return VInt(e.value)
    if t is LitBool:
        return VBool(e.value)
    if t is LitChar:
        return VChar(e.value)
    if t is LitString:
        return VStr(e.value)
    if t is Not:
        v = _eval(state, e.operand)
        if not isinstance(v, VBool):
            raise _type_err("not on non-bool")
        return VBool(not v.value)
    raise _type_err(f"unknown expression {e!r}")


def _binary(state: SrcState, op: BinOp, lhs, rhs) -> SrcValue:
    a = _eval(state, lhs)
    if op is BinOp.AND or op is BinOp.OR:
        if not isinstance(a, VBool):
            raise _type_err(f"{op.value} on non-bool")
        if a.value is (op is BinOp.OR):
            return a
        b = _eval(state, rhs)
        if not isinstance(b, VBool):
            raise _type_err(f"{op.value} on non-bool")
        return b
    b = _eval(state, rhs)
    if op is BinOp.EQ or op is BinOp.NEQ:
        if type(a) is not type(b):
            raise _type_err(f"{op.value} on mixed types")
        return VBool((a == b) is (op is BinOp.EQ))
    if op is BinOp.CONCAT:
        if not (isinstance(a, VStr) and isinstance(b, VStr)):
            raise _type_err("concat on non-strings")
        return VStr(a.value + b.value)
    if op in ir.ORDER_OPS:
        if not (type(a) is type(b) and isinstance(a, (VInt, VChar))):
            raise _type_err(f"{op.value} on {type(a).__name__}, {type(b).__name__}")
        x, y = a.value, b.value
        if op is BinOp.LT:
            return VBool(x < y)
        if op is BinOp.LE:
            return VBool(x <= y)
        if op is BinOp.GT:
            return VBool(x > y)
        return VBool(x >= y)
    if not (isinstance(a, VInt) and isinstance(b, VInt)):
        raise _type_err(f"{op.value} on non-ints")
    x, y = a.value, b.value
    if op is BinOp.ADD:
        return VInt(x + y)
    if op is BinOp.SUB:
        return VInt(x - y)
    if op is BinOp.MUL:
        return VInt(x * y)
    if y == 0:
        raise _Error("DivByZero", f"{x} {op.value} 0")
    q, r = euclid_divmod(x, y)
    return VInt(q if op is BinOp.DIV else r)


class _Interp:
    def __init__(self, program: IrProgram, state: SrcState):
        self.program = program
        self.state = state

    def tick(self):
        if self.state.clock <= 0:
            raise _Timeout()
        self.state.clock -= 1

    def block(self, stmts) -> SrcControl:
        scopes = self.state.locals
        scopes.append({})
        try:
            for s in stmts:
                ctl = self.stmt(s)
                if ctl is not NORMAL:
                    return ctl
            return NORMAL
        finally:
            scopes.pop()

    def assign(self, name: str, value: SrcValue):
        for scope in reversed(self.state.locals):
            if name in scope:
                scope[name] = value
                return
        raise _Error("UnboundName", name)

    def loop(self, w: While, label: str | None = None) -> SrcControl:
        while True:
            c = _eval(self.state, w.cond)
            if not isinstance(c, VBool):
                raise _type_err("loop condition is not bool")
            if not c.value:
                return NORMAL
            self.tick()
            ctl = self.block(w.body)
            if ctl is NORMAL:
                continue
            match ctl:
                case Continued():
                    continue
                case Broke():
                    return NORMAL
                case ContinuedLabel(l) if l == label:
                    continue
                case BrokeLabel(l) if l == label:
                    return NORMAL
            return ctl

    def stmt(self, s: IrStmt) -> SrcControl:
        st = self.state
        match s:
            case DeclVar(name, _, init):
                st.locals[-1][name] = _eval(st, init)
            case Assign(name, rhs):
                self.assign(name, _eval(st, rhs))
            case Print(arg):
                st.output.append(stringify(_eval(st, arg)))
            case If(cond, thn, els):
                c = _eval(st, cond)
                if not isinstance(c, VBool):
                    raise _type_err("if condition is not bool")
                return self.block(thn if c.value else els)
            case While():
                return self.loop(s)
            case Labeled(label, body):
                if isinstance(body, While):
                    return self.loop(body, label)
                ctl = self.block((body,))
                if isinstance(ctl, BrokeLabel) and ctl.label == label:
                    return NORMAL
                return ctl
            case Call(outs, callee, args):
                self.call(outs, callee, args)
            case Return():
                return Returned()
            case Break():
                return Broke()
            case Continue():
                return Continued()
            case BreakLabel(l):
                return BrokeLabel(l)
            case ContinueLabel(l):
                return ContinuedLabel(l)
            case _:
                raise _type_err(f"unknown statement {s!r}")
        return NORMAL

    def call(self, outs, callee: str, args):
        method = self.program.lookup(callee)
        if method is None:
            raise _Error("UnboundName", callee)
        if len(args) != len(method.in_params) or len(outs) != len(method.out_params):
            raise _type_err(f"arity mismatch calling {callee}")
        values = [_eval(self.state, a) for a in args]
        self.tick()
        results = self.invoke(callee, method, values)
        for name, v in zip(outs, results):
            self.assign(name, v)

    def invoke(self, qualname: str, method: ir.IrMethod, args: list[SrcValue]) -> list[SrcValue]:
        frame = {name: v for (name, _), v in zip(method.in_params, args)}
        for name, ty in method.out_params:
            frame[name] = DEFAULTS[ty]
        saved = self.state.locals
        self.state.locals = [frame]
        try:
            ctl = self.block(method.body)
            if ctl is not NORMAL and not isinstance(ctl, Returned):
                raise _Error("ControlEscape", f"{ctl!r} escaped {qualname}")
            params = method.in_params + method.out_params
            self.state.exits.append((qualname, tuple((n, frame[n]) for n, _ in params)))
            return [frame[name] for name, _ in method.out_params]
        finally:
            self.state.locals = saved


# -- public API -------------------------------------------------------------

def eval_expr(state: SrcState, e) -> tuple[SrcState, SrcValue | Err]:
    try:
        return state, _eval(state, e)
    except _Error as exc:
        return state, exc.err


def eval_stmts(state: SrcState, stmts, program: IrProgram | None = None
               ) -> tuple[SrcState, SrcControl | Err | Timeout]:
    """Run ``stmts`` in a fresh block scope on top of ``state.locals``."""
    interp = _Interp(program or IrProgram(()), state)
    try:
        return state, interp.block(stmts)
    except _Timeout:
        return state, Timeout()
    except _Error as exc:
        return state, exc.err


def run_program(p: IrProgram, clock: int) -> tuple[SrcState, SrcResult]:
    state = SrcState(clock=clock, locals=[])
    qual = f"{ir.DEFAULT_MODULE}.{ir.MAIN}"
    main = p.lookup(qual)
    if main is None:
        return state, Err("UnboundName", qual)
    if main.in_params or main.out_params:
        return state, Err("TypeConfusion", "Main must take no parameters")
    interp = _Interp(p, state)
    try:
        interp.invoke(qual, main, [])
    except _Timeout:
        return state, Timeout()
    except _Error as exc:
        return state, exc.err
    return state, Done()
