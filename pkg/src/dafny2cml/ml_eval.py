"""Fuel-clocked definitional interpreter for the ML target.

Evaluation is call-by-value and left-to-right.  Every closure application
costs one unit of fuel.  Expressions in tail position (if branches, the
second half of a sequence, let bodies, handlers, and applied function bodies)
are evaluated by looping inside the same Python frame, so a loop compiled to
a tail-recursive function runs in constant interpreter depth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from . import ml_ast as ml
from .ml_ast import (App, AssignRef, BinPrim, CharList, Con, Deref, ExceptionDec, Fn, FunGroup,
                     Handle, If, Implode, Let, LetRecFuns, Lit, MlProgramT, PrintPrim, Probe,
                     Raise, Ref, Seq, StructureDec, UnPrim, Var)


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
class VStrPacked:
    value: str


@dataclass(frozen=True, slots=True)
class VCharList:
    chars: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class VUnit:
    pass


@dataclass(frozen=True, slots=True, eq=False)
class VClosure:
    env: dict
    param: str
    body: ml.MlExp


@dataclass(frozen=True, slots=True, eq=False)
class VRecClosure:
    env: dict
    group: tuple[ml.FunBinding, ...]
    selected: str


@dataclass(frozen=True, slots=True)
class VRef:
    address: int


@dataclass(frozen=True, slots=True)
class VExn:
    constructor: str
    payload: str | None = None


@dataclass(frozen=True, slots=True)
class VExnCon:
    """An exception constructor in scope; applied by ``Con``."""
    constructor: str
    has_payload: bool


MlValue = Union[VInt, VBool, VChar, VStrPacked, VCharList, VUnit, VClosure, VRecClosure,
                VRef, VExn]

UNIT_V = VUnit()
TRUE_V = VBool(True)
FALSE_V = VBool(False)


def char_list(text: str) -> VCharList:
    return VCharList(tuple(text))


# -- results and state ------------------------------------------------------

@dataclass(frozen=True, slots=True)
class RVal:
    value: MlValue


@dataclass(frozen=True, slots=True)
class RRaise:
    exn: VExn


@dataclass(frozen=True, slots=True)
class RTimeout:
    pass


@dataclass(frozen=True, slots=True)
class RTypeErr:
    detail: str


TgtResult = Union[RVal, RRaise, RTimeout, RTypeErr]


@dataclass
class TgtState:
    fuel: int
    store: list[MlValue] = field(default_factory=list)
    output: list[str] = field(default_factory=list)
    probes: list[tuple[str, tuple[tuple[str, MlValue], ...]]] = field(default_factory=list)

    @property
    def output_text(self) -> str:
        return "".join(self.output)


class MlRaise(Exception):
    def __init__(self, exn: VExn):
        super().__init__(exn)
        self.exn = exn


class OutOfFuel(Exception):
    pass


class MlTypeError(Exception):
    pass


# -- evaluator --------------------------------------------------------------

_ARITH = {
    "IntAdd": lambda x, y: x + y,
    "IntSub": lambda x, y: x - y,
    "IntMul": lambda x, y: x * y,
}


class Machine:
    def __init__(self, state: TgtState, globals_: dict[str, object] | None = None):
        self.state = state
        self.globals = {} if globals_ is None else globals_

    def lookup(self, env: dict, name: str):
        v = env.get(name)
        if v is None:
            v = self.globals.get(name)
            if v is None:
                raise MlTypeError(f"unbound variable {name}")
        return v

    def tick(self):
        if self.state.fuel <= 0:
            raise OutOfFuel()
        self.state.fuel -= 1

    def eval(self, env: dict, e: ml.MlExp) -> MlValue:
        while True:
            t = type(e)
            if t is Deref:
                r = self.eval(env, e.target)
                if type(r) is not VRef:
                    raise MlTypeError("dereference of a non-reference")
                return self.state.store[r.address]
            if t is Var:
                v = self.lookup(env, e.name)
                if type(v) is VExnCon:
                    raise MlTypeError(f"constructor {e.name} used as a value")
                return v
            if t is Lit:
                return self.literal(e)
            if t is Seq:
                self.eval(env, e.first)
                e = e.second
                continue
            if t is App:
                f = self.eval(env, e.fn)
                arg = self.eval(env, e.arg)
                env, e = self.enter(f, arg)
                continue
            if t is If:
                c = self.eval(env, e.cond)
                if type(c) is not VBool:
                    raise MlTypeError("if condition is not a bool")
                e = e.then if c.value else e.else_
                continue
            if t is Let:
                v = self.eval(env, e.bound)
                env = {**env, e.name: v}
                e = e.body
                continue
            if t is LetRecFuns:
                env = self.bind_group(env, e.bindings)
                e = e.body
                continue
            if t is AssignRef:
                r = self.eval(env, e.target)
                v = self.eval(env, e.value)
                if type(r) is not VRef:
                    raise MlTypeError("assignment to a non-reference")
                self.state.store[r.address] = v
                return UNIT_V
            if t is Ref:
                v = self.eval(env, e.init)
                self.state.store.append(v)
                return VRef(len(self.state.store) - 1)
            if t is BinPrim:
                return self.binprim(e.op, self.eval(env, e.lhs), self.eval(env, e.rhs))
            if t is Handle:
                try:
                    return self.eval(env, e.body)
                except MlRaise as exc:
                    env = {**env, e.exn_var: exc.exn}
                    e = e.handler
                    continue
            if t is Raise:
                v = self.eval(env, e.exn)
                if type(v) is not VExn:
                    raise MlTypeError("raise of a non-exception")
                raise MlRaise(v)
            if t is Con:
                return self.construct(env, e)
            if t is Fn:
                return VClosure(env, e.param, e.body)
            if t is CharList:
                return char_list(e.text)
            if t is Implode:
                v = self.eval(env, e.arg)
                if type(v) is not VCharList:
                    raise MlTypeError("implode of a non-list")
                return VStrPacked("".join(v.chars))
            if t is PrintPrim:
                v = self.eval(env, e.arg)
                if type(v) is not VStrPacked:
                    raise MlTypeError("print expects a string")
                self.state.output.append(v.value)
                return UNIT_V
            if t is UnPrim:
                return self.unprim(e.op, self.eval(env, e.arg))
            if t is Probe:
                items = tuple((n, self.eval(env, x)) for n, x in e.items)
                self.state.probes.append((e.tag, items))
                return UNIT_V
            raise MlTypeError(f"unknown expression {e!r}")

    def enter(self, f: MlValue, arg: MlValue) -> tuple[dict, ml.MlExp]:
        """Charge one unit of fuel and return the environment and body to run."""
        tf = type(f)
        if tf is VClosure:
            self.tick()
            return {**f.env, f.param: arg}, f.body
        if tf is VRecClosure:
            self.tick()
            env = self.bind_group(f.env, f.group)
            for b in f.group:
                if b.name == f.selected:
                    return {**env, b.param: arg}, b.body
            raise MlTypeError(f"{f.selected} missing from its recursive group")
        raise MlTypeError("application of a non-function")

    @staticmethod
    def bind_group(env: dict, group) -> dict:
        env = dict(env)
        for b in group:
            env[b.name] = VRecClosure(env, group, b.name)
        return env

    @staticmethod
    def literal(e: Lit) -> MlValue:
        k = e.kind
        if k == "int":
            return VInt(e.value)
        if k == "bool":
            return TRUE_V if e.value else FALSE_V
        if k == "char":
            return VChar(e.value)
        if k == "string":
            return VStrPacked(e.value)
        if k == "unit":
            return UNIT_V
        raise MlTypeError(f"unknown literal kind {k}")

    def construct(self, env: dict, e: Con) -> VExn:
        c = self.lookup(env, e.name)
        if type(c) is not VExnCon:
            raise MlTypeError(f"{e.name} is not an exception constructor")
        args = [self.eval(env, a) for a in e.args]
        if c.has_payload:
            if len(args) != 1 or type(args[0]) is not VStrPacked:
                raise MlTypeError(f"{e.name} expects one string payload")
            return VExn(c.constructor, args[0].value)
        if args:
            raise MlTypeError(f"{e.name} takes no payload")
        return VExn(c.constructor)

    @staticmethod
    def binprim(op: str, a: MlValue, b: MlValue) -> MlValue:
        if op == "PolyEq":
            if type(a) in (VClosure, VRecClosure) or type(b) in (VClosure, VRecClosure):
                raise MlTypeError("equality on functions")
            if type(a) is not type(b):
                raise MlTypeError("equality on values of different types")
            return TRUE_V if a == b else FALSE_V
        if op == "CharLt":
            if type(a) is not VChar or type(b) is not VChar:
                raise MlTypeError("char comparison on non-chars")
            return TRUE_V if a.value < b.value else FALSE_V
        if op == "ListAppend":
            if type(a) is not VCharList or type(b) is not VCharList:
                raise MlTypeError("append on non-lists")
            return VCharList(a.chars + b.chars)
        if type(a) is not VInt or type(b) is not VInt:
            raise MlTypeError(f"{op} on non-integers")
        x, y = a.value, b.value
        if op == "IntLt":
            return TRUE_V if x < y else FALSE_V
        if op in _ARITH:
            return VInt(_ARITH[op](x, y))
        if y == 0:
            raise MlTypeError(f"{op} by zero")
        if op == "IntDiv":
            return VInt(x // y)
        if op == "IntMod":
            return VInt(x % y)
        raise MlTypeError(f"unknown primitive {op}")

    @staticmethod
    def unprim(op: str, a: MlValue) -> MlValue:
        if op == "IntToChars":
            if type(a) is not VInt:
                raise MlTypeError("int_to_string on a non-integer")
            return char_list(str(a.value))
        if op == "CharToChars":
            if type(a) is not VChar:
                raise MlTypeError("char_to_string on a non-char")
            return VCharList((a.value,))
        raise MlTypeError(f"unknown primitive {op}")

    # -- declarations --

    def declare(self, decs, env: dict, prefix: str) -> dict:
        """Evaluate ``decs`` in ``env``; returns the bindings they introduce."""
        introduced: dict = {}
        for d in decs:
            if type(d) is ExceptionDec:
                v = VExnCon(prefix + d.name, d.payload is not None)
                env = {**env, d.name: v}
                introduced[d.name] = v
            elif type(d) is FunGroup:
                env = self.bind_group(env, d.bindings)
                for b in d.bindings:
                    introduced[b.name] = env[b.name]
            elif type(d) is StructureDec:
                inner = self.declare(d.decs, env, prefix + d.name + ".")
                for name, v in inner.items():
                    introduced[f"{d.name}.{name}"] = v
                    if not prefix:
                        self.globals[f"{d.name}.{name}"] = v
            else:
                raise MlTypeError(f"unknown declaration {d!r}")
        return introduced


def eval_ml(state: TgtState, env: dict, e: ml.MlExp,
            globals_: dict | None = None) -> tuple[TgtState, TgtResult]:
    m = Machine(state, globals_)
    try:
        return state, RVal(m.eval(env, e))
    except MlRaise as exc:
        return state, RRaise(exc.exn)
    except OutOfFuel:
        return state, RTimeout()
    except MlTypeError as exc:
        return state, RTypeErr(str(exc))


MAIN = "_module.Main"


def declare_globals(decs) -> dict:
    """Global bindings (``Struct.name`` and top-level names) introduced by ``decs``."""
    m = Machine(TgtState(fuel=0))
    top = m.declare(decs, {}, "")
    for name, v in top.items():
        m.globals.setdefault(name, v)
    return m.globals


def run_ml_program(p: MlProgramT, fuel: int) -> tuple[TgtState, TgtResult]:
    state = TgtState(fuel=fuel)
    m = Machine(state)
    try:
        top = m.declare(p.decs, {}, "")
        for name, v in top.items():
            m.globals.setdefault(name, v)
        main = m.globals.get(MAIN)
        if type(main) not in (VClosure, VRecClosure):
            return state, RTypeErr(f"{MAIN} is missing or not a function")
        env, body = m.enter(main, UNIT_V)
        return state, RVal(m.eval(env, body))
    except MlRaise as exc:
        return state, RRaise(exc.exn)
    except OutOfFuel:
        return state, RTimeout()
    except MlTypeError as exc:
        return state, RTypeErr(str(exc))
