"""Dafny-IR abstract syntax with its S-expression schema and validity checks.

Schema (each nonterminal is a list headed by a keyword atom)::

    program := (program module*)
    module  := (module NAME method*)
    method  := (method NAME (param*) (param*) (stmt*))     ; ins, then outs
    param   := (NAME type)        type := int | bool | char | string
    stmt    := (decl NAME type expr) | (assign NAME expr)
             | (if expr (stmt*) (stmt*)) | (while expr (stmt*))
             | (labeled "LBL" stmt) | (call (NAME*) MODULE.METHOD (expr*))
             | (print expr) | (return) | (break) | (break-label "LBL")
             | (continue) | (continue-label "LBL")
    expr    := INT | (bool true|false) | (char "c") | (str "...") | (var NAME)
             | (not expr) | (OP expr expr)
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Union

from .sexp import Atom, IntLit, SExp, SList, StrLit


class IrType(enum.Enum):
    INT = "int"
    BOOL = "bool"
    CHAR = "char"
    STRING = "string"


class BinOp(enum.Enum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    DIV = "div"
    MOD = "mod"
    LT = "lt"
    LE = "le"
    GT = "gt"
    GE = "ge"
    EQ = "eq"
    NEQ = "neq"
    AND = "and"
    OR = "or"
    CONCAT = "concat"


ARITH_OPS = frozenset({BinOp.ADD, BinOp.SUB, BinOp.MUL, BinOp.DIV, BinOp.MOD})
ORDER_OPS = frozenset({BinOp.LT, BinOp.LE, BinOp.GT, BinOp.GE})
EQUALITY_OPS = frozenset({BinOp.EQ, BinOp.NEQ})
LOGIC_OPS = frozenset({BinOp.AND, BinOp.OR})


# -- expressions ------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class LitInt:
    value: int


@dataclass(frozen=True, slots=True)
class LitBool:
    value: bool


@dataclass(frozen=True, slots=True)
class LitChar:
    value: str


@dataclass(frozen=True, slots=True)
class LitString:
    value: str


@dataclass(frozen=True, slots=True)
class Var:
    name: str


@dataclass(frozen=True, slots=True)
class Not:
    operand: IrExpr


@dataclass(frozen=True, slots=True)
class Binary:
    op: BinOp
    lhs: IrExpr
    rhs: IrExpr


IrExpr = Union[LitInt, LitBool, LitChar, LitString, Var, Not, Binary]


# -- statements -------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class DeclVar:
    name: str
    type: IrType
    init: IrExpr


@dataclass(frozen=True, slots=True)
class Assign:
    name: str
    rhs: IrExpr


@dataclass(frozen=True, slots=True)
class If:
    cond: IrExpr
    then_branch: tuple[IrStmt, ...]
    else_branch: tuple[IrStmt, ...] = ()


@dataclass(frozen=True, slots=True)
class While:
    cond: IrExpr
    body: tuple[IrStmt, ...]


@dataclass(frozen=True, slots=True)
class Labeled:
    label: str
    body: IrStmt


@dataclass(frozen=True, slots=True)
class Call:
    outs: tuple[str, ...]
    callee: str  # "Module.method"
    args: tuple[IrExpr, ...]


@dataclass(frozen=True, slots=True)
class Print:
    arg: IrExpr


@dataclass(frozen=True, slots=True)
class Return:
    pass


@dataclass(frozen=True, slots=True)
class Break:
    pass


@dataclass(frozen=True, slots=True)
class BreakLabel:
    label: str


@dataclass(frozen=True, slots=True)
class Continue:
    pass


@dataclass(frozen=True, slots=True)
class ContinueLabel:
    label: str


IrStmt = Union[DeclVar, Assign, If, While, Labeled, Call, Print, Return,
               Break, BreakLabel, Continue, ContinueLabel]


# -- declarations -----------------------------------------------------------

@dataclass(frozen=True, slots=True)
class IrMethod:
    name: str
    in_params: tuple[tuple[str, IrType], ...]
    out_params: tuple[tuple[str, IrType], ...]
    body: tuple[IrStmt, ...]


@dataclass(frozen=True, slots=True)
class IrModule:
    name: str
    methods: tuple[IrMethod, ...]

    def method(self, name: str) -> IrMethod | None:
        for m in self.methods:
            if m.name == name:
                return m
        return None


@dataclass(frozen=True, slots=True)
class IrProgram:
    modules: tuple[IrModule, ...]

    def module(self, name: str) -> IrModule | None:
        for m in self.modules:
            if m.name == name:
                return m
        return None

    def lookup(self, qualname: str) -> IrMethod | None:
        mod_name, _, meth_name = qualname.rpartition(".")
        mod = self.module(mod_name)
        return mod.method(meth_name) if mod else None


DEFAULT_MODULE = "_module"
MAIN = "Main"


def split_qualname(qualname: str) -> tuple[str, str]:
    mod, _, meth = qualname.rpartition(".")
    return mod, meth


# -- decoding ---------------------------------------------------------------

class SchemaError(Exception):
    def __init__(self, path: str, expected: str, found: SExp | str | None):
        from .sexp import print_sexp

        self.path = path
        self.expected = expected
        if found is None:
            shown = "nothing"
        elif isinstance(found, str):
            shown = found
        else:
            shown = print_sexp(found)
            if len(shown) > 60:
                shown = shown[:57] + "..."
        self.found = shown
        super().__init__(f"at {path}: expected {expected}, found {shown}")


_OPS_BY_NAME = {op.value: op for op in BinOp}
_TYPES_BY_NAME = {t.value: t for t in IrType}


def _head(expr: SExp, keyword: str, path: str, arity: int | None = None) -> tuple[SExp, ...]:
    if not (isinstance(expr, SList) and expr.items and expr.items[0] == Atom(keyword)):
        raise SchemaError(path, keyword, expr)
    args = expr.items[1:]
    if arity is not None and len(args) != arity:
        raise SchemaError(path, f"{keyword} with {arity} argument(s)", expr)
    return args


def _name(expr: SExp, path: str) -> str:
    if not isinstance(expr, Atom):
        raise SchemaError(path, "name", expr)
    return expr.text


def _label(expr: SExp, path: str) -> str:
    if not isinstance(expr, StrLit):
        raise SchemaError(path, "label string", expr)
    return expr.text


def _list(expr: SExp, path: str, what: str) -> tuple[SExp, ...]:
    if not isinstance(expr, SList):
        raise SchemaError(path, f"list of {what}", expr)
    return expr.items


def _type(expr: SExp, path: str) -> IrType:
    if isinstance(expr, Atom) and expr.text in _TYPES_BY_NAME:
        return _TYPES_BY_NAME[expr.text]
    raise SchemaError(path, "type (int|bool|char|string)", expr)


def _params(expr: SExp, path: str) -> tuple[tuple[str, IrType], ...]:
    out = []
    for i, item in enumerate(_list(expr, path, "params")):
        p = f"{path}[{i}]"
        if not (isinstance(item, SList) and len(item) == 2):
            raise SchemaError(p, "param (NAME type)", item)
        out.append((_name(item[0], p), _type(item[1], p)))
    return tuple(out)


def expr_from_sexp(expr: SExp, path: str = "expr") -> IrExpr:
    if isinstance(expr, IntLit):
        return LitInt(expr.value)
    if not (isinstance(expr, SList) and expr.items and isinstance(expr.items[0], Atom)):
        raise SchemaError(path, "expression", expr)
    head = expr.items[0].text
    args = expr.items[1:]

    def need(n: int):
        if len(args) != n:
            raise SchemaError(path, f"{head} with {n} argument(s)", expr)

    if head == "bool":
        need(1)
        if args[0] == Atom("true"):
            return LitBool(True)
        if args[0] == Atom("false"):
            return LitBool(False)
        raise SchemaError(f"{path}.bool", "true|false", args[0])
    if head == "char":
        need(1)
        if not (isinstance(args[0], StrLit) and len(args[0].text) == 1):
            raise SchemaError(f"{path}.char", "one-character string", args[0])
        return LitChar(args[0].text)
    if head == "str":
        need(1)
        if not isinstance(args[0], StrLit):
            raise SchemaError(f"{path}.str", "string literal", args[0])
        return LitString(args[0].text)
    if head == "var":
        need(1)
        return Var(_name(args[0], f"{path}.var"))
    if head == "not":
        need(1)
        return Not(expr_from_sexp(args[0], f"{path}.not"))
    if head in _OPS_BY_NAME:
        need(2)
        return Binary(_OPS_BY_NAME[head],
                      expr_from_sexp(args[0], f"{path}.{head}[0]"),
                      expr_from_sexp(args[1], f"{path}.{head}[1]"))
    raise SchemaError(path, "expression", expr)


def _stmts(expr: SExp, path: str) -> tuple[IrStmt, ...]:
    return tuple(stmt_from_sexp(s, f"{path}[{i}]")
                 for i, s in enumerate(_list(expr, path, "statements")))


def stmt_from_sexp(expr: SExp, path: str = "stmt") -> IrStmt:
    if not (isinstance(expr, SList) and expr.items and isinstance(expr.items[0], Atom)):
        raise SchemaError(path, "statement", expr)
    head = expr.items[0].text
    p = f"{path}.{head}"
    if head == "decl":
        name, ty, init = _head(expr, head, path, 3)
        return DeclVar(_name(name, p), _type(ty, p), expr_from_sexp(init, p))
    if head == "assign":
        name, rhs = _head(expr, head, path, 2)
        return Assign(_name(name, p), expr_from_sexp(rhs, p))
    if head == "if":
        cond, thn, els = _head(expr, head, path, 3)
        return If(expr_from_sexp(cond, p), _stmts(thn, f"{p}.then"), _stmts(els, f"{p}.else"))
    if head == "while":
        cond, body = _head(expr, head, path, 2)
        return While(expr_from_sexp(cond, p), _stmts(body, f"{p}.body"))
    if head == "labeled":
        lbl, body = _head(expr, head, path, 2)
        return Labeled(_label(lbl, p), stmt_from_sexp(body, f"{p}.body"))
    if head == "call":
        outs, callee, args = _head(expr, head, path, 3)
        out_names = tuple(_name(o, f"{p}.outs[{i}]")
                          for i, o in enumerate(_list(outs, f"{p}.outs", "names")))
        qual = _name(callee, f"{p}.callee")
        if "." not in qual:
            raise SchemaError(f"{p}.callee", "MODULE.METHOD", callee)
        arg_exprs = tuple(expr_from_sexp(a, f"{p}.args[{i}]")
                          for i, a in enumerate(_list(args, f"{p}.args", "expressions")))
        return Call(out_names, qual, arg_exprs)
    if head == "print":
        (arg,) = _head(expr, head, path, 1)
        return Print(expr_from_sexp(arg, p))
    if head == "return":
        _head(expr, head, path, 0)
        return Return()
    if head == "break":
        _head(expr, head, path, 0)
        return Break()
    if head == "continue":
        _head(expr, head, path, 0)
        return Continue()
    if head == "break-label":
        (lbl,) = _head(expr, head, path, 1)
        return BreakLabel(_label(lbl, p))
    if head == "continue-label":
        (lbl,) = _head(expr, head, path, 1)
        return ContinueLabel(_label(lbl, p))
    raise SchemaError(path, "statement", expr)


def method_from_sexp(expr: SExp, path: str) -> IrMethod:
    name, ins, outs, body = _head(expr, "method", path, 4)
    p = f"{path}.method"
    return IrMethod(_name(name, p), _params(ins, f"{p}.ins"),
                    _params(outs, f"{p}.outs"), _stmts(body, f"{p}.body"))


def module_from_sexp(expr: SExp, path: str) -> IrModule:
    args = _head(expr, "module", path)
    if not args:
        raise SchemaError(path, "module NAME", expr)
    name = _name(args[0], f"{path}.module")
    methods = tuple(method_from_sexp(m, f"{path}.module[{i}]") for i, m in enumerate(args[1:]))
    return IrModule(name, methods)


def from_sexp(expr: SExp) -> IrProgram:
    args = _head(expr, "program", "program")
    return IrProgram(tuple(module_from_sexp(m, f"program[{i}]") for i, m in enumerate(args)))


# -- encoding ---------------------------------------------------------------

def _sl(*items) -> SList:
    return SList(tuple(items))


def expr_to_sexp(e: IrExpr) -> SExp:
    match e:
        case LitInt(v):
            return IntLit(v)
        case LitBool(v):
            return _sl(Atom("bool"), Atom("true" if v else "false"))
        case LitChar(v):
            return _sl(Atom("char"), StrLit(v))
        case LitString(v):
            return _sl(Atom("str"), StrLit(v))
        case Var(name):
            return _sl(Atom("var"), Atom(name))
        case Not(x):
            return _sl(Atom("not"), expr_to_sexp(x))
        case Binary(op, l, r):
            return _sl(Atom(op.value), expr_to_sexp(l), expr_to_sexp(r))
    raise TypeError(f"not an IR expression: {e!r}")


def _stmts_to_sexp(stmts) -> SList:
    return SList(tuple(stmt_to_sexp(s) for s in stmts))


def stmt_to_sexp(s: IrStmt) -> SExp:
    match s:
        case DeclVar(name, ty, init):
            return _sl(Atom("decl"), Atom(name), Atom(ty.value), expr_to_sexp(init))
        case Assign(name, rhs):
            return _sl(Atom("assign"), Atom(name), expr_to_sexp(rhs))
        case If(c, t, e):
            return _sl(Atom("if"), expr_to_sexp(c), _stmts_to_sexp(t), _stmts_to_sexp(e))
        case While(c, body):
            return _sl(Atom("while"), expr_to_sexp(c), _stmts_to_sexp(body))
        case Labeled(lbl, body):
            return _sl(Atom("labeled"), StrLit(lbl), stmt_to_sexp(body))
        case Call(outs, callee, args):
            return _sl(Atom("call"), SList(tuple(Atom(o) for o in outs)), Atom(callee),
                       SList(tuple(expr_to_sexp(a) for a in args)))
        case Print(arg):
            return _sl(Atom("print"), expr_to_sexp(arg))
        case Return():
            return _sl(Atom("return"))
        case Break():
            return _sl(Atom("break"))
        case Continue():
            return _sl(Atom("continue"))
        case BreakLabel(lbl):
            return _sl(Atom("break-label"), StrLit(lbl))
        case ContinueLabel(lbl):
            return _sl(Atom("continue-label"), StrLit(lbl))
    raise TypeError(f"not an IR statement: {s!r}")


def _params_to_sexp(params) -> SList:
    return SList(tuple(_sl(Atom(n), Atom(t.value)) for n, t in params))


def to_sexp(p: IrProgram) -> SExp:
    mods = []
    for mod in p.modules:
        meths = [_sl(Atom("method"), Atom(m.name), _params_to_sexp(m.in_params),
                     _params_to_sexp(m.out_params), _stmts_to_sexp(m.body))
                 for m in mod.methods]
        mods.append(_sl(Atom("module"), Atom(mod.name), *meths))
    return _sl(Atom("program"), *mods)


# -- typing -----------------------------------------------------------------

class IrTypeError(Exception):
    pass


def type_of(e: IrExpr, lookup) -> IrType:
    """Type of ``e``; ``lookup(name)`` returns an IrType or None. Raises IrTypeError."""
    match e:
        case LitInt():
            return IrType.INT
        case LitBool():
            return IrType.BOOL
        case LitChar():
            return IrType.CHAR
        case LitString():
            return IrType.STRING
        case Var(name):
            t = lookup(name)
            if t is None:
                raise IrTypeError(f"unbound variable {name}")
            return t
        case Not(x):
            if type_of(x, lookup) is not IrType.BOOL:
                raise IrTypeError("type mismatch: not expects bool")
            return IrType.BOOL
        case Binary(op, l, r):
            lt, rt = type_of(l, lookup), type_of(r, lookup)
            if op in ARITH_OPS:
                if lt is IrType.INT and rt is IrType.INT:
                    return IrType.INT
            elif op in ORDER_OPS:
                if lt is rt and lt in (IrType.INT, IrType.CHAR):
                    return IrType.BOOL
            elif op in EQUALITY_OPS:
                if lt is rt:
                    return IrType.BOOL
            elif op in LOGIC_OPS:
                if lt is IrType.BOOL and rt is IrType.BOOL:
                    return IrType.BOOL
            elif op is BinOp.CONCAT:
                if lt is IrType.STRING and rt is IrType.STRING:
                    return IrType.STRING
            raise IrTypeError(f"type mismatch: {op.value} on {lt.value}, {rt.value}")
    raise IrTypeError(f"not an IR expression: {e!r}")


# -- validation -------------------------------------------------------------

IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
MODULE_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
RESERVED_PREFIX = "CML_"
RUNTIME_MODULE = "Dafny"


@dataclass(frozen=True)
class ValidityReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        return "OK" if self.ok else "\n".join(self.violations)


class _Checker:
    def __init__(self, program: IrProgram):
        self.program = program
        self.violations: list[str] = []
        self.module_index = {m.name: i for i, m in enumerate(program.modules)}

    def report(self, where: str, msg: str):
        self.violations.append(f"{where}: {msg}")

    def check(self) -> ValidityReport:
        seen = set()
        for mod in self.program.modules:
            if mod.name in seen:
                self.report(f"module {mod.name}", "duplicate module name")
            seen.add(mod.name)
            if not MODULE_RE.fullmatch(mod.name):
                self.report(f"module {mod.name}", "bad module name")
            if mod.name == RUNTIME_MODULE:
                self.report(f"module {mod.name}", "module name is reserved for the runtime")
            self.check_module(mod)
        main_mod = self.program.module(DEFAULT_MODULE)
        main = main_mod.method(MAIN) if main_mod else None
        if main is None:
            self.report("program", f"missing method {DEFAULT_MODULE}.{MAIN}")
        elif main.in_params or main.out_params:
            self.report(f"{DEFAULT_MODULE}.{MAIN}", "Main must take no parameters")
        return ValidityReport(tuple(self.violations))

    def check_ident(self, where: str, name: str, what: str):
        if not IDENT_RE.fullmatch(name):
            self.report(where, f"bad {what} name {name!r}")
        elif name.startswith(RESERVED_PREFIX):
            self.report(where, f"{what} name {name!r} uses reserved prefix {RESERVED_PREFIX}")

    def check_module(self, mod: IrModule):
        names = set()
        for m in mod.methods:
            if m.name in names:
                self.report(f"{mod.name}.{m.name}", "duplicate method name")
            names.add(m.name)
        for m in mod.methods:
            self.check_method(mod, m, names)

    def check_method(self, mod: IrModule, m: IrMethod, method_names: set[str]):
        where = f"{mod.name}.{m.name}"
        self.check_ident(where, m.name, "method")
        params: dict[str, IrType] = {}
        for name, ty in m.in_params + m.out_params:
            self.check_ident(where, name, "parameter")
            if name in params:
                self.report(where, f"duplicate parameter {name}")
            if name in method_names:
                self.report(where, f"parameter {name} clashes with a method of {mod.name}")
            params[name] = ty
        self.where = where
        self.mod = mod
        self.block(m.body, [params, {}], loops=0, labels=())

    def lookup(self, scopes, name):
        for scope in reversed(scopes):
            if name in scope:
                return scope[name]
        return None

    def expr(self, e: IrExpr, scopes, expected: IrType | None = None, what="expression"):
        try:
            t = type_of(e, lambda n: self.lookup(scopes, n))
        except IrTypeError as exc:
            self.report(self.where, str(exc))
            return None
        if expected is not None and t is not expected:
            self.report(self.where, f"type mismatch: {what} is {t.value}, expected {expected.value}")
        return t

    def block(self, stmts, scopes, loops: int, labels: tuple[tuple[str, bool], ...]):
        scopes = scopes + [{}]
        for s in stmts:
            self.stmt(s, scopes, loops, labels)

    def stmt(self, s: IrStmt, scopes, loops, labels):
        match s:
            case DeclVar(name, ty, init):
                self.check_ident(self.where, name, "variable")
                self.expr(init, scopes, ty, f"initializer of {name}")
                if name in scopes[-1]:
                    self.report(self.where, f"duplicate declaration of {name} in one block")
                scopes[-1][name] = ty
            case Assign(name, rhs):
                t = self.lookup(scopes, name)
                if t is None:
                    self.report(self.where, f"assignment to undeclared {name}")
                    self.expr(rhs, scopes)
                else:
                    self.expr(rhs, scopes, t, f"right-hand side of {name}")
            case If(cond, thn, els):
                self.expr(cond, scopes, IrType.BOOL, "condition")
                self.block(thn, scopes, loops, labels)
                self.block(els, scopes, loops, labels)
            case While(cond, body):
                self.expr(cond, scopes, IrType.BOOL, "loop condition")
                self.block(body, scopes, loops + 1, labels)
            case Labeled(lbl, body):
                if not lbl:
                    self.report(self.where, "empty label")
                if isinstance(body, DeclVar):
                    self.report(self.where, "labeled declaration")
                labels = labels + ((lbl, isinstance(body, While)),)
                if isinstance(body, While):
                    self.expr(body.cond, scopes, IrType.BOOL, "loop condition")
                    self.block(body.body, scopes, loops + 1, labels)
                else:
                    self.block((body,), scopes, loops, labels)
            case Call(outs, callee, args):
                self.call(outs, callee, args, scopes)
            case Print(arg):
                self.expr(arg, scopes)
            case Return():
                pass
            case Break():
                if not loops:
                    self.report(self.where, "Break outside loop")
            case Continue():
                if not loops:
                    self.report(self.where, "Continue outside loop")
            case BreakLabel(lbl):
                if not any(l == lbl for l, _ in labels):
                    self.report(self.where, f"break to unknown label {lbl!r}")
            case ContinueLabel(lbl):
                innermost = [is_loop for l, is_loop in labels if l == lbl]
                if not innermost:
                    self.report(self.where, f"continue to unknown label {lbl!r}")
                elif not innermost[-1]:
                    self.report(self.where, f"continue to label {lbl!r} that does not name a loop")
            case _:
                self.report(self.where, f"unknown statement {s!r}")

    def call(self, outs, callee, args, scopes):
        mod_name, meth_name = split_qualname(callee)
        target = self.program.lookup(callee)
        if target is None:
            self.report(self.where, f"unknown callee {callee}")
            for a in args:
                self.expr(a, scopes)
            return
        if mod_name != self.mod.name and \
                self.module_index[mod_name] > self.module_index[self.mod.name]:
            self.report(self.where, f"call to {callee} refers to a later module")
        if len(args) != len(target.in_params):
            self.report(self.where, f"arity mismatch calling {callee}: "
                                    f"{len(args)} argument(s) for {len(target.in_params)}")
        for a, (pname, pty) in zip(args, target.in_params):
            self.expr(a, scopes, pty, f"argument {pname} of {callee}")
        if len(outs) != len(target.out_params):
            self.report(self.where, f"out-arity mismatch calling {callee}: "
                                    f"{len(outs)} target(s) for {len(target.out_params)}")
        if len(set(outs)) != len(outs):
            self.report(self.where, f"duplicate out targets calling {callee}")
        for o, (pname, pty) in zip(outs, target.out_params):
            t = self.lookup(scopes, o)
            if t is None:
                self.report(self.where, f"out target {o} is not an assignable name")
            elif t is not pty:
                self.report(self.where, f"type mismatch: out target {o} is {t.value}, "
                                        f"{callee} yields {pty.value}")


def validate(p: IrProgram) -> ValidityReport:
    return _Checker(p).check()
