"""A small CakeML-like target language and an SML-style pretty-printer."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union


# -- expressions ------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Lit:
    kind: str  # int | bool | char | string | unit
    value: object = None


UNIT = Lit("unit")
TRUE = Lit("bool", True)
FALSE = Lit("bool", False)


def lit_int(n: int) -> Lit:
    return Lit("int", n)


def lit_str(s: str) -> Lit:
    return Lit("string", s)


@dataclass(frozen=True, slots=True)
class Var:
    name: str


@dataclass(frozen=True, slots=True)
class App:
    fn: MlExp
    arg: MlExp


@dataclass(frozen=True, slots=True)
class Fn:
    param: str
    body: MlExp


@dataclass(frozen=True, slots=True)
class If:
    cond: MlExp
    then: MlExp
    else_: MlExp


@dataclass(frozen=True, slots=True)
class Let:
    name: str
    bound: MlExp
    body: MlExp


@dataclass(frozen=True, slots=True)
class FunBinding:
    name: str
    param: str
    body: MlExp


@dataclass(frozen=True, slots=True)
class LetRecFuns:
    bindings: tuple[FunBinding, ...]
    body: MlExp


@dataclass(frozen=True, slots=True)
class Seq:
    first: MlExp
    second: MlExp


@dataclass(frozen=True, slots=True)
class Ref:
    init: MlExp


@dataclass(frozen=True, slots=True)
class Deref:
    target: MlExp


@dataclass(frozen=True, slots=True)
class AssignRef:
    target: MlExp
    value: MlExp


@dataclass(frozen=True, slots=True)
class Raise:
    exn: MlExp


@dataclass(frozen=True, slots=True)
class Handle:
    body: MlExp
    exn_var: str
    handler: MlExp


@dataclass(frozen=True, slots=True)
class Con:
    name: str
    args: tuple[MlExp, ...] = ()


BIN_OPS = {
    "IntAdd": "+",
    "IntSub": "-",
    "IntMul": "*",
    "IntDiv": "div",  # floor division, as in the SML basis
    "IntMod": "mod",
    "IntLt": "<",
    "CharLt": "<",
    "PolyEq": "=",
    "ListAppend": "@",
}

UN_OPS = ("IntToChars", "CharToChars")


@dataclass(frozen=True, slots=True)
class BinPrim:
    op: str
    lhs: MlExp
    rhs: MlExp

    def __post_init__(self):
        if self.op not in BIN_OPS:
            raise ValueError(f"unknown binary primitive {self.op}")


@dataclass(frozen=True, slots=True)
class UnPrim:
    op: str
    arg: MlExp

    def __post_init__(self):
        if self.op not in UN_OPS:
            raise ValueError(f"unknown unary primitive {self.op}")


@dataclass(frozen=True, slots=True)
class Implode:
    arg: MlExp


@dataclass(frozen=True, slots=True)
class CharList:
    text: str


@dataclass(frozen=True, slots=True)
class PrintPrim:
    arg: MlExp


@dataclass(frozen=True, slots=True)
class Probe:
    """Records (tag, [(name, value)]) in the evaluator trace; yields unit."""
    tag: str
    items: tuple[tuple[str, MlExp], ...]


MlExp = Union[Lit, Var, App, Fn, If, Let, LetRecFuns, Seq, Ref, Deref, AssignRef, Raise,
              Handle, Con, BinPrim, UnPrim, Implode, CharList, PrintPrim, Probe]


# -- declarations -----------------------------------------------------------

@dataclass(frozen=True, slots=True)
class StructureDec:
    name: str
    decs: tuple[MlDec, ...]


@dataclass(frozen=True, slots=True)
class FunGroup:
    bindings: tuple[FunBinding, ...]


@dataclass(frozen=True, slots=True)
class ExceptionDec:
    name: str
    payload: str | None = None  # None or "string"


MlDec = Union[StructureDec, FunGroup, ExceptionDec]


@dataclass(frozen=True, slots=True)
class MlProgramT:
    decs: tuple[MlDec, ...] = ()


# -- construction helpers ---------------------------------------------------

def seq(*exps: MlExp) -> MlExp:
    if not exps:
        return UNIT
    out = exps[-1]
    for e in reversed(exps[:-1]):
        out = Seq(e, out)
    return out


def apps(fn: MlExp, *args: MlExp) -> MlExp:
    for a in args:
        fn = App(fn, a)
    return fn


def not_(e: MlExp) -> MlExp:
    return If(e, FALSE, TRUE)


def catch(body: MlExp, con: str, handler: MlExp = UNIT, exn_var: str = "exn") -> Handle:
    """``body handle con => handler``; other exceptions are re-raised."""
    return Handle(body, exn_var,
                  If(BinPrim("PolyEq", Var(exn_var), Con(con)), handler, Raise(Var(exn_var))))


def catch_label(body: MlExp, con: str, label: str, handler: MlExp = UNIT,
                exn_var: str = "exn") -> Handle:
    """``body handle con l => if l = label then handler else raise (con l)``."""
    return Handle(body, exn_var,
                  If(BinPrim("PolyEq", Var(exn_var), Con(con, (lit_str(label),))),
                     handler, Raise(Var(exn_var))))


def _match_catch(h: Handle):
    """Recognise handlers built by catch/catch_label: (con, label or None, handler)."""
    e = h.handler
    if not (isinstance(e, If) and isinstance(e.cond, BinPrim) and e.cond.op == "PolyEq"):
        return None
    lhs, rhs = e.cond.lhs, e.cond.rhs
    if lhs != Var(h.exn_var) or not isinstance(rhs, Con) or e.else_ != Raise(Var(h.exn_var)):
        return None
    if not rhs.args:
        return rhs.name, None, e.then
    if len(rhs.args) == 1 and isinstance(rhs.args[0], Lit) and rhs.args[0].kind == "string":
        return rhs.name, rhs.args[0].value, e.then
    return None


# -- pretty-printing --------------------------------------------------------

WIDTH = 76
_SML_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t"}


def sml_string(s: str) -> str:
    return '"' + "".join(_SML_ESCAPES.get(c, c) for c in s) + '"'


def _lit(e: Lit) -> str:
    if e.kind == "int":
        return f"~{-e.value}" if e.value < 0 else str(e.value)
    if e.kind == "bool":
        return "true" if e.value else "false"
    if e.kind == "char":
        return "#" + sml_string(e.value)
    if e.kind == "string":
        return sml_string(e.value)
    return "()"


def _atomic(e: MlExp) -> bool:
    return (isinstance(e, (Lit, Var, Deref, CharList, Probe, Seq))
            or (isinstance(e, Con) and not e.args))


def _paren(e: MlExp) -> str:
    s = inline(e)
    return s if _atomic(e) else f"({s})"


def _seq_items(e: MlExp) -> list[MlExp]:
    items: list[MlExp] = []
    work = [e]
    while work:
        x = work.pop()
        if isinstance(x, Seq):
            work += [x.second, x.first]
        else:
            items.append(x)
    return items


def _app_chain(e: App) -> tuple[MlExp, list[MlExp]]:
    args = []
    while isinstance(e, App):
        args.append(e.arg)
        e = e.fn
    return e, args[::-1]


def _fn_chain(param: str, body: MlExp) -> tuple[list[str], MlExp]:
    params = [param]
    while isinstance(body, Fn):
        params.append(body.param)
        body = body.body
    return params, body


def _param(p: str) -> str:
    return "()" if p == "_" else p


def _handler_head(h: Handle) -> tuple[str, MlExp | None]:
    m = _match_catch(h)
    if m is None:
        return f"handle {h.exn_var} =>", h.handler
    con, label, handler = m
    if label is None:
        return f"handle {con} =>", handler
    reraise = f"raise ({con} l)"
    return (f"handle {con} l => if l = {sml_string(label)} then {inline(handler)} "
            f"else {reraise}"), None


def _if_special(e: If) -> str | None:
    if e.then == FALSE and e.else_ == TRUE:
        return f"not {_paren(e.cond)}"
    if e.else_ == FALSE:
        return f"{_paren(e.cond)} andalso {_paren(e.then)}"
    if e.then == TRUE:
        return f"{_paren(e.cond)} orelse {_paren(e.else_)}"
    return None


def inline(e: MlExp) -> str:
    """Single-line rendering of an expression."""
    match e:
        case Lit():
            return _lit(e)
        case Var(name):
            return name
        case App():
            fn, args = _app_chain(e)
            return " ".join([_paren(fn)] + [_paren(a) for a in args])
        case Fn(param, body):
            return f"fn {_param(param)} => {inline(body)}"
        case If():
            special = _if_special(e)
            if special is not None:
                return special
            return f"if {inline(e.cond)} then {inline(e.then)} else {inline(e.else_)}"
        case Let() | LetRecFuns():
            binds, body = _let_chain(e)
            return f"let {' '.join(_binding_inline(b) for b in binds)} in {inline(body)} end"
        case Seq():
            return "(" + "; ".join(_seq_item_inline(x) for x in _seq_items(e)) + ")"
        case Ref(init):
            return f"ref {_paren(init)}"
        case Deref(target):
            return f"(! {inline(target)})"
        case AssignRef(target, value):
            v = inline(value) if isinstance(value, (BinPrim, App)) or _atomic(value) \
                else f"({inline(value)})"
            return f"{inline(target)} := {v}"
        case Raise(exn):
            return f"raise {_paren(exn)}"
        case Handle():
            head, handler = _handler_head(e)
            body = inline(e.body)
            if not isinstance(e.body, Seq):
                body = f"({body})"
            tail = "" if handler is None else " " + inline(handler)
            return f"{body} {head}{tail}"
        case Con(name, args):
            if not args:
                return name
            return " ".join([name] + [_paren(a) for a in args])
        case BinPrim(op, lhs, rhs):
            return f"{_paren(lhs)} {BIN_OPS[op]} {_paren(rhs)}"
        case UnPrim("IntToChars", arg):
            return ("String.explode (String.map (fn c => if c = #\"~\" then #\"-\" else c) "
                    f"(Int.toString {_paren(arg)}))")
        case UnPrim("CharToChars", arg):
            return f"[{inline(arg)}]"
        case Implode(arg):
            return f"String.implode {_paren(arg)}"
        case CharList(text):
            return f"(String.explode {sml_string(text)})"
        case PrintPrim(arg):
            return f"print {_paren(arg)}"
        case Probe():
            return "()"
    raise TypeError(f"not an ML expression: {e!r}")


def _seq_item_inline(e: MlExp) -> str:
    s = inline(e)
    return f"({s})" if isinstance(e, (Handle, If, Fn)) and not s.startswith("not ") else s


def _let_chain(e: MlExp) -> tuple[list[object], MlExp]:
    binds: list[object] = []
    while isinstance(e, (Let, LetRecFuns)):
        binds.append(e if isinstance(e, Let) else e.bindings)
        e = e.body
    return binds, e


def _binding_inline(b) -> str:
    if isinstance(b, Let):
        return f"val {b.name} = {inline(b.bound)}"
    return " ".join(_fun_inline(fb, i) for i, fb in enumerate(b))


def _fun_inline(fb: FunBinding, i: int) -> str:
    params, body = _fn_chain(fb.param, fb.body)
    kw = "fun" if i == 0 else "and"
    return f"{kw} {fb.name} {' '.join(_param(p) for p in params)} = {inline(body)}"


def _is_block(e: MlExp) -> bool:
    """Whether ``e`` contains layout-worthy constructs."""
    match e:
        case Let() | LetRecFuns() | Seq() | Handle():
            return True
        case If(c, t, f):
            return _is_block(c) or _is_block(t) or _is_block(f)
        case Fn(_, body):
            return _is_block(body)
    return False


def lines(e: MlExp) -> list[str]:
    """Multi-line rendering, relative to column 0."""
    flat = inline(e)
    if not _is_block(e) and len(flat) <= WIDTH:
        return [flat]
    match e:
        case Seq():
            items = _seq_items(e)
            out: list[str] = []
            for i, item in enumerate(items):
                sub = lines(item)
                if isinstance(item, (Handle, If, Fn)) and not (
                        isinstance(item, If) and _if_special(item)):
                    sub = _wrap(sub)
                prefix = "(" if i == 0 else " "
                out.append(prefix + sub[0])
                out.extend(" " + s for s in sub[1:])
                out[-1] += ")" if i == len(items) - 1 else ";"
            return out
        case If():
            if _if_special(e):
                return [flat]
            out = [f"if {inline(e.cond)} then"]
            out.extend("  " + s for s in lines(e.then))
            else_lines = lines(e.else_)
            if len(else_lines) == 1:
                out.append("else " + else_lines[0])
            else:
                out.append("else")
                out.extend("  " + s for s in else_lines)
            return out
        case Let() | LetRecFuns():
            binds, body = _let_chain(e)
            blines: list[str] = []
            for b in binds:
                blines.extend(_binding_lines(b))
            out = []
            if len(binds) == 1:
                out.append("let " + blines[0])
                out.extend(blines[1:])
            else:
                out.append("let")
                out.extend("  " + s for s in blines)
            out.append("in")
            out.extend("  " + s for s in lines(body))
            out.append("end")
            return out
        case Handle():
            head, handler = _handler_head(e)
            body = lines(e.body)
            if not isinstance(e.body, Seq):
                body = _wrap(body)
            if len(body) == 1 and len(flat) <= WIDTH:
                return [flat]
            if handler is None:
                return body + [head]
            hl = lines(handler)
            if len(hl) == 1:
                return body + [f"{head} {hl[0]}"]
            return body + [head] + ["  " + s for s in hl]
        case Fn(param, body):
            return [f"fn {_param(param)} =>"] + ["  " + s for s in lines(body)]
    return [flat]


def _wrap(sub: list[str]) -> list[str]:
    if len(sub) == 1:
        return [f"({sub[0]})"]
    return ["(" + sub[0]] + [" " + s for s in sub[1:-1]] + [" " + sub[-1] + ")"]


def _binding_lines(b) -> list[str]:
    if isinstance(b, Let):
        bl = lines(b.bound)
        if len(bl) == 1:
            return [f"val {b.name} = {bl[0]}"]
        return [f"val {b.name} ="] + ["  " + s for s in bl]
    out: list[str] = []
    for i, fb in enumerate(b):
        out.extend(_fun_lines(fb, i))
    return out


def _fun_lines(fb: FunBinding, i: int) -> list[str]:
    params, body = _fn_chain(fb.param, fb.body)
    kw = "fun" if i == 0 else "and"
    head = f"{kw} {fb.name} {' '.join(_param(p) for p in params)} ="
    bl = lines(body)
    if len(bl) == 1 and len(head) + 1 + len(bl[0]) <= WIDTH:
        return [f"{head} {bl[0]}"]
    return [head] + ["  " + s for s in bl]


def _dec_lines(d: MlDec) -> list[str]:
    match d:
        case ExceptionDec(name, None):
            return [f"exception {name}"]
        case ExceptionDec(name, payload):
            return [f"exception {name} of {payload}"]
        case FunGroup(bindings):
            return _binding_lines(bindings)
        case StructureDec(name, decs):
            out = [f"structure {name} = struct"]
            for sub in decs:
                out.extend("  " + s for s in _dec_lines(sub))
            out.append("end")
            return out
    raise TypeError(f"not an ML declaration: {d!r}")


def pretty(p: MlProgramT) -> str:
    chunks = ["\n".join(_dec_lines(d)) for d in p.decs]
    return "\n\n".join(chunks) + "\n" if chunks else ""


# -- lint -------------------------------------------------------------------

def lint(p: MlProgramT) -> list[str]:
    """Unbound variables and undeclared exception constructors."""
    issues: list[str] = []
    global_vars: set[str] = set()
    global_exns: set[str] = set()

    def exp(e: MlExp, env: frozenset[str], exns: frozenset[str], where: str):
        stack = [(e, env)]
        while stack:
            e, env = stack.pop()
            match e:
                case Lit() | CharList():
                    pass
                case Var(name):
                    if name not in env and name not in global_vars:
                        issues.append(f"{where}: unbound variable {name}")
                case App(f, a):
                    stack += [(f, env), (a, env)]
                case Fn(param, body):
                    stack.append((body, env | {param}))
                case If(c, t, f):
                    stack += [(c, env), (t, env), (f, env)]
                case Let(name, bound, body):
                    stack += [(bound, env), (body, env | {name})]
                case LetRecFuns(bindings, body):
                    inner = env | {b.name for b in bindings}
                    stack += [(b.body, inner | {b.param}) for b in bindings]
                    stack.append((body, inner))
                case Seq(a, b) | AssignRef(a, b) | BinPrim(_, a, b):
                    stack += [(a, env), (b, env)]
                case Ref(x) | Deref(x) | Raise(x) | UnPrim(_, x) | Implode(x) | PrintPrim(x):
                    stack.append((x, env))
                case Handle(body, var, handler):
                    stack += [(body, env), (handler, env | {var})]
                case Con(name, args):
                    if name not in exns and name not in global_exns:
                        issues.append(f"{where}: undeclared exception {name}")
                    stack += [(a, env) for a in args]
                case Probe(_, items):
                    stack += [(x, env) for _, x in items]
                case _:
                    issues.append(f"{where}: unknown node {e!r}")

    def decs(ds, prefix: str):
        local_vars: set[str] = set()
        local_exns: set[str] = set()
        for d in ds:
            match d:
                case ExceptionDec(name, _):
                    local_exns.add(name)
                case FunGroup(bindings):
                    local_vars.update(b.name for b in bindings)
                    env = frozenset(local_vars)
                    for b in bindings:
                        exp(b.body, env | {b.param}, frozenset(local_exns), prefix + b.name)
                case StructureDec(name, sub):
                    decs(sub, prefix + name + ".")
        if prefix:
            global_vars.update(prefix + n for n in local_vars)
            global_exns.update(prefix + n for n in local_exns)
        else:
            global_vars.update(local_vars)
            global_exns.update(local_exns)

    decs(p.decs, "")
    return issues
