"""Random generator of valid, terminating IR programs for differential testing.

Every loop is driven by a private counter incremented first thing in the
body, so ``continue`` cannot skip it.  A static cost estimate (loop bounds
multiplied through nesting and calls) keeps each program's clock use under
``GenConfig.cost_budget``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .ir import (Assign, Binary, BinOp, Break, BreakLabel, Call, Continue, ContinueLabel, DeclVar,
                 If, IrMethod, IrModule, IrProgram, IrType, Labeled, LitBool, LitChar, LitInt,
                 LitString, Not, Print, Return, Var, While)

FEATURES = frozenset({"loops", "labels", "calls", "outs", "strings"})

_CHARS = "abzAZ09 \n!"
_STRINGS = ("", "a", "Cake", "Hello, Cake\n", "x y", "\t\"q\"\\", "\n")


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_methods: int = 4
    max_stmt_depth: int = 3
    max_expr_depth: int = 3
    features: frozenset[str] = FEATURES
    max_loop_bound: int = 4
    cost_budget: int = 3000


@dataclass
class _Sig:
    qualname: str
    ins: tuple[tuple[str, IrType], ...]
    outs: tuple[tuple[str, IrType], ...]
    cost: int = 0


@dataclass
class _Scope:
    # name -> (type, assignable)
    vars: list[dict[str, tuple[IrType, bool]]] = field(default_factory=lambda: [{}])

    def lookup(self, name):
        for s in reversed(self.vars):
            if name in s:
                return s[name]
        return None

    def visible(self) -> dict[str, tuple[IrType, bool]]:
        out: dict[str, tuple[IrType, bool]] = {}
        for s in self.vars:
            out.update(s)
        return out


class _MethodGen:
    def __init__(self, gen: "Generator", module: str, callees: list[_Sig]):
        self.g = gen
        self.rng = gen.rng
        self.cfg = gen.cfg
        self.module = module
        self.callees = callees
        self.scope = _Scope()
        self.fresh = 0
        self.labels = 0
        self.cost = 0

    # -- names and types --

    def types(self) -> list[IrType]:
        if "strings" in self.cfg.features:
            return [IrType.INT, IrType.INT, IrType.BOOL, IrType.CHAR, IrType.STRING]
        return [IrType.INT, IrType.INT, IrType.BOOL]

    def new_name(self, prefix: str = "x", reuse: bool = True) -> str:
        # occasionally reuse a name so nested blocks shadow outer ones
        if reuse and prefix == "x" and self.fresh and self.rng.random() < 0.15:
            name = f"x{self.rng.randrange(self.fresh)}"
            if name not in self.scope.vars[-1]:
                return name
        name = f"{prefix}{self.fresh}"
        self.fresh += 1
        return name

    def vars_of(self, ty: IrType, assignable: bool = False) -> list[str]:
        return sorted(n for n, (t, a) in self.scope.visible().items()
                      if t is ty and (a or not assignable))

    # -- expressions --

    def expr(self, ty: IrType, depth: int | None = None) -> object:
        rng = self.rng
        if depth is None:
            depth = rng.randint(0, self.cfg.max_expr_depth)
        names = self.vars_of(ty)
        if depth <= 0 or rng.random() < 0.25:
            if names and rng.random() < 0.6:
                return Var(rng.choice(names))
            return self.literal(ty)
        d = depth - 1
        if ty is IrType.INT:
            k = rng.random()
            if k < 0.45:
                return Binary(rng.choice((BinOp.ADD, BinOp.SUB)), self.expr(ty, d), self.expr(ty, d))
            if k < 0.65:
                return Binary(BinOp.MUL, self.expr(ty, d), LitInt(rng.randint(-3, 3)))
            divisor = rng.choice([n for n in range(-5, 6) if n])
            return Binary(rng.choice((BinOp.DIV, BinOp.MOD)), self.expr(ty, d), LitInt(divisor))
        if ty is IrType.BOOL:
            k = rng.random()
            if k < 0.15:
                return Not(self.expr(ty, d))
            if k < 0.35:
                return Binary(rng.choice((BinOp.AND, BinOp.OR)), self.expr(ty, d), self.expr(ty, d))
            if k < 0.8:
                op = rng.choice((BinOp.LT, BinOp.LE, BinOp.GT, BinOp.GE))
                ot = IrType.CHAR if "strings" in self.cfg.features and rng.random() < 0.25 \
                    else IrType.INT
                return Binary(op, self.expr(ot, d), self.expr(ot, d))
            ot = rng.choice(self.types())
            return Binary(rng.choice((BinOp.EQ, BinOp.NEQ)), self.expr(ot, d), self.expr(ot, d))
        if ty is IrType.STRING and rng.random() < 0.6:
            return Binary(BinOp.CONCAT, self.expr(ty, d), self.expr(ty, d))
        if names:
            return Var(rng.choice(names))
        return self.literal(ty)

    def literal(self, ty: IrType):
        rng = self.rng
        if ty is IrType.INT:
            return LitInt(rng.randint(-9, 9))
        if ty is IrType.BOOL:
            return LitBool(rng.random() < 0.5)
        if ty is IrType.CHAR:
            return LitChar(rng.choice(_CHARS))
        return LitString(rng.choice(_STRINGS))

    # -- statements --

    def block(self, depth: int, loops: list[str], labels: list[tuple[str, bool]],
              mult: int, n: int | None = None) -> list:
        self.scope.vars.append({})
        try:
            if n is None:
                n = self.rng.randint(1, 4)
            out: list = []
            for _ in range(n):
                out.extend(self.stmt(depth, loops, labels, mult))
            return out
        finally:
            self.scope.vars.pop()

    def guard(self, loops: list[str]):
        if loops and self.rng.random() < 0.5:
            return Binary(BinOp.EQ, Var(loops[-1]), LitInt(self.rng.randint(1, 3)))
        return self.expr(IrType.BOOL, 2)

    def stmt(self, depth: int, loops: list[str], labels, mult: int) -> list:
        rng = self.rng
        feats = self.cfg.features
        choices = [("decl", 3), ("assign", 3), ("print", 3)]
        if depth < self.cfg.max_stmt_depth:
            choices.append(("if", 2))
            if "loops" in feats and len(loops) < 2:
                choices.append(("while", 3))
            if "labels" in feats and len(labels) < 2:
                choices.append(("labeled", 2))
        if "calls" in feats and self.callees:
            choices.append(("call", 3))
        if loops:
            choices += [("break", 1), ("continue", 1)]
        if labels:
            choices.append(("jump-label", 1))
        choices.append(("return", 1))
        kinds, weights = zip(*choices)
        kind = rng.choices(kinds, weights)[0]

        if kind == "decl":
            ty = rng.choice(self.types())
            init = self.expr(ty)
            name = self.new_name()
            self.scope.vars[-1][name] = (ty, True)
            return [DeclVar(name, ty, init)]
        if kind == "assign":
            ty = rng.choice(self.types())
            targets = self.vars_of(ty, assignable=True)
            if not targets:
                return self.stmt(depth, loops, labels, mult)
            return [Assign(rng.choice(targets), self.expr(ty))]
        if kind == "print":
            return [Print(self.expr(rng.choice(self.types())))]
        if kind == "if":
            cond = self.expr(IrType.BOOL)
            thn = self.block(depth + 1, loops, labels, mult)
            els = self.block(depth + 1, loops, labels, mult) if rng.random() < 0.5 else []
            return [If(cond, tuple(thn), tuple(els))]
        if kind == "while":
            return self.loop(depth, loops, labels, mult, None)
        if kind == "labeled":
            label = f"L{self.labels}"
            self.labels += 1
            if "loops" in feats and len(loops) < 2 and rng.random() < 0.6:
                return self.loop(depth, loops, labels, mult, label)
            inner_labels = labels + [(label, False)]
            cond = self.expr(IrType.BOOL)
            thn = self.block(depth + 1, loops, inner_labels, mult)
            els = self.block(depth + 1, loops, inner_labels, mult) if rng.random() < 0.5 else []
            return [Labeled(label, If(cond, tuple(thn), tuple(els)))]
        if kind == "call":
            return self.call(mult)
        if kind in ("break", "continue", "jump-label", "return"):
            if kind == "break":
                jump = Break()
            elif kind == "continue":
                jump = Continue()
            elif kind == "return":
                jump = Return()
            else:
                label, is_loop = rng.choice(labels)
                jump = ContinueLabel(label) if is_loop and rng.random() < 0.5 else BreakLabel(label)
            pre = [Print(self.expr(rng.choice(self.types()), 1))] if rng.random() < 0.3 else []
            return [If(self.guard(loops), tuple(pre) + (jump,), ())]
        raise AssertionError(kind)

    def loop(self, depth, loops, labels, mult, label: str | None) -> list:
        rng = self.rng
        bound = rng.randint(0, self.cfg.max_loop_bound)
        counter = self.new_name("i")
        self.scope.vars[-1][counter] = (IrType.INT, False)
        inner_mult = mult * max(bound, 1)
        self.cost += inner_mult
        cond = Binary(BinOp.LT, Var(counter), LitInt(bound))
        if rng.random() < 0.3:
            cond = Binary(BinOp.AND, cond, self.expr(IrType.BOOL, 1))
        inner_labels = labels + [(label, True)] if label else labels
        body = [Assign(counter, Binary(BinOp.ADD, Var(counter), LitInt(1)))]
        body += self.block(depth + 1, loops + [counter], inner_labels, inner_mult)
        w = While(cond, tuple(body))
        stmts = [DeclVar(counter, IrType.INT, LitInt(0)), Labeled(label, w) if label else w]
        if rng.random() < 0.5:
            stmts.append(Print(self.expr(rng.choice(self.types()), 1)))
        return stmts

    def call(self, mult: int) -> list:
        rng = self.rng
        affordable = [c for c in self.callees
                      if self.cost + mult * (c.cost + 1) <= self.cfg.cost_budget]
        if not affordable:
            return [Print(self.expr(IrType.INT, 1))]
        sig = rng.choice(affordable)
        self.cost += mult * (sig.cost + 1)
        pre: list = []
        outs: list[str] = []
        for _, ty in sig.outs:
            candidates = [n for n in self.vars_of(ty, assignable=True) if n not in outs]
            if candidates and rng.random() < 0.7:
                outs.append(rng.choice(candidates))
            else:
                name = self.new_name(reuse=False)
                self.scope.vars[-1][name] = (ty, True)
                pre.append(DeclVar(name, ty, self.literal(ty)))
                outs.append(name)
        # arguments see the fresh out targets, which may shadow outer names
        args = tuple(self.expr(ty, 2) for _, ty in sig.ins)
        post = [Print(Var(o)) for o in outs if rng.random() < 0.6]
        return pre + [Call(tuple(outs), sig.qualname, args)] + post

    def method(self, sig: _Sig, name: str) -> IrMethod:
        for pname, ty in sig.ins + sig.outs:
            self.scope.vars[0][pname] = (ty, True)
        body = []
        # reading an out-parameter before assigning it exposes its default value
        if sig.outs and self.rng.random() < 0.4:
            body.append(Print(Var(self.rng.choice(sig.outs)[0])))
        body += self.block(0, [], [], 1, n=self.rng.randint(2, 5))
        if self.rng.random() < 0.5:
            body.append(Print(self.expr(self.rng.choice(self.types()))))
        sig.cost = self.cost
        return IrMethod(name, sig.ins, sig.outs, tuple(body))


class Generator:
    def __init__(self, cfg: GenConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)

    def signature(self, qualname: str) -> _Sig:
        rng = self.rng
        types = [IrType.INT, IrType.BOOL]
        if "strings" in self.cfg.features:
            types += [IrType.CHAR, IrType.STRING]
        ins = tuple((f"p{i}", rng.choice(types)) for i in range(rng.randint(0, 2)))
        outs: tuple = ()
        if "outs" in self.cfg.features:
            outs = tuple((f"o{i}", rng.choice(types + [IrType.INT]))
                         for i in range(rng.randint(0, 2)))
        return _Sig(qualname, ins, outs)

    def program(self) -> IrProgram:
        rng = self.rng
        n_helpers = 0
        if "calls" in self.cfg.features:
            n_helpers = rng.randint(0, max(0, self.cfg.max_methods - 1))
        n_lib = rng.randint(0, n_helpers) if n_helpers and rng.random() < 0.4 else 0
        # call order: Main, _module helpers, then Lib helpers; each may call only later ones
        order: list[tuple[str, str]] = [("_module", "Main")]
        order += [("_module", f"M{i}") for i in range(n_helpers - n_lib)]
        order += [("Lib", f"L{i}") for i in range(n_lib)]
        sigs = [_Sig("_module.Main", (), ())]
        sigs += [self.signature(f"{mod}.{name}") for mod, name in order[1:]]
        bodies: dict[str, IrMethod] = {}
        for idx in range(len(order) - 1, -1, -1):
            mod, name = order[idx]
            callees = [s for s in sigs[idx + 1:]
                       if s.qualname.startswith("Lib.") or mod == "_module"]
            bodies[sigs[idx].qualname] = _MethodGen(self, mod, callees).method(sigs[idx], name)
        modules = []
        if n_lib:
            modules.append(IrModule("Lib", tuple(bodies[f"Lib.L{i}"] for i in range(n_lib))))
        main_methods = [bodies["_module.Main"]]
        main_methods += [bodies[f"_module.M{i}"] for i in range(n_helpers - n_lib)]
        modules.append(IrModule("_module", tuple(main_methods)))
        return IrProgram(tuple(modules))


def generate(cfg: GenConfig) -> IrProgram:
    return Generator(cfg).program()
