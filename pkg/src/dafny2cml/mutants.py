"""Deliberately broken compilers used to measure the harness's sensitivity."""

from __future__ import annotations

from . import ml_ast as ml
from .compiler import RETURN, Compiler
from .ir import IrType


class DropBreakHandler(Compiler):
    def loop_entry(self, first_call):
        return first_call


class SwapLeOperands(Compiler):
    def less_equal(self, lhs, rhs, ty):
        return ml.not_(self.less_than(lhs, rhs, ty))


class SkipImplode(Compiler):
    def implode(self, chars):
        return chars


class IntRefsInitOne(Compiler):
    def default_value(self, ty):
        if ty is IrType.INT:
            return ml.lit_int(1)
        return super().default_value(ty)


class ReturnHandlerInLoops(Compiler):
    def loop_body(self, body):
        return ml.catch(body, RETURN)


MUTANTS: dict[str, type[Compiler]] = {
    "drop-break-handler": DropBreakHandler,
    "swap-le-operands": SwapLeOperands,
    "skip-implode": SkipImplode,
    "int-refs-init-one": IntRefsInitOne,
    "return-handler-in-loops": ReturnHandlerInLoops,
}
