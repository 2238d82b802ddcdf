"""Expression trees for structural equations.

Values live in a single float64 domain: comparisons produce 1.0/0.0 and the
condition of an ``IfThenElse`` is always a :class:`Comparison`. Evaluation is
vectorised over numpy arrays so a whole batch of Monte Carlo contexts goes
through one tree walk.
"""

from __future__ import annotations

import functools
import operator
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

ARITHMETIC_OPS = ("+", "-", "*", "/")
COMPARISON_OPS = ("=", "!=", "<", "<=", ">", ">=")

# binding strength used by the serializer and the parser
PRECEDENCE = {"=": 1, "!=": 1, "<": 1, "<=": 1, ">": 1, ">=": 1,
              "+": 2, "-": 2, "*": 3, "/": 3}

_ARITH = {"+": np.add, "-": np.subtract, "*": np.multiply, "/": np.divide}
_CMP = {"=": operator.eq, "!=": operator.ne, "<": operator.lt,
        "<=": operator.le, ">": operator.gt, ">=": operator.ge}


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Expr"
    rhs: "Expr"

    def __post_init__(self):
        if self.op not in ARITHMETIC_OPS:
            raise ValueError(f"unknown arithmetic operator {self.op!r}")


@dataclass(frozen=True)
class Comparison:
    op: str
    lhs: "Expr"
    rhs: "Expr"

    def __post_init__(self):
        if self.op not in COMPARISON_OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")


@dataclass(frozen=True)
class IfThenElse:
    cond: Comparison
    then: "Expr"
    orelse: "Expr"

    def __post_init__(self):
        if not isinstance(self.cond, Comparison):
            raise ValueError("the condition of an if-expression must be a comparison")


Expr = Union[Constant, VarRef, Binary, Comparison, IfThenElse]


@functools.lru_cache(maxsize=4096)
def references(expr: Expr) -> frozenset[str]:
    """Names of all variables referenced anywhere in ``expr``."""
    if isinstance(expr, Constant):
        return frozenset()
    if isinstance(expr, VarRef):
        return frozenset((expr.name,))
    if isinstance(expr, (Binary, Comparison)):
        return references(expr.lhs) | references(expr.rhs)
    if isinstance(expr, IfThenElse):
        return references(expr.cond) | references(expr.then) | references(expr.orelse)
    raise TypeError(f"not an expression: {expr!r}")


def constants(expr: Expr):
    """Yield every Constant value in ``expr``."""
    if isinstance(expr, Constant):
        yield expr.value
    elif isinstance(expr, (Binary, Comparison)):
        yield from constants(expr.lhs)
        yield from constants(expr.rhs)
    elif isinstance(expr, IfThenElse):
        yield from constants(expr.cond)
        yield from constants(expr.then)
        yield from constants(expr.orelse)


def evaluate_expr(expr: Expr, env: Mapping[str, np.ndarray], size: int) -> np.ndarray:
    """Evaluate ``expr`` element-wise over arrays of length ``size``.

    Branches of a conditional are only evaluated on the elements that select
    them, so ``if x = 0 then 0 else 1 / x`` never divides by zero.

    Raises:
        ZeroDivisionError: a division met a zero denominator.
    """
    if isinstance(expr, Constant):
        return np.full(size, expr.value, dtype=float)
    if isinstance(expr, VarRef):
        return env[expr.name]
    if isinstance(expr, Binary):
        lhs = evaluate_expr(expr.lhs, env, size)
        rhs = evaluate_expr(expr.rhs, env, size)
        if expr.op == "/" and np.any(rhs == 0.0):
            raise ZeroDivisionError
        return _ARITH[expr.op](lhs, rhs)
    if isinstance(expr, Comparison):
        lhs = evaluate_expr(expr.lhs, env, size)
        rhs = evaluate_expr(expr.rhs, env, size)
        return _CMP[expr.op](lhs, rhs).astype(float)
    if isinstance(expr, IfThenElse):
        mask = evaluate_expr(expr.cond, env, size) != 0.0
        out = np.empty(size, dtype=float)
        for branch, selected in ((expr.then, mask), (expr.orelse, ~mask)):
            count = int(selected.sum())
            if count == size:
                out[:] = evaluate_expr(branch, env, size)
            elif count:
                sub = {name: env[name][selected] for name in references(branch)}
                out[selected] = evaluate_expr(branch, sub, count)
        return out
    raise TypeError(f"not an expression: {expr!r}")
