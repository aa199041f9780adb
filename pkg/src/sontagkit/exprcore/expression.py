from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import DimensionError, NonFiniteError
from .dual import Dual
from .nodes import Node, compile_node, to_text, variables
from .parser import parse_node

# arithmetic failures that all mean "no finite value here"
_ARITH_ERRORS = (ZeroDivisionError, OverflowError, ValueError)


@dataclass(frozen=True)
class Expression:
    """Parsed scalar expression over ``x1..xn``.

    Immutable; equality is structural on the tree and the dimension. Evaluation
    accepts floats or :class:`Dual` numbers.
    """

    root: Node
    n: int
    _fn: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bad = [i for i in variables(self.root) if not 1 <= i <= self.n]
        if bad:
            raise DimensionError(f"variables x{bad} outside x1..x{self.n}")
        object.__setattr__(self, "_fn", compile_node(self.root))

    def __str__(self):
        return to_text(self.root)

    def _check_dim(self, point):
        if len(point) != self.n:
            raise DimensionError(f"point has length {len(point)}, expected {self.n}")

    def evaluate(self, point: Sequence[float]) -> float:
        self._check_dim(point)
        try:
            value = self._fn([float(v) for v in point])
        except _ARITH_ERRORS as exc:
            raise NonFiniteError(f"{self}: {exc} at {list(point)}") from exc
        value = float(value)
        if not math.isfinite(value):
            raise NonFiniteError(f"{self}: non-finite value at {list(point)}")
        return value

    def evaluate_dual(self, point: Sequence[Dual]) -> Dual:
        self._check_dim(point)
        try:
            result = self._fn(list(point))
        except _ARITH_ERRORS as exc:
            raise NonFiniteError(f"{self}: {exc}") from exc
        if not isinstance(result, Dual):
            # expression without variables
            result = Dual(result, 0.0)
        if not (math.isfinite(result.value) and math.isfinite(result.deriv)):
            raise NonFiniteError(f"{self}: non-finite dual result")
        return result

    def directional_derivative(self, point, direction) -> float:
        duals = [Dual(p, d) for p, d in zip(point, direction)]
        return self.evaluate_dual(duals).deriv

    def gradient(self, point: Sequence[float]) -> np.ndarray:
        """Exact gradient by ``n`` forward passes with unit seeds."""
        self._check_dim(point)
        xs = [float(v) for v in point]
        grad = np.zeros(self.n)
        for j in range(self.n):
            seeded = [Dual(v, 1.0 if i == j else 0.0) for i, v in enumerate(xs)]
            grad[j] = self.evaluate_dual(seeded).deriv
        return grad


def parse(source: str, n: int) -> Expression:
    """Parse ``source`` into an :class:`Expression` over ``x1..xn``.

    Raises:
        ExprSyntaxError: malformed text; carries the 0-based ``position``.
        UnknownIdentifierError: a name that is neither ``x<k>`` nor a function.
        DimensionError: a variable index outside ``1..n``.
    """
    return Expression(parse_node(source, n), n)


def evaluate(expr: Expression, point) -> float:
    return expr.evaluate(point)


def gradient(expr: Expression, point) -> np.ndarray:
    return expr.gradient(point)
