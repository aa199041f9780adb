"""Scalar dual numbers for forward-mode differentiation.

A ``Dual(v, d)`` represents ``v + d*eps`` with ``eps**2 = 0``; seeding ``d = 1``
on one input and ``0`` on the others propagates the partial derivative with
respect to that input through every operation.
"""

import math

from ..errors import NonFiniteError


class Dual:
    """A value and one directional derivative slot."""

    __slots__ = ("value", "deriv")

    def __init__(self, value, deriv=0.0):
        self.value = float(value)
        self.deriv = float(deriv)

    def __repr__(self):
        return f"Dual({self.value!r}, {self.deriv!r})"

    def __eq__(self, other):
        if isinstance(other, Dual):
            return self.value == other.value and self.deriv == other.deriv
        return NotImplemented

    __hash__ = None

    def __neg__(self):
        return Dual(-self.value, -self.deriv)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value + other.value, self.deriv + other.deriv)
        return Dual(self.value + other, self.deriv)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value - other.value, self.deriv - other.deriv)
        return Dual(self.value - other, self.deriv)

    def __rsub__(self, other):
        return Dual(other - self.value, -self.deriv)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.value * other.value,
                self.deriv * other.value + self.value * other.deriv,
            )
        return Dual(self.value * other, self.deriv * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            if other.value == 0.0:
                raise ZeroDivisionError("dual division by zero")
            q = self.value / other.value
            return Dual(q, (self.deriv - q * other.deriv) / other.value)
        return Dual(self.value / other, self.deriv / other)

    def __rtruediv__(self, other):
        return Dual(other) / self

    def __pow__(self, other):
        return power(self, other)

    def __rpow__(self, other):
        return power(Dual(other), self)


def _lift(x):
    return x if isinstance(x, Dual) else Dual(x)


def power(base, exponent):
    """``base ** exponent`` for floats or duals, using ``math.pow`` for the value.

    A constant exponent (zero derivative slot) uses the power rule, so negative
    bases with integer exponents are fine. A varying exponent needs ``base > 0``.
    """
    if not isinstance(base, Dual) and not isinstance(exponent, Dual):
        return math.pow(base, exponent)
    b = _lift(base)
    e = _lift(exponent)
    value = math.pow(b.value, e.value)
    if e.deriv == 0.0:
        if b.deriv == 0.0:
            return Dual(value, 0.0)
        if e.value == 0.0:
            return Dual(value, 0.0)
        return Dual(value, e.value * math.pow(b.value, e.value - 1.0) * b.deriv)
    if b.value <= 0.0:
        raise NonFiniteError(f"non-positive base {b.value!r} with varying exponent")
    log_b = math.log(b.value)
    return Dual(value, value * (e.deriv * log_b + e.value * b.deriv / b.value))


def sin(x):
    if isinstance(x, Dual):
        return Dual(math.sin(x.value), math.cos(x.value) * x.deriv)
    return math.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(math.cos(x.value), -math.sin(x.value) * x.deriv)
    return math.cos(x)


def tanh(x):
    if isinstance(x, Dual):
        t = math.tanh(x.value)
        return Dual(t, (1.0 - t * t) * x.deriv)
    return math.tanh(x)


def exp(x):
    if isinstance(x, Dual):
        e = math.exp(x.value)
        return Dual(e, e * x.deriv)
    return math.exp(x)


def ln(x):
    if isinstance(x, Dual):
        return Dual(math.log(x.value), x.deriv / x.value)
    return math.log(x)


def sqrt(x):
    # derivative at 0 is defined as 0
    if isinstance(x, Dual):
        s = math.sqrt(x.value)
        return Dual(s, 0.0 if s == 0.0 else x.deriv / (2.0 * s))
    return math.sqrt(x)


def absolute(x):
    # derivative at 0 is defined as 0
    if isinstance(x, Dual):
        v = x.value
        sign = 1.0 if v > 0.0 else (-1.0 if v < 0.0 else 0.0)
        return Dual(abs(v), sign * x.deriv)
    return abs(x)


FUNCTIONS = {
    "sin": sin,
    "cos": cos,
    "tanh": tanh,
    "exp": exp,
    "ln": ln,
    "sqrt": sqrt,
    "abs": absolute,
}
