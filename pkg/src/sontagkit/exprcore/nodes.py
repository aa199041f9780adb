"""Expression tree nodes, canonical printing and evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from . import dual

BINARY_OPS = ("+", "-", "*", "/", "^")

# binding strength used by the printer; higher binds tighter
_PREC_ADD = 1
_PREC_MUL = 2
_PREC_NEG = 3
_PREC_POW = 4
_PREC_ATOM = 5


@dataclass(frozen=True)
class Num:
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value < 0:
            raise ValueError(f"literal must be finite and non-negative, got {self.value!r}")


@dataclass(frozen=True)
class Var:
    index: int  # 1-based, x1..xn


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Call]


def constant(value: float) -> Node:
    """Node for an arbitrary finite real; negatives become ``Neg(Num(|v|))``."""
    if value < 0:
        return Neg(Num(-float(value)))
    return Num(float(value))


def precedence(node: Node) -> int:
    if isinstance(node, BinOp):
        return {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL}.get(
            node.op, _PREC_POW
        )
    if isinstance(node, Neg):
        return _PREC_NEG
    return _PREC_ATOM


def format_number(value: float) -> str:
    value = float(value)
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def to_text(node: Node) -> str:
    """Canonical text with the minimum parentheses that preserve the tree."""
    if isinstance(node, Num):
        return format_number(node.value)
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        if precedence(node.operand) < _PREC_NEG:
            inner = f"({inner})"
        return f"-{inner}"
    left = to_text(node.left)
    right = to_text(node.right)
    lp, rp = precedence(node.left), precedence(node.right)
    if node.op == "^":
        # right-associative, and the exponent may carry a unary minus
        if lp <= _PREC_POW:
            left = f"({left})"
        if rp < _PREC_NEG:
            right = f"({right})"
        return f"{left}^{right}"
    own = precedence(node)
    if lp < own:
        left = f"({left})"
    if rp <= own:
        right = f"({right})"
    if own == _PREC_ADD:
        return f"{left} {node.op} {right}"
    return f"{left}{node.op}{right}"


def variables(node: Node) -> set:
    """Indices of all variables referenced below ``node``."""
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, Neg):
        return variables(node.operand)
    if isinstance(node, Call):
        return variables(node.arg)
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    return set()


def _add(a, b):
    return a + b


def _sub(a, b):
    return a - b


def _mul(a, b):
    return a * b


def _div(a, b):
    return a / b


_BINARY_IMPL = {"+": _add, "-": _sub, "*": _mul, "/": _div, "^": dual.power}


def compile_node(node: Node):
    """Turn a tree into a closure ``fn(xs) -> number``.

    The closure is generic over the number type: it works on floats and on
    :class:`Dual` inputs alike.
    """
    if isinstance(node, Num):
        v = node.value
        return lambda xs: v
    if isinstance(node, Var):
        i = node.index - 1
        return lambda xs: xs[i]
    if isinstance(node, Neg):
        inner = compile_node(node.operand)
        return lambda xs: -inner(xs)
    if isinstance(node, Call):
        fn = dual.FUNCTIONS[node.func]
        arg = compile_node(node.arg)
        return lambda xs: fn(arg(xs))
    impl = _BINARY_IMPL[node.op]
    left = compile_node(node.left)
    right = compile_node(node.right)
    return lambda xs: impl(left(xs), right(xs))
