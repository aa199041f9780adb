"""Scalar expression language with dual-number differentiation."""

from .dual import Dual
from .expression import Expression, evaluate, gradient, parse
from .nodes import BinOp, Call, Neg, Num, Var, constant, to_text

__all__ = [
    "BinOp",
    "Call",
    "Dual",
    "Expression",
    "Neg",
    "Num",
    "Var",
    "constant",
    "evaluate",
    "gradient",
    "parse",
    "to_text",
]
