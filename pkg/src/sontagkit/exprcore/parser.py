"""Tokenizer and recursive-descent parser for scalar expressions.

Grammar, loosest to tightest binding::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ("^" unary)?
    primary := NUMBER | VAR | FUNC "(" expr ")" | "(" expr ")"

``^`` is right-associative because its exponent is parsed at the ``unary``
level, which also admits ``x1^-2``.
"""

import re
from typing import NamedTuple

from ..errors import DimensionError, ExprSyntaxError, UnknownIdentifierError
from .dual import FUNCTIONS
from .nodes import BinOp, Call, Neg, Num, Var

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)

_VAR_RE = re.compile(r"x([0-9]+)")


class Token(NamedTuple):
    kind: str  # "num", "ident", "op", "end"
    text: str
    pos: int


def tokenize(source):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source, n):
        self.tokens = tokenize(source)
        self.i = 0
        self.n = n

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text):
        t = self.tok
        if t.text != text or t.kind != "op":
            what = "end of input" if t.kind == "end" else repr(t.text)
            raise ExprSyntaxError(f"expected {text!r}, found {what}", t.pos)
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def primary(self):
        t = self.advance()
        if t.kind == "num":
            return Num(float(t.text))
        if t.kind == "ident":
            m = _VAR_RE.fullmatch(t.text)
            if m:
                index = int(m.group(1))
                if not 1 <= index <= self.n:
                    raise DimensionError(
                        f"variable {t.text} at position {t.pos} outside x1..x{self.n}"
                    )
                return Var(index)
            if t.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(t.text, arg)
            raise UnknownIdentifierError(t.text, t.pos)
        if t.kind == "op" and t.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if t.kind == "end":
            raise ExprSyntaxError("unexpected end of input", t.pos)
        raise ExprSyntaxError(f"unexpected {t.text!r}", t.pos)


def parse_node(source, n):
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(source, n).parse()
