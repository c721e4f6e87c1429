"""Scalar expressions of one time variable ``t``.

Grammar, loosest binding first::

    expr  := term (("+" | "-") term)*
    term  := unary (("*" | "/") unary)*
    unary := "-" unary | power
    power := atom ("^" unary)?          # right associative
    atom  := NUMBER | "t" | NAME "(" expr ")" | "(" expr ")"

so ``-t^2`` is ``-(t^2)`` and ``2^-t`` is ``2^(-t)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, ExpressionSyntaxError, UnknownIdentifierError

FUNCTIONS = ("exp", "sin", "cos", "sinh", "cosh", "sqrt", "log")
BINARY_OPS = ("+", "-", "*", "/", "^")


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Expr"


Expr = Union[Const, Var, Neg, BinOp, Call]


# ----------------------------------------------------------------------------
# tokenizer / parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "num", "name", "op", "end"
    text: str
    offset: int  # byte offset into the UTF-8 source


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    pos = 0
    n = len(src)

    def boff(i):
        return len(src[:i].encode("utf-8"))

    while True:
        while pos < n and src[pos].isspace():
            pos += 1
        if pos >= n:
            tokens.append(_Token("end", "", boff(n)))
            return tokens
        m = _TOKEN_RE.match(src, pos)
        if m is None or m.end() == pos:
            raise ExpressionSyntaxError(
                boff(pos), {"number", "identifier", "operator"}, repr(src[pos])
            )
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(kind), boff(m.start(kind))))
        pos = m.end()


class _Parser:
    def __init__(self, src):
        self.tokens = _tokenize(src)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def _error(self, expected):
        tok = self.tok
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExpressionSyntaxError(tok.offset, expected, found)

    def _accept(self, text):
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def _expect(self, text):
        if not self._accept(text):
            self._error({repr(text)})

    def parse(self):
        e = self.expr()
        if self.tok.kind != "end":
            self._error({"'+'", "'-'", "'*'", "'/'", "'^'", "end of input"})
        return e

    def expr(self):
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.term())
        return left

    def term(self):
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.unary())
        return left

    def unary(self):
        if self._accept("-"):
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self._accept("^"):
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Const(float(tok.text))
        if tok.kind == "name":
            self.i += 1
            if tok.text == "t":
                return Var()
            if tok.text in FUNCTIONS:
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                return Call(tok.text, arg)
            raise UnknownIdentifierError(tok.text, tok.offset)
        if self._accept("("):
            e = self.expr()
            self._expect(")")
            return e
        self._error({"number", "'t'", "function", "'('", "'-'"})


def parse(src: str) -> Expr:
    """Parse ``src`` into an expression tree.

    Raises :class:`ExpressionSyntaxError` (with the byte offset and the set of
    expected tokens) or :class:`UnknownIdentifierError`.
    """
    return _Parser(src).parse()


def to_source(e: Expr) -> str:
    """Canonical, fully parenthesised printer.

    ``parse(to_source(e)) == e`` for every tree produced by :func:`parse`.
    The grammar has no negative literals, so a negative constant prints as
    ``(-x)`` and reads back as a negation with the same value.
    """
    if isinstance(e, Const):
        if math.copysign(1.0, e.value) < 0:
            return f"(-{-e.value!r})"
        return repr(float(e.value))
    if isinstance(e, Var):
        return "t"
    if isinstance(e, Neg):
        return f"(-{to_source(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_source(e.left)} {e.op} {to_source(e.right)})"
    if isinstance(e, Call):
        return f"{e.name}({to_source(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


# ----------------------------------------------------------------------------
# evaluation


def _pow(a, b, t):
    if a == 0.0 and b < 0:
        raise DomainError("zero raised to a negative power", t)
    if a < 0 and not float(b).is_integer():
        raise DomainError("negative base with non-integer exponent", t)
    return math.pow(a, b)


def _call(name, x, t):
    if name == "log":
        if x <= 0:
            raise DomainError("log of non-positive argument", t)
        return math.log(x)
    if name == "sqrt":
        if x < 0:
            raise DomainError("sqrt of negative argument", t)
        return math.sqrt(x)
    return getattr(math, name)(x)


def _eval(e, t):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return t
    if isinstance(e, Neg):
        return -_eval(e.arg, t)
    if isinstance(e, Call):
        return _call(e.name, _eval(e.arg, t), t)
    a = _eval(e.left, t)
    b = _eval(e.right, t)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        if b == 0.0:
            raise DomainError("division by zero", t)
        return a / b
    return _pow(a, b, t)


def evaluate(e: Expr, t: float) -> float:
    """Evaluate ``e`` at time ``t`` in IEEE double precision."""
    try:
        value = _eval(e, float(t))
    except OverflowError:
        raise DomainError("overflow", t) from None
    if not math.isfinite(value):
        raise DomainError("non-finite result", t)
    return value


def _first_bad(mask, ts):
    return float(ts[np.argmax(mask)])


def _eval_array(e, ts):
    if isinstance(e, Const):
        return np.full(ts.shape, e.value)
    if isinstance(e, Var):
        return ts.copy()
    if isinstance(e, Neg):
        return -_eval_array(e.arg, ts)
    if isinstance(e, Call):
        x = _eval_array(e.arg, ts)
        if e.name == "log" and np.any(x <= 0):
            raise DomainError("log of non-positive argument", _first_bad(x <= 0, ts))
        if e.name == "sqrt" and np.any(x < 0):
            raise DomainError("sqrt of negative argument", _first_bad(x < 0, ts))
        return getattr(np, e.name)(x)
    a = _eval_array(e.left, ts)
    b = _eval_array(e.right, ts)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        if np.any(b == 0.0):
            raise DomainError("division by zero", _first_bad(b == 0.0, ts))
        return a / b
    bad = (a == 0.0) & (b < 0)
    if np.any(bad):
        raise DomainError("zero raised to a negative power", _first_bad(bad, ts))
    bad = (a < 0) & (b != np.round(b))
    if np.any(bad):
        raise DomainError("negative base with non-integer exponent", _first_bad(bad, ts))
    return np.power(a, b)


def evaluate_array(e: Expr, ts) -> np.ndarray:
    """Vectorised :func:`evaluate` over an array of times."""
    ts = np.asarray(ts, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        values = _eval_array(e, ts)
    bad = ~np.isfinite(values)
    if np.any(bad):
        raise DomainError("non-finite result", _first_bad(bad, ts))
    return values
