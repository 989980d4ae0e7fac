"""Recursive-descent parser for the infix expression grammar.

Grammar (whitespace between tokens is ignored)::

    expr    = term { ("+" | "-") term }
    term    = unary { ("*" | "/") unary }
    unary   = "-" unary | "+" unary | power
    power   = atom [ "^" exponent ]
    exponent= ["-"] INT | "(" ["-"] INT ")"
    atom    = NUMBER | NAME | FUNC "(" expr ")" | "(" expr ")"
    FUNC    = "sin" | "cos" | "tan" | "exp" | "ln" | "sqrt"

``^`` binds tighter than unary minus, so ``-r^2`` is ``-(r^2)``.
Decimal literals are converted to exact rationals.
"""
from __future__ import annotations

import re
from fractions import Fraction

from . import expr as E

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


class ExprSyntaxError(SyntaxError):
    """Malformed expression text.

    Attributes:
        position: zero-based character offset where parsing failed.
        expected: sorted tuple of token descriptions acceptable there.
    """

    def __init__(self, message: str, position: int, expected, text: str = ""):
        self.position = position
        self.expected = tuple(sorted(expected))
        super().__init__(f"{message} at offset {position}; expected one of {', '.join(self.expected)}")
        self.offset = position
        self.text = text


class UnknownSymbol(LookupError):
    """A name that is neither a chart coordinate, a parameter nor a function."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(name)

    def __str__(self):
        return f"unknown symbol {self.name!r}"


_ATOM_START = ("NUMBER", "NAME", "FUNCTION", "'('", "'-'", "'+'")


def _tokenize(text: str) -> list:
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos, _ATOM_START + ("operator",), text)
        start = m.start(m.lastgroup)
        toks.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    toks.append(("end", "", n))
    return toks


class _Parser:
    def __init__(self, text: str, symbols, raw: bool):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.symbols = symbols
        self.raw = raw

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, expected, what=None):
        kind, val, pos = self.peek()
        desc = what or ("end of input" if kind == "end" else f"unexpected {val!r}")
        raise ExprSyntaxError(desc, pos, expected, self.text)

    def expect_op(self, op, expected=None):
        kind, val, _ = self.peek()
        if kind == "op" and val == op:
            return self.take()
        self.fail(expected or (f"'{op}'",))

    # combinators -----------------------------------------------------------
    def _add(self, a, b):
        return E.raw_add(a, b) if self.raw else E.add(a, b)

    def _mul(self, a, b):
        return E.raw_mul(a, b) if self.raw else E.mul(a, b)

    def _pow(self, a, n):
        return E.raw_pow(a, n) if self.raw else E.power(a, n)

    def _neg(self, a):
        return E.raw_mul(E.MINUS_ONE, a) if self.raw else E.neg(a)

    def _func(self, f, a):
        return E.raw_func(f, a) if self.raw else E.func(f, a)

    # grammar ---------------------------------------------------------------
    def parse(self):
        e = self.expr()
        kind, _, _ = self.peek()
        if kind != "end":
            self.fail(("'+'", "'-'", "'*'", "'/'", "'^'", "end of input"))
        return e

    def expr(self):
        e = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                rhs = self.term()
                e = self._add(e, rhs if val == "+" else self._neg(rhs))
            else:
                return e

    def term(self):
        e = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.take()
                rhs = self.unary()
                e = self._mul(e, rhs if val == "*" else self._pow(rhs, -1))
            else:
                return e

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return self._neg(self.unary())
        if kind == "op" and val == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            return self._pow(base, self.exponent())
        return base

    def exponent(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "(":
            self.take()
            n = self._signed_int()
            self.expect_op(")")
            return n
        return self._signed_int()

    def _signed_int(self):
        sign = 1
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            sign = -1
        kind, val, pos = self.peek()
        if kind != "num" or not val.isdigit():
            self.fail(("INTEGER",), "exponent must be an integer literal" if kind == "num" else None)
        self.take()
        return sign * int(val)

    def atom(self):
        kind, val, pos = self.peek()
        if kind == "num":
            self.take()
            return E.const(Fraction(val))
        if kind == "name":
            self.take()
            if val in E.FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")", ("')'", "'+'", "'-'", "'*'", "'/'", "'^'"))
                return self._func(val, arg)
            if self.symbols is not None and val not in self.symbols:
                raise UnknownSymbol(val)
            return E.sym(val)
        if kind == "op" and val == "(":
            self.take()
            e = self.expr()
            self.expect_op(")", ("')'", "'+'", "'-'", "'*'", "'/'", "'^'"))
            return e
        self.fail(("NUMBER", "NAME", "FUNCTION", "'('"))


def parse_expr(text: str, chart, raw: bool = False) -> E.Expr:
    """Parse ``text`` against the symbols declared by ``chart``.

    With ``raw=True`` the tree mirrors the input exactly and no rewriting
    is applied; otherwise the canonicalising constructors are used.

    Raises:
        ExprSyntaxError: malformed text, with offset and expected tokens.
        UnknownSymbol: an undeclared name.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return _Parser(text, chart.symbols, raw).parse()


def parse_free(text: str, raw: bool = False) -> E.Expr:
    """Parse without checking names against a chart."""
    return _Parser(text, None, raw).parse()
