"""Tiny arithmetic expression language for scenario files.

Grammar (conventional precedence, ``^`` binds tightest and associates right):

    expr   := term  (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-')* power
    power  := atom ('^' unary)?
    atom   := NUMBER | VARIABLE | FUNC '(' expr ')' | '(' expr ')'

Functions: sin, cos, exp, log, sqrt, atan.  The single free variable may be
written ``x``, ``y`` or ``r``; all three names bind the same argument.  Parse
and evaluation errors carry 1-based line/column positions.
"""

from __future__ import annotations

import numpy as np

from .errors import ExpressionError

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "atan": np.arctan,
}

VARIABLES = ("x", "y", "r")

_NUMBER_CHARS = set("0123456789.")


class _Token:
    __slots__ = ("kind", "value", "line", "column")

    def __init__(self, kind, value, line, column):
        self.kind = kind
        self.value = value
        self.line = line
        self.column = column


def _tokenize(text):
    tokens = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        start_col = col
        if c in "+-*/^()":
            tokens.append(_Token(c, c, line, start_col))
            i += 1
            col += 1
            continue
        if c in _NUMBER_CHARS:
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                seen_dot = seen_dot or text[j] == "."
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            lexeme = text[i:j]
            try:
                value = float(lexeme)
            except ValueError:
                raise ExpressionError(f"bad number literal {lexeme!r}", line, start_col)
            tokens.append(_Token("number", value, line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("name", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        raise ExpressionError(f"unexpected character {c!r}", line, start_col)
    tokens.append(_Token("end", None, line, col))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.peek()
        if tok.kind != kind:
            shown = "end of input" if tok.kind == "end" else repr(tok.value)
            raise ExpressionError(f"expected {kind!r}, found {shown}", tok.line, tok.column)
        return self.advance()

    # Each node is a closure taking the scalar (or ndarray) argument.
    def parse_expr(self):
        node = self.parse_term()
        while self.peek().kind in "+-":
            op = self.advance().kind
            rhs = self.parse_term()
            lhs = node
            if op == "+":
                node = lambda t, a=lhs, b=rhs: a(t) + b(t)
            else:
                node = lambda t, a=lhs, b=rhs: a(t) - b(t)
        return node

    def parse_term(self):
        node = self.parse_unary()
        while self.peek().kind in "*/":
            op = self.advance().kind
            rhs = self.parse_unary()
            lhs = node
            if op == "*":
                node = lambda t, a=lhs, b=rhs: a(t) * b(t)
            else:
                node = lambda t, a=lhs, b=rhs: a(t) / b(t)
        return node

    def parse_unary(self):
        sign = 1.0
        while self.peek().kind in "+-":
            if self.advance().kind == "-":
                sign = -sign
        node = self.parse_power()
        if sign < 0:
            inner = node
            node = lambda t, a=inner: -a(t)
        return node

    def parse_power(self):
        base = self.parse_atom()
        if self.peek().kind == "^":
            self.advance()
            expo = self.parse_unary()
            return lambda t, a=base, b=expo: a(t) ** b(t)
        return base

    def parse_atom(self):
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return lambda t, v=tok.value: v
        if tok.kind == "(":
            self.advance()
            node = self.parse_expr()
            self.expect(")")
            return node
        if tok.kind == "name":
            self.advance()
            name = tok.value
            if name in VARIABLES:
                return lambda t: t
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.parse_expr()
                self.expect(")")
                return lambda t, f=FUNCTIONS[name], a=arg: f(a(t))
            raise ExpressionError(
                f"unknown name {name!r} (variables: x, y, r; functions: "
                + ", ".join(sorted(FUNCTIONS)) + ")",
                tok.line, tok.column,
            )
        shown = "end of input" if tok.kind == "end" else repr(tok.value)
        raise ExpressionError(f"expected a value, found {shown}", tok.line, tok.column)


class Expression:
    """A compiled expression: callable on floats and numpy arrays."""

    def __init__(self, text):
        tokens = _tokenize(text)
        parser = _Parser(tokens)
        self._fn = parser.parse_expr()
        tail = parser.peek()
        if tail.kind != "end":
            raise ExpressionError(
                f"unexpected trailing input {tail.value!r}", tail.line, tail.column
            )
        self.text = text

    def __call__(self, t):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = self._fn(t)
        if np.isscalar(t) or isinstance(t, float):
            return float(out)
        return np.asarray(out, dtype=float)

    def __repr__(self):
        return f"Expression({self.text!r})"


def parse_expression(text):
    """Compile ``text`` into a callable; raises ExpressionError on bad input."""
    if not isinstance(text, str):
        raise ExpressionError(f"expected an expression string, got {type(text).__name__}")
    if not text.strip():
        raise ExpressionError("empty expression")
    return Expression(text)
