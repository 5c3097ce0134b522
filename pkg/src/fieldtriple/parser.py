"""Recursive-descent parser for the model expression grammar.

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' ['-'] integer)?
    base   := number | ident | func '(' expr ')' | '(' expr ')' | '-' factor
    func   := sin | cos | exp | log | sqrt

Numbers are integers or decimal fractions and are kept as exact rationals.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional

from .errors import ArityError, ExprSyntaxError, UnknownSymbol
from .expr import FUNCTIONS, Const, Expr, Func, Pow, Symbol

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<num>\d+\.\d*|\.\d+|\d+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
)


class Token(NamedTuple):
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[Token]:
    tokens, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise _error(text, pos, f"unexpected character {text[pos]!r}")
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


def _error(text: str, pos: int, message: str) -> ExprSyntaxError:
    line = text.count("\n", 0, pos) + 1
    column = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return ExprSyntaxError(message, line, column, text)


class _Parser:
    def __init__(self, text: str, symbols: Optional[set]):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.symbols = symbols

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if self.tok.text != text:
            found = "end of input" if self.tok.kind == "end" else repr(self.tok.text)
            raise _error(self.text, self.tok.pos, f"expected {text!r}, found {found}")
        return self.advance()

    def parse(self) -> Expr:
        if self.tok.kind == "end":
            raise _error(self.text, 0, "empty expression")
        e = self.expr()
        if self.tok.kind != "end":
            raise _error(self.text, self.tok.pos, f"unexpected {self.tok.text!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.tok.text in ("*", "/"):
            op = self.advance().text
            rhs = self.factor()
            e = e * rhs if op == "*" else e / rhs
        return e

    def factor(self) -> Expr:
        if self.tok.text == "-":
            self.advance()
            return -self.factor()
        b = self.base()
        if self.tok.text == "^":
            self.advance()
            sign = 1
            if self.tok.text == "-":
                self.advance()
                sign = -1
            t = self.tok
            if t.kind != "num" or not t.text.isdigit():
                raise _error(self.text, t.pos, "exponent must be an integer literal")
            self.advance()
            return Pow(b, sign * int(t.text))
        return b

    def base(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Const(Fraction(t.text))
        if t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            self.advance()
            if t.text in FUNCTIONS:
                if self.tok.text != "(":
                    raise ArityError(f"function {t.text!r} needs exactly one argument")
                self.advance()
                if self.tok.text == ")":
                    raise ArityError(f"function {t.text!r} needs exactly one argument")
                arg = self.expr()
                if self.tok.text == ",":
                    raise ArityError(f"function {t.text!r} takes exactly one argument")
                self.expect(")")
                return Func(t.text, arg)
            if self.tok.text == "(":
                raise UnknownSymbol(f"unknown function {t.text!r}")
            if self.symbols is not None and t.text not in self.symbols:
                raise UnknownSymbol(f"unknown symbol {t.text!r}")
            return Symbol(t.text)
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise _error(self.text, t.pos, f"unexpected {found}")


def parse_expr(text: str, symbols: Optional[Iterable[str]] = None) -> Expr:
    """Parse ``text``; when ``symbols`` is given every identifier must be in it."""
    allowed = set(symbols) if symbols is not None else None
    return _Parser(text, allowed).parse()
