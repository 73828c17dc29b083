"""Tokenizer and recursive-descent parser for ODE expressions.

Grammar (``^`` and ``**`` are right associative)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := NUMBER | NAME | 'y' PRIMES | 'D' '(' 'y' ',' INT ')'
            | 'sqrt' '(' expr ')' | '(' expr ')'
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Union


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 1, col: int = 1):
        super().__init__(f"line {line}, column {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


# -- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Name:
    name: str
    pos: tuple = (1, 1)


@dataclass(frozen=True)
class Deriv:
    order: int


@dataclass(frozen=True)
class Sqrt:
    arg: "Node"


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


Node = Union[Num, Name, Deriv, Sqrt, Neg, BinOp]


def summands(node: Node) -> list[Node]:
    """Top-level summands of an expression (subtraction folded into Neg)."""
    if isinstance(node, BinOp) and node.op == "+":
        return summands(node.left) + summands(node.right)
    if isinstance(node, BinOp) and node.op == "-":
        return summands(node.left) + [Neg(s) for s in summands(node.right)]
    return [node]


# -- tokens ----------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<pow>\*\*)
  | (?P<op>[-+*/^(),'])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, line0: int = 1, col0: int = 1) -> list[Token]:
    out = []
    pos = 0
    line, col = line0, col0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind != "ws":
            if kind == "pow":
                kind, s = "op", "^"
            out.append(Token(kind, s, line, col))
        for ch in m.group():
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        pos = m.end()
    out.append(Token("end", "", line, col))
    return out


class _Parser:
    def __init__(self, tokens: list[Token], known: Optional[set]):
        self.toks = tokens
        self.i = 0
        self.known = known

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")

    def parse(self) -> Node:
        if self.tok.kind == "end":
            self.error("empty expression")
        node = self.expr()
        if self.tok.kind != "end":
            self.error(f"unexpected {self.tok.text!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.accept("-"):
            return Neg(self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.accept("^"):
            if self.tok.kind == "op" and self.tok.text == "^":
                self.error("unexpected '^'")
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(Fraction(tok.text))
        if tok.kind == "name":
            self.i += 1
            if tok.text == "y":
                order = 0
                while self.accept("'"):
                    order += 1
                return Deriv(order)
            if tok.text == "D":
                self.expect("(")
                if not (self.tok.kind == "name" and self.tok.text == "y"):
                    self.error("derivative order mismatch: D() applies to y only")
                self.i += 1
                self.expect(",")
                if self.tok.kind != "num" or not self.tok.text.isdigit():
                    self.error("derivative order mismatch: order must be a nonnegative integer")
                order = int(self.tok.text)
                self.i += 1
                self.expect(")")
                return Deriv(order)
            if tok.text == "sqrt":
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Sqrt(arg)
            if self.known is not None and tok.text not in self.known:
                self.error(f"unknown symbol {tok.text!r}", tok)
            if self.tok.kind == "op" and self.tok.text == "'":
                self.error(f"derivative order mismatch: {tok.text!r} is not the unknown function")
            return Name(tok.text, (tok.line, tok.col))
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        found = tok.text or "end of input"
        self.error(f"unexpected {found!r}")


def parse_ode(text: str, known: Optional[Iterable[str]] = None, line0: int = 1, col0: int = 1) -> Node:
    """Parse one ODE expression into an AST.

    ``known`` restricts identifiers to declared parameter names.
    """
    return _Parser(tokenize(text, line0, col0), set(known) if known is not None else None).parse()
