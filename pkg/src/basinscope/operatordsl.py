"""A small expression language for rational operators in ``z`` and ``lam``.

Grammar (whitespace is insignificant, no implicit multiplication)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' UINT)?
    atom   := NUMBER | 'z' | 'lam' | '(' expr ')'

NUMBER is a decimal with optional fraction and an optional trailing ``i``
marking a pure-imaginary literal. Unary minus binds looser than ``^``, so
``-z^4`` is ``-(z^4)``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .errors import BasinscopeError, DegreeOverflow
from .numcore import Polynomial
from .rational import RationalOperator

MAX_DEGREE = 64


class ExprSyntaxError(BasinscopeError):
    def __init__(self, message, line, column, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(sorted(expected))
        where = f"line {line}, column {column}"
        exp = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{where}: {message}{exp}")


class ExponentError(ExprSyntaxError):
    pass


# AST


@dataclass(frozen=True)
class Num:
    value: complex


@dataclass(frozen=True)
class Var:
    name: str  # "z" or "lam"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Div:
    left: "Expr"
    right: "Expr"
    span: tuple = (0, 0)  # source offsets of the whole quotient


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


Expr = Union[Num, Var, Neg, Add, Sub, Mul, Div, Pow]


# tokenizer

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d+)?i?)
  | (?P<name>[A-Za-z_]\w*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # number, name, op, end
    text: str
    pos: int


def _line_col(source: str, pos: int):
    line = source.count("\n", 0, pos) + 1
    col = pos - (source.rfind("\n", 0, pos) + 1) + 1
    return line, col


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            line, col = _line_col(source, pos)
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        if kind != "ws":
            text = m.group()
            if kind == "name" and text not in ("z", "lam"):
                line, col = _line_col(source, pos)
                raise ExprSyntaxError(f"unknown name {text!r}", line, col, {"z", "lam"})
            tokens.append(Token(kind, text, pos))
        pos = m.end()
    tokens.append(Token("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def fail(self, message, expected=(), cls=ExprSyntaxError, tok=None):
        tok = tok or self.tok
        line, col = _line_col(self.source, tok.pos)
        raise cls(message, line, col, expected)

    def at(self, text) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != "end":
            self.fail(f"unexpected {self.tok.text!r}", {"+", "-", "*", "/", "^", "end of input"})
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self) -> Expr:
        start = self.tok.pos
        node = self.unary()
        while self.at("*") or self.at("/"):
            op = self.tok.text
            self.i += 1
            rhs = self.unary()
            if op == "*":
                node = Mul(node, rhs)
            else:
                node = Div(node, rhs, (start, self.tok.pos))
        return node

    def unary(self) -> Expr:
        if self.at("-"):
            self.i += 1
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if not self.at("^"):
            return base
        self.i += 1
        tok = self.tok
        if tok.kind == "number" and re.fullmatch(r"\d+", tok.text):
            self.i += 1
            return Pow(base, int(tok.text))
        if tok.kind == "number" or self.at("-") or self.at("("):
            self.fail("exponent must be a nonnegative integer literal", {"integer"}, ExponentError)
        self.fail(f"unexpected {tok.text or 'end of input'!r} after '^'", {"integer"})

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "number":
            self.i += 1
            if tok.text.endswith("i"):
                return Num(complex(0, float(tok.text[:-1])))
            return Num(complex(float(tok.text)))
        if tok.kind == "name":
            self.i += 1
            return Var(tok.text)
        if self.at("("):
            self.i += 1
            node = self.expr()
            if not self.at(")"):
                self.fail("unclosed '('", {")"})
            self.i += 1
            return node
        what = "end of input" if tok.kind == "end" else repr(tok.text)
        self.fail(f"unexpected {what}", {"number", "z", "lam", "(", "-"})


def parse(source: str) -> Expr:
    return _Parser(source).parse()


# evaluation and differentiation


def evaluate(node: Expr, z: complex, lam: complex = 0j) -> complex:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return z if node.name == "z" else lam
    if isinstance(node, Neg):
        return -evaluate(node.operand, z, lam)
    if isinstance(node, Pow):
        return evaluate(node.base, z, lam) ** node.exponent
    a = evaluate(node.left, z, lam)
    b = evaluate(node.right, z, lam)
    if isinstance(node, Add):
        return a + b
    if isinstance(node, Sub):
        return a - b
    if isinstance(node, Mul):
        return a * b
    return a / b


_ZERO, _ONE = Num(0j), Num(1 + 0j)


def _is(node, v):
    return isinstance(node, Num) and node.value == v


def _add(a, b):
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    return Add(a, b)


def _sub(a, b):
    if _is(b, 0):
        return a
    if _is(a, 0):
        return Neg(b)
    return Sub(a, b)


def _mul(a, b):
    if _is(a, 0) or _is(b, 0):
        return _ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    return Mul(a, b)


def symbolic_derivative(node: Expr) -> Expr:
    """d/dz by the sum, product, quotient and power rules."""
    if isinstance(node, (Num,)):
        return _ZERO
    if isinstance(node, Var):
        return _ONE if node.name == "z" else _ZERO
    if isinstance(node, Neg):
        d = symbolic_derivative(node.operand)
        return _ZERO if _is(d, 0) else Neg(d)
    if isinstance(node, Add):
        return _add(symbolic_derivative(node.left), symbolic_derivative(node.right))
    if isinstance(node, Sub):
        return _sub(symbolic_derivative(node.left), symbolic_derivative(node.right))
    if isinstance(node, Mul):
        u, v = node.left, node.right
        return _add(_mul(symbolic_derivative(u), v), _mul(u, symbolic_derivative(v)))
    if isinstance(node, Div):
        u, v = node.left, node.right
        top = _sub(_mul(symbolic_derivative(u), v), _mul(u, symbolic_derivative(v)))
        if _is(top, 0):
            return _ZERO
        return Div(top, Pow(v, 2), node.span)
    if isinstance(node, Pow):
        n = node.exponent
        if n == 0:
            return _ZERO
        du = symbolic_derivative(node.base)
        lower = node.base if n == 2 else Pow(node.base, n - 1)
        if n == 1:
            return du
        return _mul(_mul(Num(complex(n)), lower), du)
    raise TypeError(f"not an expression node: {node!r}")


# compilation to a polynomial pair


def _guard(p: Polynomial) -> Polynomial:
    if p.degree > MAX_DEGREE:
        raise DegreeOverflow(f"intermediate degree {p.degree} exceeds {MAX_DEGREE}")
    return p


def _pair(node: Expr, lam: complex):
    one = Polynomial((1,))
    if isinstance(node, Num):
        return Polynomial((node.value,)), one
    if isinstance(node, Var):
        return (Polynomial((0, 1)), one) if node.name == "z" else (Polynomial((lam,)), one)
    if isinstance(node, Neg):
        n, d = _pair(node.operand, lam)
        return -n, d
    if isinstance(node, Pow):
        n, d = _pair(node.base, lam)
        return _guard(n**node.exponent), _guard(d**node.exponent)
    an, ad = _pair(node.left, lam)
    bn, bd = _pair(node.right, lam)
    if isinstance(node, (Add, Sub)):
        if ad == bd:
            top = an + bn if isinstance(node, Add) else an - bn
            return top, ad
        top = an * bd + bn * ad if isinstance(node, Add) else an * bd - bn * ad
        return _guard(top), _guard(ad * bd)
    if isinstance(node, Mul):
        return _guard(an * bn), _guard(ad * bd)
    if bn.is_zero:
        raise ZeroDivisionError(f"division by an identically zero expression at offset {node.span[0]}")
    return _guard(an * bd), _guard(ad * bn)


def compile_operator(node: Expr, lam: complex = 0j, label: str = "") -> RationalOperator:
    """Substitute ``lam`` and normalise the tree to one num/den pair."""
    num, den = _pair(node, complex(lam))
    if den.is_zero:
        raise ZeroDivisionError("denominator is identically zero")
    # make the denominator's leading coefficient 1 so coefficients stay tame
    lead = den.lead
    num = Polynomial(tuple(c / lead for c in num.coeffs))
    den = Polynomial(tuple(c / lead for c in den.coeffs))
    return RationalOperator.from_pair(num, den, label or "custom")


def compile_source(source: str, lam: complex = 0j) -> RationalOperator:
    return compile_operator(parse(source), lam, label=source)


KIM_SOURCE = "-z^4*(1-lam+4*z+6*z^2+4*z^3+z^4)/(-1-4*z-6*z^2-4*z^3+(-1+lam)*z^4)"
