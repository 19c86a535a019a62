"""A small expression language for chart coordinate functions of (u, v).

Grammar (highest precedence last)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ("^" ["-"] INTEGER)?
    primary := NUMBER | NAME | FUNC "(" expr ")" | "(" expr ")"

``NAME`` is ``u``, ``v``, the constant ``pi`` or a parameter whose value is
supplied at evaluation time.  ``FUNC`` is one of ``sqrt``, ``sin``, ``cos``.
Exponents are integer literals, so ``-u^2`` means ``-(u^2)`` and ``u^-1`` is
``1/u``.  Angles are in radians.

Expressions evaluate either on floats / numpy arrays (:func:`evaluate`) or on
:class:`~gaussmap4.jets.Jet2` values (:func:`eval_jet`); both go through the
same tree walk, so the two agree at order 0 by construction.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, ParseError, UnknownIdentifier
from .jets import Jet2, jet_cos, jet_pow, jet_sin, jet_sqrt

FUNCTIONS = ("sqrt", "sin", "cos")
CONSTANTS = {"pi": math.pi}
VARIABLES = ("u", "v")


# AST ------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Param, Neg, BinOp, Pow, Call]


# tokenizer ------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(src, line0=1, col0=1):
    toks = []
    pos, line, col = 0, line0, col0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, col)
        text = m.group()
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    toks.append(_Tok("end", "", line, col))
    return toks


class _Parser:
    def __init__(self, src, known, line0, col0):
        self.toks = _tokenize(src, line0, col0)
        self.i = 0
        self.known = known

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        tok = self.take()
        if tok.text != text:
            what = tok.text or "end of input"
            raise ParseError(f"expected {text!r}, found {what!r}", tok.line, tok.col)
        return tok

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected {tok.text!r}", tok.line, tok.col)
        return e

    def expr(self):
        e = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.take().text
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        if self.peek().text == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek().text != "^":
            return base
        self.take()
        sign = 1
        if self.peek().text == "-":
            self.take()
            sign = -1
        tok = self.take()
        if tok.kind != "num" or not tok.text.isdigit():
            raise ParseError("exponent must be an integer literal", tok.line, tok.col)
        if self.peek().text == "^":
            tok = self.peek()
            raise ParseError("chained '^' needs parentheses", tok.line, tok.col)
        return Pow(base, sign * int(tok.text))

    def primary(self):
        tok = self.take()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "name":
            if self.peek().text == "(":
                if tok.text not in FUNCTIONS:
                    raise UnknownIdentifier(f"unknown function {tok.text!r}", tok.line, tok.col)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(tok.text, arg)
            if tok.text in FUNCTIONS:
                raise ParseError(f"function {tok.text!r} needs an argument", tok.line, tok.col)
            if tok.text in VARIABLES:
                return Var(tok.text)
            if self.known is not None and tok.text not in self.known and tok.text not in CONSTANTS:
                raise UnknownIdentifier(f"unknown identifier {tok.text!r}", tok.line, tok.col)
            return Param(tok.text)
        what = tok.text or "end of input"
        raise ParseError(f"unexpected {what!r}", tok.line, tok.col)


def parse(src, params=None, line=1, column=1):
    """Parse ``src`` into an :data:`Expr`.

    If ``params`` (any container of names) is given, identifiers other than
    u, v, pi and those names are rejected with :class:`UnknownIdentifier`.
    ``line``/``column`` offset the reported error positions, which lets a file
    loader report locations relative to the whole file.
    """
    return _Parser(src, params, line, column).parse()


# printing -------------------------------------------------------------------

def _prec(e):
    if isinstance(e, BinOp):
        return 1 if e.op in "+-" else 2
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Num) and (e.value < 0 or math.copysign(1.0, e.value) < 0):
        return 3
    if isinstance(e, Pow):
        return 4
    return 5


def _num_text(x):
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def to_source(e):
    """Render an expression; ``parse(to_source(e)) == e`` for parsed expressions."""
    if isinstance(e, Num):
        return _num_text(e.value)
    if isinstance(e, (Var, Param)):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_source(e.arg)})"
    if isinstance(e, Neg):
        inner = to_source(e.arg)
        return f"-({inner})" if _prec(e.arg) < 3 else f"-{inner}"
    if isinstance(e, Pow):
        base = to_source(e.base)
        if _prec(e.base) < 5:
            base = f"({base})"
        return f"{base}^{e.exponent}"
    p = _prec(e)
    left, right = to_source(e.left), to_source(e.right)
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {e.op} {right}"


# evaluation -----------------------------------------------------------------

def free_params(e):
    """Names of parameters referenced by ``e`` (excluding built-in constants)."""
    out = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if isinstance(n, Param) and n.name not in CONSTANTS:
            out.add(n.name)
        elif isinstance(n, (Neg, Call)):
            stack.append(n.arg)
        elif isinstance(n, Pow):
            stack.append(n.base)
        elif isinstance(n, BinOp):
            stack.extend((n.left, n.right))
    return out


def _lookup(name, params):
    if params is not None and name in params:
        return params[name]
    if name in CONSTANTS:
        return CONSTANTS[name]
    raise UnknownIdentifier(f"no value for parameter {name!r}")


def _walk(e, u, v, params, ops):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return u if e.name == "u" else v
    if isinstance(e, Param):
        return _lookup(e.name, params)
    if isinstance(e, Neg):
        return -_walk(e.arg, u, v, params, ops)
    if isinstance(e, BinOp):
        a = _walk(e.left, u, v, params, ops)
        b = _walk(e.right, u, v, params, ops)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        return ops["div"](a, b)
    if isinstance(e, Pow):
        return ops["pow"](_walk(e.base, u, v, params, ops), e.exponent)
    if isinstance(e, Call):
        return ops[e.func](_walk(e.arg, u, v, params, ops))
    raise TypeError(f"not an expression node: {e!r}")


def _sdiv(a, b):
    if np.any(np.asarray(b) == 0):
        raise DomainError("division by zero")
    return np.divide(a, b)


def _spow(a, k):
    if k < 0 and np.any(np.asarray(a) == 0):
        raise DomainError("negative power of zero")
    return np.power(np.asarray(a, dtype=float), k)


def _ssqrt(a):
    if np.any(np.asarray(a) < 0):
        raise DomainError("sqrt of a negative number")
    return np.sqrt(a)


_SCALAR_OPS = {"div": _sdiv, "pow": _spow, "sqrt": _ssqrt, "sin": np.sin, "cos": np.cos}


def _jdiv(a, b):
    if isinstance(b, Jet2):
        return a / b
    if np.any(np.asarray(b) == 0):
        raise DomainError("division by zero")
    return a / b


def _lift(f_jet, f_scalar):
    def g(x):
        return f_jet(x) if isinstance(x, Jet2) else f_scalar(x)
    return g


_JET_OPS = {
    "div": _jdiv,
    "pow": lambda a, k: jet_pow(a, k) if isinstance(a, Jet2) else _spow(a, k),
    "sqrt": _lift(jet_sqrt, _ssqrt),
    "sin": _lift(jet_sin, np.sin),
    "cos": _lift(jet_cos, np.cos),
}


def evaluate(e, u, v, params=None):
    """Plain floating point evaluation; ``u`` and ``v`` may be numpy arrays."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    out = _walk(e, u, v, params, _SCALAR_OPS)
    return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(u, v).shape).copy()


def eval_jet(e, u0, v0, order, params=None):
    """Order-``order`` jet of ``e`` expanded at (u0, v0)."""
    u0 = np.asarray(u0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    u0, v0 = np.broadcast_arrays(u0, v0)
    u = Jet2.variable(u0, 0, order)
    v = Jet2.variable(v0, 1, order)
    out = _walk(e, u, v, params, _JET_OPS)
    if not isinstance(out, Jet2):
        out = Jet2.constant(np.broadcast_to(np.asarray(out, float), u0.shape), order)
    return out


# symbolic derivative (used as an oracle for the jet engine) -----------------

def differentiate(e, var):
    """Symbolic partial derivative of ``e`` with respect to ``"u"`` or ``"v"``."""
    if isinstance(e, (Num, Param)):
        return Num(0.0)
    if isinstance(e, Var):
        return Num(1.0 if e.name == var else 0.0)
    if isinstance(e, Neg):
        return Neg(differentiate(e.arg, var))
    if isinstance(e, BinOp):
        da, db = differentiate(e.left, var), differentiate(e.right, var)
        if e.op in "+-":
            return BinOp(e.op, da, db)
        if e.op == "*":
            return BinOp("+", BinOp("*", da, e.right), BinOp("*", e.left, db))
        num = BinOp("-", BinOp("*", da, e.right), BinOp("*", e.left, db))
        return BinOp("/", num, Pow(e.right, 2))
    if isinstance(e, Pow):
        if e.exponent == 0:
            return Num(0.0)
        inner = Pow(e.base, e.exponent - 1) if e.exponent != 1 else Num(1.0)
        return BinOp("*", BinOp("*", Num(float(e.exponent)), inner), differentiate(e.base, var))
    if isinstance(e, Call):
        d = differentiate(e.arg, var)
        if e.func == "sqrt":
            return BinOp("/", d, BinOp("*", Num(2.0), e))
        if e.func == "sin":
            return BinOp("*", Call("cos", e.arg), d)
        return Neg(BinOp("*", Call("sin", e.arg), d))
    raise TypeError(f"not an expression node: {e!r}")


def substitute(e, defs):
    """Replace parameters named in ``defs`` (name -> Expr) by their expressions, recursively."""
    if isinstance(e, Param) and e.name in defs:
        return substitute(defs[e.name], defs)
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, defs))
    if isinstance(e, Call):
        return Call(e.func, substitute(e.arg, defs))
    if isinstance(e, Pow):
        return Pow(substitute(e.base, defs), e.exponent)
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, defs), substitute(e.right, defs))
    return e
