"""Truncated Taylor polynomials in two variables.

A :class:`Jet2` of order ``n`` stores the Taylor-normalized coefficients

    c_ij = (d^(i+j) f / du^i dv^j) / (i! j!),   i + j <= n,

of a function expanded around an implicit base point.  Coefficients are kept
densely in graded order ``(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...`` so the
coefficient array has ``(n+1)(n+2)/2`` leading entries.  Any trailing axes are
a batch dimension: every operation acts elementwise over the batch, which is
how grid scans evaluate a few hundred thousand points at once.
"""

from __future__ import annotations

from functools import lru_cache
from math import factorial

import numpy as np

from .errors import DegenerateJet, DomainError, OrderUnderflow

MAX_ORDER = 4


def ncoef(order):
    return (order + 1) * (order + 2) // 2


def index(i, j):
    d = i + j
    return d * (d + 1) // 2 + j


@lru_cache(maxsize=None)
def monomials(order):
    """List of exponent pairs (i, j) in storage order."""
    return tuple((d - j, j) for d in range(order + 1) for j in range(d + 1))


@lru_cache(maxsize=None)
def _mul_table(order):
    # for each left index a: the right indices b and output indices k with k = a + b
    mons = monomials(order)
    table = []
    for a, (i, j) in enumerate(mons):
        bs, ks = [], []
        for b, (p, q) in enumerate(mons):
            if i + j + p + q <= order:
                bs.append(b)
                ks.append(index(i + p, j + q))
        table.append((a, np.array(bs), np.array(ks)))
    return table


@lru_cache(maxsize=None)
def _partial_table(order, axis):
    src, dst, fac = [], [], []
    for k, (i, j) in enumerate(monomials(order)):
        e = i if axis == 0 else j
        if e == 0:
            continue
        src.append(k)
        dst.append(index(i - 1, j) if axis == 0 else index(i, j - 1))
        fac.append(float(e))
    return np.array(src, dtype=int), np.array(dst, dtype=int), np.array(fac)


def _as_batch(x):
    return np.asarray(x, dtype=float)


def _align(a, b):
    # pad batch axes so that coefficient arrays broadcast like their batches do
    da, db = a.ndim - 1, b.ndim - 1
    if da < db:
        a = a.reshape(a.shape[:1] + (1,) * (db - da) + a.shape[1:])
    elif db < da:
        b = b.reshape(b.shape[:1] + (1,) * (da - db) + b.shape[1:])
    return a, b


class Jet2:
    """Order-``order`` two-variable jet with optional batch axes."""

    __slots__ = ("c", "order")
    __array_priority__ = 100

    def __init__(self, coeffs, order):
        c = np.asarray(coeffs, dtype=float)
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"jet order must be in 0..{MAX_ORDER}, got {order}")
        if c.ndim == 0 or c.shape[0] != ncoef(order):
            raise ValueError(
                f"order {order} jet needs {ncoef(order)} coefficients, got shape {c.shape}"
            )
        self.c = c
        self.order = order

    # construction
    @classmethod
    def constant(cls, value, order):
        value = _as_batch(value)
        c = np.zeros((ncoef(order),) + value.shape)
        c[0] = value
        return cls(c, order)

    @classmethod
    def variable(cls, value, axis, order):
        """The coordinate function u (axis 0) or v (axis 1) expanded at ``value``."""
        value = _as_batch(value)
        c = np.zeros((ncoef(order),) + value.shape)
        c[0] = value
        if order >= 1:
            c[1 + axis] = 1.0
        return cls(c, order)

    @classmethod
    def from_derivatives(cls, derivs, order):
        """Build from raw partial derivatives ``{(i, j): f_ij}``; missing entries are 0."""
        shape = np.shape(next(iter(derivs.values()))) if derivs else ()
        c = np.zeros((ncoef(order),) + shape)
        for (i, j), val in derivs.items():
            if i + j <= order:
                c[index(i, j)] = np.asarray(val, float) / (factorial(i) * factorial(j))
        return cls(c, order)

    # access
    @property
    def value(self):
        return self.c[0]

    @property
    def shape(self):
        return self.c.shape[1:]

    def coeff(self, i, j):
        return self.c[index(i, j)]

    def derivative(self, i, j):
        """Raw partial derivative d^(i+j) f / du^i dv^j at the base point."""
        return self.c[index(i, j)] * (factorial(i) * factorial(j))

    def gradient(self):
        return np.stack([self.c[1], self.c[2]])

    def truncate(self, order):
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        return Jet2(self.c[: ncoef(order)], order)

    def __getitem__(self, item):
        if not isinstance(item, tuple):
            item = (item,)
        return Jet2(self.c[(slice(None),) + item], self.order)

    def __repr__(self):
        if self.c.ndim == 1:
            terms = ", ".join(
                f"{i}{j}:{x:.6g}" for (i, j), x in zip(monomials(self.order), self.c)
            )
            return f"Jet2(order={self.order}, {{{terms}}})"
        return f"Jet2(order={self.order}, batch={self.shape})"

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, Jet2):
            if other.order != self.order:
                raise ValueError(f"jet order mismatch: {self.order} vs {other.order}")
            return other
        return Jet2.constant(other, self.order)

    def __add__(self, other):
        other = self._coerce(other)
        a, b = _align(self.c, other.c)
        return Jet2(a + b, self.order)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        a, b = _align(self.c, other.c)
        return Jet2(a - b, self.order)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Jet2(-self.c, self.order)

    def __mul__(self, other):
        if not isinstance(other, Jet2):
            return Jet2(self.c * _as_batch(other), self.order)
        other = self._coerce(other)
        x, y = np.broadcast_arrays(*_align(self.c, other.c))
        out = np.zeros(x.shape)
        for a, bs, ks in _mul_table(self.order):
            out[ks] += x[a] * y[bs]
        return Jet2(out, self.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet2):
            return Jet2(self.c / _as_batch(other), self.order)
        return self * self._coerce(other).reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, p):
        return jet_pow(self, p)

    # calculus
    def partial(self, axis):
        """Jet of the partial derivative along u (axis 0) or v (axis 1), one order lower."""
        if self.order < 1:
            raise OrderUnderflow("cannot differentiate an order-0 jet")
        src, dst, fac = _partial_table(self.order, axis)
        out = np.zeros((ncoef(self.order - 1),) + self.shape)
        fac = fac.reshape((-1,) + (1,) * len(self.shape))
        out[dst] = self.c[src] * fac
        return Jet2(out, self.order - 1)

    def compose_univariate(self, taylor):
        """f(self) given ``taylor[k] = f^(k)(c0) / k!`` for k = 0..order."""
        d = Jet2(self.c.copy(), self.order)
        d.c[0] = 0.0
        out = Jet2.constant(taylor[self.order], self.order)
        for k in range(self.order - 1, -1, -1):
            out = out * d
            out.c[0] = out.c[0] + taylor[k]
        return out

    def compose(self, p, q):
        """Substitute jets ``p, q`` for the variables; valid when self is expanded at (p0, q0)."""
        dp = p - p.value
        dq = q - q.value
        out = Jet2.constant(0.0, p.order)
        powers_p = [Jet2.constant(1.0, p.order)]
        powers_q = [Jet2.constant(1.0, p.order)]
        for _ in range(self.order):
            powers_p.append(powers_p[-1] * dp)
            powers_q.append(powers_q[-1] * dq)
        for k, (i, j) in enumerate(monomials(self.order)):
            if i + j > p.order:
                continue
            out = out + powers_p[i] * powers_q[j] * self.c[k]
        return out

    def reciprocal(self):
        c0 = self.c[0]
        if np.any(c0 == 0):
            raise DegenerateJet("division by a jet with zero constant term")
        inv = 1.0 / c0
        taylor = [inv]
        for _ in range(self.order):
            taylor.append(-taylor[-1] * inv)
        return self.compose_univariate(taylor)


# functional interface -------------------------------------------------------

def jet_add(x, y):
    return x + y


def jet_mul(x, y):
    return x * y


def jet_div(x, y):
    return x / y


def jet_partial(x, wrt):
    axis = {"u": 0, "v": 1, 0: 0, 1: 1}[wrt]
    return x.partial(axis)


def jet_sqrt(x):
    c0 = x.c[0]
    if np.any(~(c0 > 0)):
        raise DomainError("sqrt of a jet with non-positive constant term")
    return jet_pow(x, 0.5)


def jet_pow(x, p):
    """x**p.  Integer exponents use exact products; other exponents need x(0) > 0."""
    if float(p).is_integer():
        p = int(p)
        if p < 0:
            return jet_pow(x.reciprocal(), -p)
        out = Jet2.constant(np.ones(x.shape), x.order)
        base = x
        while p:
            if p & 1:
                out = out * base
            p >>= 1
            if p:
                base = base * base
        return out
    c0 = x.c[0]
    if np.any(~(c0 > 0)):
        raise DomainError(f"non-integer power {p} of a jet with non-positive constant term")
    taylor = [_gbinom(p, k) * c0 ** (p - k) for k in range(x.order + 1)]
    return x.compose_univariate(taylor)


def _gbinom(p, k):
    out = 1.0
    for m in range(k):
        out *= (p - m) / (m + 1)
    return out


def jet_sin(x):
    s, c = np.sin(x.c[0]), np.cos(x.c[0])
    cycle = [s, c, -s, -c]
    taylor = [cycle[k % 4] / factorial(k) for k in range(x.order + 1)]
    return x.compose_univariate(taylor)


def jet_cos(x):
    s, c = np.sin(x.c[0]), np.cos(x.c[0])
    cycle = [c, -s, -c, s]
    taylor = [cycle[k % 4] / factorial(k) for k in range(x.order + 1)]
    return x.compose_univariate(taylor)


def polynomial_jet(poly, order, u0=0.0, v0=0.0):
    """Jet at (u0, v0) of the polynomial ``{(i, j): coefficient of u^i v^j}``."""
    u = Jet2.variable(u0, 0, order)
    v = Jet2.variable(v0, 1, order)
    out = Jet2.constant(np.zeros(np.shape(u0)), order)
    for (i, j), a in poly.items():
        out = out + jet_pow(u, i) * jet_pow(v, j) * a
    return out

