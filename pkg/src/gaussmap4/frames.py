"""Darboux frames and connection forms.

Every quantity is carried as a jet so that derivatives of the frame (and of
anything built from it) come out exactly.  With chart jets of order n the frame
vectors are jets of order n - 1 and the connection-form values have order n - 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotImmersed
from .jets import Jet2, jet_cos, jet_sin, jet_sqrt

PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def vdot(a, b):
    out = a[0] * b[0]
    for i in range(1, len(a)):
        out = out + a[i] * b[i]
    return out


def vscale(a, s):
    return [x * s for x in a]


def vsub(a, b):
    return [x - y for x, y in zip(a, b)]


def vadd(a, b):
    return [x + y for x, y in zip(a, b)]


def vtrunc(a, order):
    return [x.truncate(order) for x in a]


def vvalue(a):
    return np.stack([x.value for x in a])


def det4(rows):
    """Determinant of a 4x4 matrix whose rows are lists of jets (or arrays)."""
    m = rows
    def d2(a, b, c, d):
        return a * d - b * c
    # Laplace expansion along the 2x2 minors of the first two rows
    total = 0
    cols = range(4)
    for (i, j) in PAIRS:
        k, l = [c for c in cols if c not in (i, j)]
        sign = (-1) ** (i + j + 1)
        term = d2(m[0][i], m[0][j], m[1][i], m[1][j]) * d2(m[2][k], m[2][l], m[3][k], m[3][l])
        total = total + term * sign
    return total


@dataclass
class DarbouxFrame:
    """Positive orthonormal frame (e1, e2 tangent; e3, e4 normal) along a chart.

    ``e`` holds four vectors of four jets.  ``xu``/``xv`` are the coordinate
    tangent vectors, truncated to the frame order, kept for the dual forms.
    """

    e: list
    xu: list
    xv: list
    order: int

    @property
    def shape(self):
        return self.e[0][0].shape

    def matrix(self):
        """Frame values as an array (..., 4 vectors, 4 components)."""
        return np.moveaxis(np.stack([vvalue(ei) for ei in self.e]), (0, 1), (-2, -1))


def _normalize(w):
    n2 = vdot(w, w)
    if np.any(~(n2.value > 0)):
        raise NotImmersed("zero vector in frame construction")
    inv = 1.0 / jet_sqrt(n2)
    return vscale(w, inv)


def _monge_frame(a10, a01, b10, b01):
    # closed-form frame for charts of the form (u, v, a(u,v), b(u,v))
    one = a10 * 0.0 + 1.0
    zero = a10 * 0.0
    n1 = 1.0 + a10 * a10 + b10 * b10
    m = 1.0 + a10 * a10 + a01 * a01
    cross = a01 * b10 - a10 * b01
    h = jet_sqrt(1.0 + a10 * a10 + a01 * a01 + b10 * b10 + b01 * b01 + cross * cross)
    s1 = 1.0 / jet_sqrt(n1)
    e1 = [one * s1, zero, a10 * s1, b10 * s1]
    s2 = 1.0 / (h * jet_sqrt(n1))
    e2 = [
        -(a10 * a01 + b10 * b01) * s2,
        n1 * s2,
        (a01 - a10 * b10 * b01 + a01 * b10 * b10) * s2,
        (b01 - a10 * a01 * b10 + b01 * a10 * a10) * s2,
    ]
    s3 = 1.0 / jet_sqrt(m)
    e3 = [-a10 * s3, -a01 * s3, one * s3, zero]
    s4 = 1.0 / (h * jet_sqrt(m))
    e4 = [
        (a01 * a10 * b01 - b10 * (1.0 + a01 * a01)) * s4,
        (a01 * a10 * b10 - b01 * (1.0 + a10 * a10)) * s4,
        (-a01 * b01 - a10 * b10) * s4,
        m * s4,
    ]
    return [e1, e2, e3, e4], h


def _gram_schmidt_frame(xu, xv):
    e1 = _normalize(xu)
    e2 = _normalize(vsub(xv, vscale(e1, vdot(xv, e1))))
    # the two standard basis vectors least aligned with the tangent plane, per point
    v1, v2 = vvalue(e1), vvalue(e2)
    align = v1 ** 2 + v2 ** 2
    order = np.argsort(align, axis=0, kind="stable")
    p = np.minimum(order[0], order[1])
    q = np.maximum(order[0], order[1])
    shape = xu[0].shape
    zero = xu[0] * 0.0
    normals = []
    for idx in (p, q):
        w = [zero + (idx == c).astype(float) for c in range(4)]
        for b in [e1, e2] + normals:
            w = vsub(w, vscale(b, vdot(w, b)))
        normals.append(_normalize(w))
    e3, e4 = normals
    frame = [e1, e2, e3, e4]
    sign = np.sign(det4([vvalue(x) for x in frame]))
    sign = np.where(sign == 0, 1.0, sign).reshape(shape)
    e4 = vscale(e4, sign)
    return [e1, e2, e3, e4]


def darboux_frame(chart, u, v, order, params=None, method="auto"):
    """Darboux frame of ``chart`` at (u, v) from order-``order`` chart jets.

    ``method`` is "monge" (closed form, needs x = u, y = v), "gram-schmidt",
    or "auto" (closed form when the chart is a graph over the uv-plane).
    The orientation flag of the chart is applied by swapping the roles of u and v
    when it is -1, so (e1, e2) always follows the surface orientation.
    """
    X = chart.jets(u, v, order, params)
    return frame_from_jets(X, method if method != "auto" else ("monge" if chart.is_monge else "gram-schmidt"),
                           orientation=getattr(chart, "orientation", 1))


def frame_from_jets(X, method="gram-schmidt", orientation=1):
    order = X[0].order
    if order < 1:
        raise ValueError("frame construction needs chart jets of order >= 1")
    xu = [x.partial(0) for x in X]
    xv = [x.partial(1) for x in X]
    if method == "monge" and orientation == 1:
        a, b = X[2], X[3]
        e, _ = _monge_frame(a.partial(0), a.partial(1), b.partial(0), b.partial(1))
    else:
        if orientation == -1:
            e = _gram_schmidt_frame(xv, xu)
        else:
            e = _gram_schmidt_frame(xu, xv)
    return DarbouxFrame(e, xu, xv, order - 1)


def monge_h(chart, u, v, params=None):
    """The normalizing quantity h of a Monge chart (sqrt of the Gram determinant)."""
    X = chart.jets(u, v, 1, params)
    a10, a01, b10, b01 = X[2].c[1], X[2].c[2], X[3].c[1], X[3].c[2]
    return np.sqrt(1 + a10 ** 2 + a01 ** 2 + b10 ** 2 + b01 ** 2 + (a01 * b10 - a10 * b01) ** 2)


@dataclass
class ConnectionForms:
    """Values of the connection forms on the coordinate directions.

    ``omega[(i, j)]`` is a pair of jets (omega_i^j(d/du), omega_i^j(d/dv)) for
    0-based indices i < j; ``theta`` is the 2x2 matrix theta_k(d/d x_a).
    ``inv`` is the inverse of ``theta``; column k gives e_k in the coordinate basis.
    """

    omega: dict
    theta: list
    inv: list
    order: int

    def form(self, i, j):
        if i == j:
            z = self.theta[0][0] * 0.0
            return (z, z)
        if i < j:
            return self.omega[(i, j)]
        a, b = self.omega[(j, i)]
        return (-a, -b)

    def on_frame(self, i, j, k):
        """omega_i^j(e_k), 0-based indices, as a jet."""
        f = self.form(i, j)
        return f[0] * self.inv[0][k] + f[1] * self.inv[1][k]

    def values(self, i, j):
        a, b = self.form(i, j)
        return np.stack([a.value, b.value])


def connection_forms(frame):
    """omega_i^j(d_a) = <d_a e_i, e_j> and theta_k(d_a) = <x_a, e_k>."""
    if frame.order < 1:
        raise ValueError("connection forms need frame jets of order >= 1")
    n = frame.order - 1
    e = frame.e
    de = [[[x.partial(a) for x in e[i]] for a in (0, 1)] for i in range(4)]
    e_low = [vtrunc(ei, n) for ei in e]
    omega = {}
    for i, j in PAIRS:
        omega[(i, j)] = (vdot(de[i][0], e_low[j]), vdot(de[i][1], e_low[j]))
    xu, xv = vtrunc(frame.xu, n), vtrunc(frame.xv, n)
    theta = [[vdot(xu, e_low[k]), vdot(xv, e_low[k])] for k in (0, 1)]
    det = theta[0][0] * theta[1][1] - theta[0][1] * theta[1][0]
    idet = 1.0 / det
    inv = [[theta[1][1] * idet, -theta[0][1] * idet], [-theta[1][0] * idet, theta[0][0] * idet]]
    return ConnectionForms(omega, theta, inv, n)


def rotate_frame(frame, alpha, beta):
    """Frame (A e1, A e2, A e3, A e4) with A the block rotation by angles alpha, beta.

    A acts on the frame as a row-vector of vectors:
    e1' = cos(a) e1 - sin(a) e2, e2' = sin(a) e1 + cos(a) e2, and likewise with
    beta on (e3, e4).  ``alpha``/``beta`` may be numbers, arrays or jets (for
    position-dependent rotations).
    """
    def cs(t):
        if isinstance(t, Jet2):
            t = t.truncate(frame.order)
            return jet_cos(t), jet_sin(t)
        return np.cos(t), np.sin(t)
    ca, sa = cs(alpha)
    cb, sb = cs(beta)
    e1, e2, e3, e4 = frame.e
    f1 = vsub(vscale(e1, ca), vscale(e2, sa))
    f2 = vadd(vscale(e1, sa), vscale(e2, ca))
    f3 = vsub(vscale(e3, cb), vscale(e4, sb))
    f4 = vadd(vscale(e3, sb), vscale(e4, cb))
    return DarbouxFrame([f1, f2, f3, f4], frame.xu, frame.xv, frame.order)


def pfaffian_kernel(c1, c2):
    """Common kernel line of two covectors (each shape (2, ...)) that are dependent.

    The kernel is taken from the covector of larger norm, ties going to ``c1``.
    Returns unit vectors (2, ...) normalized so the first nonzero entry is positive.
    """
    c1, c2 = np.asarray(c1, float), np.asarray(c2, float)
    n1 = np.hypot(c1[0], c1[1])
    n2 = np.hypot(c2[0], c2[1])
    c = np.where(n1 >= n2, c1, c2)
    k = np.stack([-c[1], c[0]])
    return normalize_direction(k)


def normalize_direction(k):
    k = np.asarray(k, float)
    n = np.hypot(k[0], k[1])
    n = np.where(n == 0, 1.0, n)
    k = k / n
    flip = (k[0] < 0) | ((k[0] == 0) & (k[1] < 0))
    return np.where(flip, -k, k)


def orthonormality_defect(frame):
    M = frame.matrix()
    G = M @ np.swapaxes(M, -1, -2)
    return np.max(np.abs(G - np.eye(4)), axis=(-2, -1))
