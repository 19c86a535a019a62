"""The Gauss map into Gr+(2,4) = S1 x S2 and its two components.

Bivectors are stored in Plucker coordinates ordered (a12, a23, a31, a34, a14, a24).
The components are written in the fixed orthonormal bases

    X1 = (E1^E2 + E3^E4)/sqrt2,  X2 = (E2^E3 + E1^E4)/sqrt2,  X3 = (E3^E1 + E2^E4)/sqrt2,
    Y1 = (E1^E2 - E3^E4)/sqrt2,  Y2 = (E2^E3 - E1^E4)/sqrt2,  Y3 = (E3^E1 - E2^E4)/sqrt2,

so g1 = sum beta_i X_i and g2 = sum gamma_i Y_i, each on a sphere of radius 1/sqrt2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StereoPole
from .frames import vvalue
from .invariants import component_jets, plucker_jets

SQRT2 = np.sqrt(2.0)
RADIUS = 1.0 / SQRT2

NONE = "none"
FULL = "full"


@dataclass
class Bivector:
    """Plucker coordinates (a12, a23, a31, a34, a14, a24), trailing batch axes allowed."""

    alpha: np.ndarray

    def decomposability(self):
        a12, a23, a31, a34, a14, a24 = self.alpha
        return a12 * a34 + a23 * a14 + a31 * a24

    def norm2(self):
        return (self.alpha ** 2).sum(axis=0)

    def beta(self):
        a12, a23, a31, a34, a14, a24 = self.alpha
        return np.stack([a12 + a34, a23 + a14, a31 + a24]) / SQRT2

    def gamma(self):
        a12, a23, a31, a34, a14, a24 = self.alpha
        return np.stack([a12 - a34, a23 - a14, a31 - a24]) / SQRT2


def wedge(v1, v2):
    """Bivector v1 ^ v2 of two vectors of shape (4, ...)."""
    v1, v2 = np.asarray(v1, float), np.asarray(v2, float)
    def w(i, j):
        return v1[i] * v2[j] - v1[j] * v2[i]
    return Bivector(np.stack([w(0, 1), w(1, 2), w(2, 0), w(2, 3), w(0, 3), w(1, 3)]))


def plucker(frame):
    """Tangent plane e1 ^ e2 of a Darboux frame."""
    return Bivector(np.stack([x.value for x in plucker_jets(frame.e[0], frame.e[1])]))


@dataclass
class GaussPoint:
    beta: np.ndarray
    gamma: np.ndarray
    stereo1: np.ndarray
    stereo2: np.ndarray


def stereographic(p, strict=False, eps=1e-12):
    """Projection of a point of the radius-1/sqrt2 sphere from its pole -first axis / sqrt2.

    Points within ``eps`` of the pole give NaN, or raise :class:`StereoPole` when
    ``strict`` is set.
    """
    p = np.asarray(p, float)
    den = RADIUS + p[0]
    near = np.abs(den) < eps
    if strict and np.any(near):
        raise StereoPole("point at the projection pole")
    den = np.where(near, np.nan, den)
    return np.stack([p[1] / den, p[2] / den])


def gauss_components(frame, strict=False):
    biv = plucker(frame)
    beta, gamma = biv.beta(), biv.gamma()
    return GaussPoint(beta, gamma, stereographic(beta, strict), stereographic(gamma, strict))


def component_values(frame, i):
    return np.stack([x.value for x in component_jets(frame.e[0], frame.e[1], i)])


def dgauss_components(cf):
    """Matrices of dg1, dg2 from (d/du, d/dv) to the moving bases (x2, x3), (y2, y3).

    dg1 = ((w24 - w13) x2 + (-w14 - w23) x3) / sqrt2,
    dg2 = ((-w24 - w13) y2 + (w14 - w23) y3) / sqrt2.
    Shapes are (2, 2, ...): row = target basis vector, column = source direction.
    """
    w13, w14 = cf.values(0, 2), cf.values(0, 3)
    w23, w24 = cf.values(1, 2), cf.values(1, 3)
    dg1 = np.stack([w24 - w13, -w14 - w23]) / SQRT2
    dg2 = np.stack([-w24 - w13, w14 - w23]) / SQRT2
    return dg1, dg2


def frame_basis_change(cf):
    """Matrix (2, 2, ...) whose columns are e1, e2 in the coordinate basis."""
    return np.array([[cf.inv[0][0].value, cf.inv[0][1].value],
                     [cf.inv[1][0].value, cf.inv[1][1].value]])


def dgauss_orthonormal(cf):
    """dg1, dg2 expressed on the orthonormal tangent frame (e1, e2)."""
    B = frame_basis_change(cf)
    dg1, dg2 = dgauss_components(cf)
    return np.einsum("ia...,ak...->ik...", dg1, B), np.einsum("ia...,ak...->ik...", dg2, B)


def kernel_direction(dg, eps=1e-8):
    """Kernel of a single 2x2 matrix: NONE (rank 2), FULL (rank 0) or a unit vector.

    Unit vectors are sign-normalized so the first nonzero component is positive.
    """
    dg = np.asarray(dg, float)
    s = np.linalg.svd(dg, compute_uv=False)
    if s[0] <= eps * max(1.0, np.abs(dg).max()) and s[0] <= eps:
        return FULL
    if s[1] > eps * s[0]:
        return NONE
    _, _, vt = np.linalg.svd(dg)
    k = vt[1]
    if k[0] < 0 or (k[0] == 0 and k[1] < 0):
        k = -k
    return k


def kernel_lines(dg):
    """Vectorized kernel line of the nearest rank-1 matrix; dg has shape (2, 2, ...)."""
    a, b, c, d = dg[0, 0], dg[0, 1], dg[1, 0], dg[1, 1]
    # use the row of larger norm: its orthogonal complement is the kernel
    r1 = np.hypot(a, b)
    r2 = np.hypot(c, d)
    x = np.where(r1 >= r2, a, c)
    y = np.where(r1 >= r2, b, d)
    k = np.stack([-y, x])
    n = np.hypot(k[0], k[1])
    k = k / np.where(n == 0, 1.0, n)
    flip = (k[0] < 0) | ((k[0] == 0) & (k[1] < 0))
    return np.where(flip, -k, k)


def omega_matrix(cf):
    """4x2 matrix (w13, w14, w23, w24) evaluated on (e1, e2); shape (4, 2, ...)."""
    rows = []
    for i, j in ((0, 2), (0, 3), (1, 2), (1, 3)):
        rows.append(np.stack([cf.on_frame(i, j, 0).value, cf.on_frame(i, j, 1).value]))
    return np.stack(rows)


def rank_dg(cf, eps=1e-8, atol=1e-12):
    """Numerical rank of the full Gauss map differential (0, 1 or 2)."""
    M = omega_matrix(cf)
    M = np.moveaxis(M, (0, 1), (-2, -1))
    s = np.linalg.svd(M, compute_uv=False)
    r = (s[..., 0] > atol).astype(int) + ((s[..., 1] > eps * s[..., 0]) & (s[..., 0] > atol)).astype(int)
    return r


def geodesic_distance(p, q):
    """Angle-based distance between points of the radius-1/sqrt2 sphere (in length units)."""
    p, q = np.asarray(p, float), np.asarray(q, float)
    c = np.clip((p * q).sum(0) / (np.linalg.norm(p, axis=0) * np.linalg.norm(q, axis=0)), -1, 1)
    return RADIUS * np.arccos(c)


def angular_deviation(p, q):
    p, q = np.asarray(p, float), np.asarray(q, float)
    cross = np.linalg.norm(np.cross(p, q, axis=0), axis=0)
    dot = (p * q).sum(0)
    return np.arctan2(cross, dot)


def monge_stereo(chart, u, v, params=None):
    """Closed-form stereographic images of g1, g2 for a Monge chart.

    g1 = r (-a10 + b01, -a01 - b10),  g2 = p (-a10 - b01, b10 - a01),
    r = 1 / (1 - a01 b10 + a10 b01 + h),  p = 1 / (1 + a01 b10 - a10 b01 + h).
    Also returns the two denominators, which exceed 1 for any graph.
    """
    X = chart.jets(u, v, 1, params)
    a10, a01, b10, b01 = X[2].c[1], X[2].c[2], X[3].c[1], X[3].c[2]
    h = np.sqrt(1 + a10 ** 2 + a01 ** 2 + b10 ** 2 + b01 ** 2 + (a01 * b10 - a10 * b01) ** 2)
    den_r = 1 - a01 * b10 + a10 * b01 + h
    den_p = 1 + a01 * b10 - a10 * b01 + h
    g1 = np.stack([-a10 + b01, -a01 - b10]) / den_r
    g2 = np.stack([-a10 - b01, b10 - a01]) / den_p
    return g1, g2, den_r, den_p


def jacobians_from_forms(cf):
    """det of dg_i on the orthonormal frame, which is J(g_i) = (K +- K^N)/2."""
    d1, d2 = dgauss_orthonormal(cf)
    det = lambda m: m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    return det(d1), det(d2)


def frame_values(frame):
    return np.stack([vvalue(e) for e in frame.e])
