"""Second-order invariants K, K^N, Delta, |H|^2 and the Jacobians of g1, g2."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frames import connection_forms, darboux_frame, frame_from_jets, vvalue

SQRT2 = np.sqrt(2.0)


@dataclass
class InvariantSample:
    K: np.ndarray
    KN: np.ndarray
    Delta: np.ndarray
    H2: np.ndarray
    Jg1: np.ndarray
    Jg2: np.ndarray

    def as_dict(self):
        return {"K": self.K, "KN": self.KN, "Delta": self.Delta, "H2": self.H2,
                "Jg1": self.Jg1, "Jg2": self.Jg2}


@dataclass
class LocalGeometry:
    """Frame and connection forms of a chart at a batch of points."""

    frame: object
    forms: object

    @property
    def order(self):
        return self.forms.order


def local_geometry(chart, u, v, order=2, params=None, method="auto"):
    """Frame (order-1 jets) and connection forms (order-2 jets) from order-``order`` chart jets."""
    frame = darboux_frame(chart, u, v, order, params, method)
    return LocalGeometry(frame, connection_forms(frame))


def geometry_from_jets(X, method="gram-schmidt", orientation=1):
    frame = frame_from_jets(X, method, orientation)
    return LocalGeometry(frame, connection_forms(frame))


def second_fundamental_form(cf):
    """II coefficients as jets: ((l3, m3, n3), (l4, m4, n4)).

    l_j = omega_1^j(e1), m_j = omega_1^j(e2) (= omega_2^j(e1)), n_j = omega_2^j(e2).
    """
    out = []
    for j in (2, 3):
        out.append((cf.on_frame(0, j, 0), cf.on_frame(0, j, 1), cf.on_frame(1, j, 1)))
    return tuple(out)


def sff_values(cf):
    return np.array([[x.value for x in row] for row in second_fundamental_form(cf)])


def pfaffian_covectors(cf, i):
    """The two 1-forms whose dependence defines the singular set of g_i.

    Returned as jets evaluated on (e1, e2): ((c1(e1), c1(e2)), (c2(e1), c2(e2))).
    i = 1: omega_1^3 - omega_2^4 and omega_1^4 + omega_2^3;
    i = 2: omega_1^4 - omega_2^3 and omega_2^4 + omega_1^3.
    """
    w = {(a, b, k): cf.on_frame(a, b, k) for a in (0, 1) for b in (2, 3) for k in (0, 1)}
    if i == 1:
        c1 = (w[0, 2, 0] - w[1, 3, 0], w[0, 2, 1] - w[1, 3, 1])
        c2 = (w[0, 3, 0] + w[1, 2, 0], w[0, 3, 1] + w[1, 2, 1])
    else:
        c1 = (w[0, 3, 0] - w[1, 2, 0], w[0, 3, 1] - w[1, 2, 1])
        c2 = (w[1, 3, 0] + w[0, 2, 0], w[1, 3, 1] + w[0, 2, 1])
    return c1, c2


def curvature_sum(cf, i):
    """K + K^N (i = 1) or K - K^N (i = 2) as a jet, via the 2x2 determinant of the Pfaffian pair."""
    (a, b), (c, d) = pfaffian_covectors(cf, i)
    return a * d - b * c


def little_discriminant(l3, m3, n3, l4, m4, n4):
    """Discriminant of the curvature ellipse.

    Delta = (1/4) det [[l3, 2 m3, n3, 0], [l4, 2 m4, n4, 0], [0, l3, 2 m3, n3], [0, l4, 2 m4, n4]].
    Negative at hyperbolic points (origin of the normal plane outside the
    ellipse), positive at elliptic points, zero at parabolic points.  The
    determinant is minus the resultant of the two normal components of II,
    which is what is expanded below.
    """
    a, b, c, e, f, g = l3, 2 * m3, n3, l4, 2 * m4, n4
    res = (a * g - c * e) ** 2 - (a * f - b * e) * (b * g - c * f)
    return -0.25 * res


def curvatures(cf, frame=None):
    """K, K^N, Delta, |H|^2 and the Jacobians J(g_i) = (K +- K^N)/2."""
    kp = curvature_sum(cf, 1).value
    km = curvature_sum(cf, 2).value
    (l3, m3, n3), (l4, m4, n4) = sff_values(cf)
    K = 0.5 * (kp + km)
    KN = 0.5 * (kp - km)
    Delta = little_discriminant(l3, m3, n3, l4, m4, n4)
    H2 = 0.25 * ((l3 + n3) ** 2 + (l4 + n4) ** 2)
    return InvariantSample(K, KN, Delta, H2, 0.5 * kp, 0.5 * km)


def invariants_at(chart, u, v, params=None, method="auto"):
    return curvatures(local_geometry(chart, u, v, 2, params, method).forms)


# second route: pull back the sphere area form through the Plucker embedding

def plucker_jets(e1, e2):
    """Plucker components (a12, a23, a31, a34, a14, a24) of e1 ^ e2, as jets."""
    def w(i, j):
        return e1[i] * e2[j] - e1[j] * e2[i]
    return (w(0, 1), w(1, 2), w(2, 0), w(2, 3), w(0, 3), w(1, 3))


def component_jets(e1, e2, i):
    """Coordinates of g_i in the fixed basis X (i = 1) or Y (i = 2), as three jets."""
    a12, a23, a31, a34, a14, a24 = plucker_jets(e1, e2)
    s = 1.0 if i == 1 else -1.0
    return ((a12 + a34 * s) / SQRT2, (a23 + a14 * s) / SQRT2, (a31 + a24 * s) / SQRT2)


def jacobian_by_pullback(chart, u, v, i, params=None, method="auto"):
    """J(g_i) = det[n, dg_i(e1), dg_i(e2)] with n the outward unit normal of S_i.

    Only the tangent vectors e1, e2 enter: g_i is formed from the bivector
    e1 ^ e2 in fixed coordinates, differentiated as a jet and evaluated on the
    orthonormal tangent frame.  No connection forms are used.
    """
    frame = darboux_frame(chart, u, v, 2, params, method)
    return jacobian_from_frame(frame, i)


def jacobian_from_frame(frame, i):
    e1, e2 = frame.e[0], frame.e[1]
    g = component_jets(e1, e2, i)
    du = np.stack([x.partial(0).value for x in g])
    dv = np.stack([x.partial(1).value for x in g])
    # coordinate components of e1, e2: columns of the inverse of theta_k(d_a) = <x_a, e_k>
    xu, xv = vvalue(frame.xu), vvalue(frame.xv)
    E1, E2 = vvalue(e1), vvalue(e2)
    t11, t12 = (xu * E1).sum(0), (xv * E1).sum(0)
    t21, t22 = (xu * E2).sum(0), (xv * E2).sum(0)
    det = t11 * t22 - t12 * t21
    i11, i12, i21, i22 = t22 / det, -t12 / det, -t21 / det, t11 / det
    d1 = du * i11 + dv * i21
    d2 = du * i12 + dv * i22
    pos = np.stack([x.value for x in g])
    n = pos * SQRT2
    return np.einsum("i...,i...->...", n, np.cross(d1, d2, axis=0))
