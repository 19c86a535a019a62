"""Quadrature over the surface, degrees of the Gauss map components, and the
geodesic curvature of singular-value curves on the spheres S_i.

Rectangle charts use the composite midpoint rule.  Implicit charts
{h >= 0, k >= 0} are integrated in polar sectors about the chart center with
the substitution rho = rho_b(phi) (1 - t^2): the square-root graphs over such
domains have area elements that blow up like 1/sqrt(distance to the edge),
and the factor 2 t rho_b d t cancels that singularity.  Inside each sector
between two corners of the boundary the angle is graded toward the corners
by phi = phi_a + (phi_b - phi_a) (1 - cos(pi w)) / 2.  Every integral is done
on three nested resolutions and Richardson-extrapolated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .atlas import ImplicitDomain, RectDomain
from .errors import AtCusp, NonConvergent
from .gaussmap import RADIUS
from .invariants import curvatures, local_geometry

FIELDS = {
    "K": lambda s: s.K,
    "KN": lambda s: s.KN,
    "J1": lambda s: s.Jg1,
    "J2": lambda s: s.Jg2,
    "abs1": lambda s: np.abs(s.K + s.KN),
    "abs2": lambda s: np.abs(s.K - s.KN),
    "area": lambda s: np.ones_like(s.K),
}


@dataclass
class QuadratureResult:
    value: float
    estimated_error: float
    samples: int
    levels: list = field(default_factory=list)    # raw values at each resolution
    converged: bool = True

    def __float__(self):
        return float(self.value)


def _field(name):
    if callable(name):
        return name
    try:
        return FIELDS[name]
    except KeyError:
        raise ValueError(f"unknown field {name!r}; known: {', '.join(FIELDS)}") from None


def field_density(atlas, chart, u, v, fieldname, method="auto", block=65536):
    """Field value times the area element |x_u ^ x_v| at chart points."""
    return field_densities(atlas, chart, u, v, [fieldname], method, block)[0]


def field_densities(atlas, chart, u, v, fieldnames, method="auto", block=65536):
    """Several fields times the area element, sharing one geometry evaluation."""
    fns = [_field(f) for f in fieldnames]
    u = np.ravel(u)
    v = np.ravel(v)
    out = np.empty((len(fns), u.size))
    for s in range(0, u.size, block):
        uu, vv = u[s:s + block], v[s:s + block]
        geo = local_geometry(chart, uu, vv, 2, atlas.params, method)
        fr = geo.frame
        xu = np.stack([x.value for x in fr.xu])
        xv = np.stack([x.value for x in fr.xv])
        E, F, G = (xu * xu).sum(0), (xu * xv).sum(0), (xv * xv).sum(0)
        area = np.sqrt(np.maximum(E * G - F * F, 0.0))
        inv = curvatures(geo.forms)
        for j, fn in enumerate(fns):
            out[j, s:s + block] = fn(inv) * area
    return out


# node sets -------------------------------------------------------------------------

def rect_nodes(dom, n):
    """Midpoint nodes and weights of an n x n grid over a rectangle."""
    du = (dom.umax - dom.umin) / n
    dv = (dom.vmax - dom.vmin) / n
    uu = dom.umin + du * (np.arange(n) + 0.5)
    vv = dom.vmin + dv * (np.arange(n) + 0.5)
    U, V = np.meshgrid(uu, vv, indexing="ij")
    return U.ravel(), V.ravel(), np.full(U.size, du * dv)


def boundary_corners(dom, params, n=2048, iters=40):
    """Polar angles (about the center) where the boundary switches between h = 0 and k = 0."""
    phi = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    _, side = dom.boundary_radius(phi, params)
    idx = np.nonzero(side != np.roll(side, -1))[0]
    if idx.size == 0:
        return []
    lo = phi[idx]
    hi = lo + 2 * np.pi / n
    s_lo = side[idx]
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        same = dom.boundary_radius(mid, params)[1] == s_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return sorted(float(c) % (2 * np.pi) for c in 0.5 * (lo + hi))


def sector_nodes(dom, params, n, corners=None):
    """Nodes and weights for an implicit domain: n radial cells and n // 2 angular
    cells per sector between consecutive boundary corners."""
    if corners is None:
        corners = boundary_corners(dom, params)
    if not corners:
        corners = [0.0]
    edges = list(corners) + [corners[0] + 2 * np.pi]
    m = max(4, n // 2)
    t = (np.arange(n) + 0.5) / n
    w = (np.arange(m) + 0.5) / m
    cu, cv = dom.center
    us, vs, ws = [], [], []
    for a, b in zip(edges[:-1], edges[1:]):
        span = b - a
        phi = a + span * 0.5 * (1 - np.cos(np.pi * w))
        dphi = span * 0.5 * np.pi * np.sin(np.pi * w)
        rb, _ = dom.boundary_radius(phi, params)
        T, P = np.meshgrid(t, np.arange(m), indexing="ij")
        rho = rb[P] * (1 - T ** 2)
        jac = rho * 2 * T * rb[P] * dphi[P]
        us.append(cu + rho * np.cos(phi[P]))
        vs.append(cv + rho * np.sin(phi[P]))
        ws.append(jac / (n * m))
    return np.concatenate([x.ravel() for x in us]), np.concatenate([x.ravel() for x in vs]), \
        np.concatenate([x.ravel() for x in ws])


def chart_nodes(atlas, chart, n, corners=None):
    dom = chart.domain
    if isinstance(dom, RectDomain):
        return rect_nodes(dom, n)
    if isinstance(dom, ImplicitDomain):
        return sector_nodes(dom, atlas.params, n, corners)
    raise TypeError(f"unsupported domain {type(dom).__name__}")


# surface integrals -------------------------------------------------------------------

def integrate_surface(atlas, fieldname, n=64, method="auto", ratio_limit=0.5, strict=False):
    """Integral of a field against dA over every chart of the atlas.

    ``fieldname`` is one of FIELDS or a callable taking an InvariantSample.
    Resolutions n, 2n and 4n are evaluated; the value is the Richardson
    extrapolation (midpoint rule, error ~ h^2) of the two finest levels and the
    error estimate the change between the two extrapolations.  If refining
    fails to shrink the raw differences by ``ratio_limit`` the result is
    marked unconverged (NonConvergent when ``strict``).
    """
    return integrate_fields(atlas, [fieldname], n, method, ratio_limit, strict)[fieldname]


def integrate_fields(atlas, fieldnames, n=64, method="auto", ratio_limit=0.5, strict=False):
    """:func:`integrate_surface` for several fields at once; returns {name: result}."""
    corners = {c.name: boundary_corners(c.domain, atlas.params)
               for c in atlas.charts if isinstance(c.domain, ImplicitDomain)}
    levels = np.zeros((3, len(fieldnames)))
    samples = 0
    for k in range(3):
        for chart in atlas.charts:
            u, v, w = chart_nodes(atlas, chart, n * 2 ** k, corners.get(chart.name))
            dens = field_densities(atlas, chart, u, v, fieldnames, method)
            levels[k] += dens @ w
            samples += u.size
    out = {}
    for j, name in enumerate(fieldnames):
        I0, I1, I2 = (float(x) for x in levels[:, j])
        R1 = (4 * I1 - I0) / 3
        R2 = (4 * I2 - I1) / 3
        floor = 1e-11 * (1 + abs(I2))
        d1, d2 = abs(I1 - I0), abs(I2 - I1)
        converged = d2 <= floor or d2 <= ratio_limit * max(d1, floor)
        if not converged and strict:
            raise NonConvergent(f"{name}: refinement ratio {d2 / d1:.3g} exceeds {ratio_limit}")
        out[name] = QuadratureResult(R2, max(abs(R2 - R1), floor), samples, [I0, I1, I2], converged)
    return out


@dataclass
class DegreeResult:
    value: float
    rounded: int
    shift: float
    flagged: bool
    integral: QuadratureResult


def mapping_degree(atlas, i, n=64, method="auto"):
    """deg(g_i) = (1 / 2 pi) * integral of J(g_i) dA (S_i has area 2 pi).

    Flagged when rounding to the nearest integer moves the value by 0.05 or more.
    """
    atlas.require_closed()
    q = integrate_surface(atlas, "J1" if i == 1 else "J2", n, method)
    val = q.value / (2 * np.pi)
    r = int(np.rint(val))
    return DegreeResult(val, r, abs(val - r), abs(val - r) >= 0.05, q)


def degrees_from_curvatures(int_K, int_KN):
    """(deg g1, deg g2) from the integrals of K and K^N:
    int K = 2 pi (deg1 + deg2), int K^N = 2 pi (deg1 - deg2)."""
    return (int_K + int_KN) / (4 * np.pi), (int_K - int_KN) / (4 * np.pi)


# geodesic curvature on S_i ---------------------------------------------------------

def geodesic_curvature(c, c1, c2, radius=RADIUS, tol=1e-12):
    """kappa_g = det[c, c', c''] / (R |c'|^3) for a curve c on the sphere of radius R.

    Positive when the curve turns left as seen from outside the sphere.  Raises
    AtCusp where the speed vanishes.
    """
    c, c1, c2 = (np.asarray(x, float) for x in (c, c1, c2))
    sp = np.linalg.norm(c1, axis=0)
    if np.any(sp <= tol * (1 + np.linalg.norm(c2, axis=0))):
        raise AtCusp("curve speed vanishes")
    det = np.einsum("i...,i...->...", c, np.cross(c1, c2, axis=0))
    return det / (radius * sp ** 3)


def _curve_terms(d):
    """Per-sample quantities along a traced singular curve from local data.

    With T the chart-unit tangent of {f = 0} and N the unit chart normal, a
    curve through the point with velocity T has
        c' = dg(T),  c'' = d2g(T, T) + kappa_c dg(N)  (modulo multiples of c'),
    kappa_c = -Hess f(T, T) / |grad f| the chart curvature of the level set.
    Returns (det[c, c', c''], |c'|, |x_T| the speed on M, orientation sign)
    where the sign is +1 when the traced direction leaves the image g(M) on
    its left, i.e. <d2g(k, k), c x c'> > 0.
    """
    gn = np.hypot(d.grad[0], d.grad[1])
    N = d.grad / gn
    T = np.stack([-N[1], N[0]])
    hTT = (d.hess[0, 0] * T[0] ** 2 + 2 * d.hess[0, 1] * T[0] * T[1] + d.hess[1, 1] * T[1] ** 2)
    kc = -hTT / gn
    c1 = np.einsum("ma...,a...->m...", d.dg, T)
    c2 = np.einsum("mab...,a...,b...->m...", d.d2g, T, T) + kc * np.einsum("ma...,a...->m...", d.dg, N)
    det = np.einsum("m...,m...->...", d.g, np.cross(c1, c2, axis=0))
    sp = np.linalg.norm(c1, axis=0)
    xT = np.sqrt(d.metric[0, 0] * T[0] ** 2 + 2 * d.metric[0, 1] * T[0] * T[1] + d.metric[1, 1] * T[1] ** 2)
    q = np.einsum("mab...,a...,b...->m...", d.d2g, d.kernel, d.kernel)
    side = np.sign(np.einsum("m...,m...->...", q, np.cross(d.g, c1, axis=0)))
    return det, sp, xT, np.where(side == 0, 1.0, side)


def kg_density(atlas, chart, pts, i, method="auto"):
    """kappa_g d tau per unit length on M at points of a singular curve.

    Equals sign * det[c, c', c''] / (R |c'|^2 |x_T|); bounded through cusps
    (numerator and denominator both vanish to second order there).
    """
    from .singular import local_data
    d = local_data(chart, pts[:, 0], pts[:, 1], i, atlas.params, method)
    det, sp, xT, side = _curve_terms(d)
    return side * det / (RADIUS * sp ** 2 * xT)


@dataclass
class CurveIntegral:
    value: float
    estimated_error: float
    samples: int
    per_loop: list
    shell_corrections: list        # per loop: I(eps/4) - I(eps/2)
    eps: float
    converged: bool = True


def _loop_geometry(atlas, ls, i, method):
    """Arclength on M along the samples of a loop and the density there."""
    dens = np.empty(len(ls.points))
    X = np.empty((len(ls.points), 4))
    for name in dict.fromkeys(ls.charts):
        sel = np.array([c == name for c in ls.charts])
        ch = atlas.chart(name)
        dens[sel] = kg_density(atlas, ch, ls.points[sel], i, method)
        X[sel] = ch.point(ls.points[sel, 0], ls.points[sel, 1], atlas.params).T
    P = np.vstack([X, X[:1]]) if ls.closed else X
    seg = np.linalg.norm(np.diff(P, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    f = np.append(dens, dens[0]) if ls.closed else dens
    return s, f, X


def _trapezoid_cut(s, f, cuts):
    """Trapezoid integral of samples (s, f) with the intervals in ``cuts`` removed
    (interpolating linearly at the cut points)."""
    total = float(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(s)))
    for a, b in cuts:
        total -= _piece(s, f, a, b)
    return total


def _piece(s, f, a, b):
    a, b = max(a, s[0]), min(b, s[-1])
    if b <= a:
        return 0.0
    inner = (s > a) & (s < b)
    xs = np.concatenate([[a], s[inner], [b]])
    ys = np.concatenate([[np.interp(a, s, f)], f[inner], [np.interp(b, s, f)]])
    return float(np.sum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs)))


def curve_integral_kg(atlas, classification, method="auto", eps=None, tol=1e-2, strict=False):
    """Integral of kappa_g d tau over the singular values of g_i.

    The integral runs along every loop in arclength on M.  Arcs of half-length
    eps (on M) around each cusp are removed at eps / 2 and eps / 4 and the two
    values are extrapolated linearly to eps -> 0.  The error estimate is the
    drift against the extrapolation from (eps, eps / 2) plus the trapezoid
    error judged by halving the sampling.
    """
    i = classification.component
    if not classification.samples:
        return CurveIntegral(0.0, 0.0, 0, [], [], 0.0, True)
    loops = [_loop_geometry(atlas, ls, i, method) for ls in classification.samples]
    spacing = max(float(np.median(np.diff(s))) for s, _, _ in loops if len(s) > 1)
    if eps is None:
        eps = 8 * spacing
    cusp_pos = {}
    for c in classification.cusps:
        s, _, X = loops[c.loop]
        x = atlas.chart(c.chart).point(c.location[:1], c.location[1:], atlas.params)[:, 0]
        j = int(np.argmin(np.linalg.norm(X - x, axis=1)))
        cusp_pos.setdefault(c.loop, []).append(s[j])

    def total(e, stride=1):
        out = []
        for li, (s, f, _) in enumerate(loops):
            ss, ff = s[::stride], f[::stride]
            if stride > 1 and ss[-1] != s[-1]:
                ss, ff = np.append(ss, s[-1]), np.append(ff, f[-1])
            L = s[-1]
            cuts = []
            for p in cusp_pos.get(li, []):
                cuts.append((p - e, p + e))
                if classification.samples[li].closed:
                    cuts += [(p - e + L, p + e + L), (p - e - L, p + e - L)]
            out.append(_trapezoid_cut(ss, ff, cuts))
        return out

    I_e, I_h, I_q = total(eps), total(eps / 2), total(eps / 4)
    per_loop = [2 * b - a for a, b in zip(I_h, I_q)]
    previous = float(sum(2 * b - a for a, b in zip(I_e, I_h)))
    coarse = float(sum(2 * b - a for a, b in zip(total(eps / 2, 2), total(eps / 4, 2))))
    value = float(sum(per_loop))
    # extrapolation drift between eps and eps / 2 plus trapezoid error (h^2: a third
    # of the change under halved sampling)
    err = abs(value - previous) + abs(value - coarse) / 3
    shells = [float(b - a) for a, b in zip(I_h, I_q)]
    converged = err <= tol * (1 + abs(value))
    if not converged and strict:
        raise NonConvergent(f"curve integral error estimate {err:.3g} near cusps")
    n = sum(len(s) for s, _, _ in loops)
    return CurveIntegral(value, err, n, per_loop, shells, eps, converged)
