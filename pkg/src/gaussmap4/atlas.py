"""Charts, domains and glue data describing a surface in R^4."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import exprlang as el
from .errors import DomainError, MeshInconsistent, NotClosedSurface, NotImmersed, OutOfDomain
from .jets import Jet2, monomials, ncoef

RECT_SIDES = ("umin", "umax", "vmin", "vmax")
IMPLICIT_SIDES = ("h", "k")


# domains --------------------------------------------------------------------

@dataclass(frozen=True)
class RectDomain:
    umin: float
    umax: float
    vmin: float
    vmax: float

    @property
    def bbox(self):
        return (self.umin, self.umax, self.vmin, self.vmax)

    def contains(self, u, v, params=None, strict=False):
        u, v = np.asarray(u, float), np.asarray(v, float)
        if strict:
            return (u > self.umin) & (u < self.umax) & (v > self.vmin) & (v < self.vmax)
        return (u >= self.umin) & (u <= self.umax) & (v >= self.vmin) & (v <= self.vmax)

    def side_points(self, side, t):
        """Points of an edge, ``t`` in [0, 1] running in the increasing coordinate."""
        t = np.asarray(t, float)
        if side in ("umin", "umax"):
            u = np.full_like(t, self.umin if side == "umin" else self.umax)
            return u, self.vmin + t * (self.vmax - self.vmin)
        if side in ("vmin", "vmax"):
            v = np.full_like(t, self.vmin if side == "vmin" else self.vmax)
            return self.umin + t * (self.umax - self.umin), v
        raise ValueError(f"unknown rectangle side {side!r}")


@dataclass(frozen=True)
class ImplicitDomain:
    """The region {h >= 0 and k >= 0}, assumed star-shaped about ``center``."""

    h: el.Expr
    k: el.Expr
    bbox: tuple
    center: tuple = (0.0, 0.0)

    def levels(self, u, v, params=None):
        return el.evaluate(self.h, u, v, params), el.evaluate(self.k, u, v, params)

    def contains(self, u, v, params=None, strict=False):
        h, k = self.levels(u, v, params)
        if strict:
            return (h > 0) & (k > 0)
        return (h >= 0) & (k >= 0)

    def boundary_radius(self, phi, params=None, iters=60):
        """Distance from the center to the boundary along each ray angle ``phi``.

        Returns ``(radius, side)`` where ``side`` is 0 if h vanishes there and 1 for k.
        The first sign change along the ray is bracketed on a coarse sample and
        then bisected.
        """
        phi = np.atleast_1d(np.asarray(phi, float))
        cu, cv = self.center
        umin, umax, vmin, vmax = self.bbox
        rmax = 1.5 * max(abs(umax - cu), abs(umin - cu), abs(vmax - cv), abs(vmin - cv))
        c, s = np.cos(phi), np.sin(phi)
        ts = np.linspace(0.0, 1.0, 257)[1:]
        def g(r):
            h, k = self.levels(cu + r * c, cv + r * s, params)
            return np.minimum(h, k)
        vals = g(ts[:, None] * rmax)
        neg = vals < 0
        if not np.all(neg.any(axis=0)):
            raise OutOfDomain("implicit domain is unbounded along some ray")
        first = neg.argmax(axis=0)
        lo = np.where(first > 0, ts[np.maximum(first - 1, 0)], 0.0) * rmax
        hi = ts[first] * rmax
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            inside = g(mid) >= 0
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        h, k = self.levels(cu + hi * c, cv + hi * s, params)
        side = np.where(h <= k, 0, 1)
        return lo, side


# charts ---------------------------------------------------------------------

class Chart:
    """A map from a planar domain into R^4."""

    name: str
    domain: object
    orientation: int

    def jets(self, u, v, order, params=None):
        raise NotImplementedError

    @property
    def is_monge(self):
        return False

    def point(self, u, v, params=None):
        return np.stack([j.value for j in self.jets(u, v, 0, params)])


@dataclass(frozen=True, eq=False)
class ExprChart(Chart):
    name: str
    coords: tuple
    domain: object
    orientation: int = 1

    def __post_init__(self):
        if len(self.coords) != 4:
            raise ValueError("a chart needs exactly four coordinate expressions")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")

    @property
    def is_monge(self):
        return self.coords[0] == el.Var("u") and self.coords[1] == el.Var("v")

    def jets(self, u, v, order, params=None):
        return [el.eval_jet(e, u, v, order, params) for e in self.coords]

    def point(self, u, v, params=None):
        return np.stack([el.evaluate(e, u, v, params) for e in self.coords])


@dataclass(frozen=True, eq=False)
class PolyChart(Chart):
    """Chart whose coordinates are polynomials given as jets at the origin."""

    name: str
    polys: tuple
    domain: object = RectDomain(-0.5, 0.5, -0.5, 0.5)
    orientation: int = 1

    @property
    def is_monge(self):
        p0, p1 = self.polys[0].c, self.polys[1].c
        e_u = np.zeros_like(p0)
        e_v = np.zeros_like(p1)
        e_u[1] = 1.0
        e_v[2] = 1.0
        return np.array_equal(p0, e_u) and np.array_equal(p1, e_v)

    def jets(self, u, v, order, params=None):
        u0, v0 = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        U = Jet2.variable(u0, 0, order)
        V = Jet2.variable(v0, 1, order)
        n = max(p.order for p in self.polys)
        upow = [Jet2.constant(np.ones(u0.shape), order)]
        vpow = [Jet2.constant(np.ones(u0.shape), order)]
        for _ in range(n):
            upow.append(upow[-1] * U)
            vpow.append(vpow[-1] * V)
        out = []
        for p in self.polys:
            acc = Jet2.constant(np.zeros(u0.shape), order)
            for k, (i, j) in enumerate(monomials(p.order)):
                if p.c[k] != 0:
                    acc = acc + upow[i] * vpow[j] * p.c[k]
            out.append(acc)
        return out


def monge_chart(a, b, name="monge", domain=None, order=4):
    """Polynomial Monge chart (u, v, a(u,v), b(u,v)) from ``{(i, j): coeff}`` dicts."""
    def poly(coefs):
        c = np.zeros(ncoef(order))
        for (i, j), x in coefs.items():
            c[monomials(order).index((i, j))] = x
        return Jet2(c, order)
    polys = (poly({(1, 0): 1.0}), poly({(0, 1): 1.0}), poly(a), poly(b))
    return PolyChart(name, polys, domain or RectDomain(-0.5, 0.5, -0.5, 0.5))


# gluing ---------------------------------------------------------------------

@dataclass(frozen=True)
class Glue:
    """Identification of ``side_a`` of chart ``chart_a`` with ``side_b`` of ``chart_b``.

    Rectangle sides are matched by their edge parameter t in [0, 1], reversed
    if ``reverse`` is set.  Implicit sides ("h" or "k") are matched pointwise
    in (u, v), which is how sheets over the same planar region meet.  A glue
    with ``chart_b = None`` collapses the side to a single point (a pole).
    """

    chart_a: str
    side_a: str
    chart_b: Optional[str] = None
    side_b: Optional[str] = None
    reverse: bool = False

    @property
    def collapse(self):
        return self.chart_b is None


@dataclass
class Atlas:
    charts: list
    glue: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    topology_hint: Optional[int] = None
    name: str = "surface"

    def chart(self, name):
        for c in self.charts:
            if c.name == name:
                return c
        raise KeyError(name)

    def chart_index(self, name):
        return [c.name for c in self.charts].index(name)

    def eval_chart(self, chart, u, v, order):
        if isinstance(chart, str):
            chart = self.chart(chart)
        inside = chart.domain.contains(u, v, self.params)
        if not np.all(inside):
            raise OutOfDomain(f"point outside the domain of chart {chart.name!r}")
        return chart.jets(u, v, order, self.params)

    def sides(self, chart):
        return IMPLICIT_SIDES if isinstance(chart.domain, ImplicitDomain) else RECT_SIDES

    def open_sides(self):
        covered = set()
        for g in self.glue:
            covered.add((g.chart_a, g.side_a))
            if not g.collapse:
                covered.add((g.chart_b, g.side_b))
        return [(c.name, s) for c in self.charts for s in self.sides(c) if (c.name, s) not in covered]

    @property
    def is_closed(self):
        return not self.open_sides()

    def require_closed(self):
        missing = self.open_sides()
        if missing:
            text = ", ".join(f"{c}.{s}" for c, s in missing)
            raise NotClosedSurface(f"unglued chart sides: {text}")

    def side_samples(self, chart, side, n=64):
        """Points on one side of a chart, as (u, v) arrays."""
        dom = chart.domain
        if isinstance(dom, RectDomain):
            t = np.linspace(0.0, 1.0, n)
            return dom.side_points(side, t)
        phi = np.linspace(0.0, 2 * np.pi, 8 * n, endpoint=False)
        r, which = dom.boundary_radius(phi, self.params)
        sel = which == IMPLICIT_SIDES.index(side)
        cu, cv = dom.center
        return cu + r[sel] * np.cos(phi[sel]), cv + r[sel] * np.sin(phi[sel])

    def check_glue(self, n=64, tol=1e-8):
        """Verify that glued sides map to the same points of R^4; returns the max gap."""
        worst = 0.0
        for g in self.glue:
            ca = self.chart(g.chart_a)
            ua, va = self.side_samples(ca, g.side_a, n)
            pa = ca.point(ua, va, self.params)
            if g.collapse:
                gap = float(np.max(np.abs(pa - pa[:, :1])))
            else:
                cb = self.chart(g.chart_b)
                if isinstance(ca.domain, RectDomain):
                    t = np.linspace(0.0, 1.0, n)
                    ub, vb = cb.domain.side_points(g.side_b, 1.0 - t if g.reverse else t)
                else:
                    ub, vb = ua, va
                pb = cb.point(ub, vb, self.params)
                gap = float(np.max(np.abs(pa - pb))) if pa.size else 0.0
            # on implicit sides the sheets meet like sqrt(level): the bisected boundary
            # point has level ~1e-16, so the sheets agree to ~1e-8 only
            lim = tol if isinstance(ca.domain, RectDomain) else max(tol, 1e-6)
            if gap > lim:
                raise MeshInconsistent(
                    f"glue {g.chart_a}.{g.side_a} ~ {g.chart_b}.{g.side_b}: gap {gap:.3g}"
                )
            worst = max(worst, gap)
        return worst

    def interior_grid(self, chart, n):
        """Cell-centered n x n grid over the chart's bounding box and its inside mask."""
        umin, umax, vmin, vmax = chart.domain.bbox
        du, dv = (umax - umin) / n, (vmax - vmin) / n
        uu = umin + du * (np.arange(n) + 0.5)
        vv = vmin + dv * (np.arange(n) + 0.5)
        U, V = np.meshgrid(uu, vv, indexing="ij")
        return U, V, chart.domain.contains(U, V, self.params, strict=True)


def check_immersion(chart, u, v, params=None, tol=1e-10):
    """Raise :class:`NotImmersed` unless x_u ^ x_v != 0 at all given points."""
    X = chart.jets(u, v, 1, params)
    xu = np.stack([x.c[1] for x in X])
    xv = np.stack([x.c[2] for x in X])
    gram = (xu * xu).sum(0) * (xv * xv).sum(0) - (xu * xv).sum(0) ** 2
    scale = (xu * xu).sum(0) * (xv * xv).sum(0)
    bad = ~(gram > tol * scale)
    if np.any(bad):
        raise NotImmersed(f"differential has rank < 2 at {int(bad.sum())} sampled points")


# Monge normalization ----------------------------------------------------------

def tangent_rotation(xu, xv):
    """Deterministic positive orthonormal basis (rows) whose first two span (xu, xv).

    Gram-Schmidt on (xu, xv, E_p, E_q), where E_p and E_q are the two standard
    basis vectors least aligned with the tangent plane.  The fourth vector is
    flipped if needed so that the determinant is +1.
    """
    xu, xv = np.asarray(xu, float), np.asarray(xv, float)
    e1 = xu / np.linalg.norm(xu)
    w = xv - (xv @ e1) * e1
    nw = np.linalg.norm(w)
    if nw < 1e-12 * np.linalg.norm(xv):
        raise NotImmersed("x_u and x_v are parallel")
    e2 = w / nw
    align = e1 ** 2 + e2 ** 2
    p, q = sorted(np.argsort(align, kind="stable")[:2])
    basis = [e1, e2]
    for idx in (p, q):
        w = np.eye(4)[idx]
        for b in basis:
            w = w - (w @ b) * b
        basis.append(w / np.linalg.norm(w))
    R = np.array(basis)
    if np.linalg.det(R) < 0:
        R[3] = -R[3]
    return R


def to_monge(chart, u0, v0, params=None, order=4):
    """Monge chart of the surface at x(u0, v0): tangent plane = uv-plane, base point at 0.

    The result is a :class:`PolyChart` whose third and fourth coordinates are the
    height functions a, b over the tangent plane, obtained by rotating R^4 and
    inverting the tangential part of the chart by series reversion.
    """
    X = chart.jets(u0, v0, order, params)
    xu = np.array([x.c[1] for x in X])
    xv = np.array([x.c[2] for x in X])
    R = tangent_rotation(xu, xv)
    Y = []
    for r in range(4):
        acc = Jet2.constant(0.0, order)
        for c in range(4):
            acc = acc + (X[c] - X[c].value) * R[r, c]
        Y.append(acc)
    # series reversion of (du, dv) -> (Y0, Y1)
    L = np.array([[Y[0].c[1], Y[0].c[2]], [Y[1].c[1], Y[1].c[2]]])
    Linv = np.linalg.inv(L)
    s = Jet2.variable(0.0, 0, order)
    t = Jet2.variable(0.0, 1, order)
    p = s * Linv[0, 0] + t * Linv[0, 1]
    q = s * Linv[1, 0] + t * Linv[1, 1]
    for _ in range(order):
        r0 = s - Y[0].compose(p, q)
        r1 = t - Y[1].compose(p, q)
        p = p + r0 * Linv[0, 0] + r1 * Linv[0, 1]
        q = q + r0 * Linv[1, 0] + r1 * Linv[1, 1]
    a = Y[2].compose(p, q)
    b = Y[3].compose(p, q)
    polys = (s, t, a, b)
    for j in polys:
        j.c[np.abs(j.c) < 1e-15] = 0.0
    return PolyChart(f"{chart.name}@monge", polys, RectDomain(-0.25, 0.25, -0.25, 0.25), chart.orientation)


__all__ = [
    "RectDomain", "ImplicitDomain", "Chart", "ExprChart", "PolyChart", "Glue", "Atlas",
    "monge_chart", "to_monge", "tangent_rotation", "check_immersion", "DomainError",
]
