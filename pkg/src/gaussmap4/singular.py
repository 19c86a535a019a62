"""Singular curves of the Gauss map components and their fold/cusp structure.

The singular set of g_i is the zero set of f_i = K + (-1)^(i+1) K^N.  It is
traced per chart by marching squares on a cell-centered grid, refined onto the
zero set by Newton steps along the gradient, extended to the chart boundary
and joined across glue edges into closed loops.  Points on the loops are then
classified as folds or cusps and cusps are given a sign.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .atlas import RectDomain
from .errors import DegenerateTangency, GradientVanishes
from .frames import frame_from_jets, connection_forms
from .gaussmap import RADIUS
from .invariants import component_jets, curvature_sum, sff_values
from .jets import Jet2

FOLD = "fold"
CUSP = "cusp"


# pointwise data ---------------------------------------------------------------

def _method(chart, method):
    if method != "auto":
        return method
    return "monge" if chart.is_monge else "gram-schmidt"


def _forms(chart, u, v, order, params, method="auto"):
    X = chart.jets(u, v, order, params)
    frame = frame_from_jets(X, _method(chart, method), chart.orientation)
    return X, frame, connection_forms(frame)


def field_jet(chart, u, v, i, order=2, params=None, method="auto"):
    """K + (-1)^(i+1) K^N as a jet of order ``order - 2`` from order-``order`` chart jets."""
    _, _, cf = _forms(chart, u, v, order, params, method)
    return curvature_sum(cf, i)


def field_values(chart, u, v, i, params=None, method="auto"):
    return field_jet(chart, u, v, i, 2, params, method).value


def coordinate_covectors(cf, i):
    """The Pfaffian pair of g_i evaluated on (d/du, d/dv): arrays of shape (2, 2, ...)."""
    w = {(a, b): cf.values(a, b) for a in (0, 1) for b in (2, 3)}
    if i == 1:
        return np.stack([w[0, 2] - w[1, 3], w[0, 3] + w[1, 2]])
    return np.stack([w[0, 3] - w[1, 2], w[1, 3] + w[0, 2]])


@dataclass
class LocalData:
    """Order-4 data of g_i at a batch of chart points."""

    f: np.ndarray          # K +- K^N
    grad: np.ndarray       # (2, n) chart gradient of f
    hess: np.ndarray       # (2, 2, n)
    scale: np.ndarray      # 1 + |II|^2, the zero-test scale
    metric: np.ndarray     # (2, 2, n) first fundamental form
    xu: np.ndarray         # (4, n)
    xv: np.ndarray
    kernel: np.ndarray     # (2, n) chart-coordinate kernel of the Pfaffian pair, unit in the metric
    g: np.ndarray          # (3, n) point of S_i
    dg: np.ndarray         # (3, 2, n)
    d2g: np.ndarray        # (3, 2, 2, n)
    gjets: list            # three order-3 jets of g_i
    covectors: np.ndarray  # (2, 2, n)


def local_data(chart, u, v, i, params=None, method="auto"):
    u = np.atleast_1d(np.asarray(u, float))
    v = np.atleast_1d(np.asarray(v, float))
    X, frame, cf = _forms(chart, u, v, 4, params, method)
    f = curvature_sum(cf, i)
    grad = np.stack([f.c[1], f.c[2]])
    hess = np.array([[2 * f.c[3], f.c[4]], [f.c[4], 2 * f.c[5]]])
    sff = sff_values(cf)
    scale = 1.0 + (sff ** 2).sum(axis=(0, 1))
    xu = np.stack([x.c[1] for x in X])
    xv = np.stack([x.c[2] for x in X])
    metric = np.array([[(xu * xu).sum(0), (xu * xv).sum(0)], [(xu * xv).sum(0), (xv * xv).sum(0)]])
    cov = coordinate_covectors(cf, i)
    n1 = np.hypot(cov[0, 0], cov[0, 1])
    n2 = np.hypot(cov[1, 0], cov[1, 1])
    c = np.where(n1 >= n2, cov[0], cov[1])
    k = np.stack([-c[1], c[0]])
    k = k / np.sqrt(_quad(metric, k, k))
    g = component_jets(frame.e[0], frame.e[1], i)
    gv = np.stack([x.value for x in g])
    dg = np.stack([np.stack([x.c[1], x.c[2]]) for x in g])
    d2g = np.stack([np.array([[2 * x.c[3], x.c[4]], [x.c[4], 2 * x.c[5]]]) for x in g])
    return LocalData(f.value, grad, hess, scale, metric, xu, xv, k, gv, dg, d2g, list(g), cov)


def _quad(G, a, b):
    return (a[0] * (G[0, 0] * b[0] + G[0, 1] * b[1]) + a[1] * (G[1, 0] * b[0] + G[1, 1] * b[1]))


def metric_gradient_norm(d):
    """|df| measured with the induced metric."""
    G = d.metric
    det = G[0, 0] * G[1, 1] - G[0, 1] ** 2
    gi = np.array([[G[1, 1], -G[0, 1]], [-G[0, 1], G[0, 0]]]) / det
    return np.sqrt(_quad(gi, d.grad, d.grad))


def transversality(d):
    """df(k)/|df| for the unit kernel k: the sine of the angle between kernel and curve."""
    return (d.grad * d.kernel).sum(0) / metric_gradient_norm(d)


def normalized_gradient(d):
    """Size of df relative to the curvature scale, measured with the induced metric.

    Chart-coordinate derivatives are useless near the square-root edge of an
    implicit chart (the Hessian grows without bound there), so the metric norm
    of df over 1 + |II|^2 is used; in a Monge chart at its base point this is
    the plain coordinate gradient over that scale.
    """
    return metric_gradient_norm(d) / d.scale


def chart_tangent(d):
    """Unit (Euclidean, chart coordinates) tangent of the level curve: perp of the gradient."""
    t = np.stack([-d.grad[1], d.grad[0]])
    return t / np.hypot(t[0], t[1])


def kernel_tangent_cross(d):
    """det[k, T] with both normalized in chart coordinates."""
    k = d.kernel / np.hypot(d.kernel[0], d.kernel[1])
    T = chart_tangent(d)
    return k[0] * T[1] - k[1] * T[0]


def fold_determinant(d, orientation=1):
    """Fold test: det[Q(k, k), dg(e)] on the tangent plane of S_i at g(p).

    k is the metric-unit kernel and e = Jk its rotation by a right angle in the
    induced metric, so dg(e) spans the image.  Modulo that image the second
    derivative d2g(k, k) does not depend on the chart, which keeps the test
    well conditioned where chart derivatives blow up.  The value is the
    component of d2g(k, k) normal to the image inside T S_i, over 1 + |II|^2;
    it is nonzero exactly at folds and changes sign with k, like the
    transversality.
    """
    G, k = d.metric, d.kernel
    det = np.sqrt(G[0, 0] * G[1, 1] - G[0, 1] ** 2)
    e = np.stack([-(G[0, 1] * k[0] + G[1, 1] * k[1]), G[0, 0] * k[0] + G[0, 1] * k[1]]) / det
    e = e * orientation
    w = np.einsum("ma...,a...->m...", d.dg, e)
    w = w / np.linalg.norm(w, axis=0)
    N = d.g / np.linalg.norm(d.g, axis=0)
    nperp = np.cross(N, w, axis=0)
    q = np.einsum("mab...,a...,b...->m...", d.d2g, k, k)
    return (q * nperp).sum(0) / d.scale


# grid scan and marching squares -------------------------------------------------

@dataclass
class GridScan:
    chart: object
    U: np.ndarray
    V: np.ndarray
    mask: np.ndarray
    F: np.ndarray

    @property
    def cell(self):
        return (self.U[1, 0] - self.U[0, 0], self.V[0, 1] - self.V[0, 0])


def scan_chart(atlas, chart, i, n, method="auto", block=65536, zero_tol=1e-12):
    U, V, mask = atlas.interior_grid(chart, n)
    F = np.full(U.shape, np.nan)
    uu, vv = U[mask], V[mask]
    out = np.empty(uu.shape)
    for s in range(0, uu.size, block):
        out[s:s + block] = field_values(chart, uu[s:s + block], vv[s:s + block], i, atlas.params, method)
    # round-off level values count as zero (hence positive), so a field that vanishes
    # identically produces no contours from noise; such points show up as (G1) witnesses
    out[np.abs(out) < zero_tol] = 0.0
    F[mask] = out
    return GridScan(chart, U, V, mask, F)


def marching_squares(U, V, F):
    """Zero-level polylines of F on a node grid; NaN nodes are treated as outside.

    Returns a list of (points (m, 2), closed flag).  Saddle cells are resolved by
    the sign of the cell-center average.  Exact zeros count as positive.
    """
    n0, n1 = F.shape
    valid = np.isfinite(F)
    pos = F >= 0
    nid = lambda i, j: i * n1 + j
    hoff = n0 * n1

    def crossing(a, b):
        fa, fb = F[a], F[b]
        lam = fa / (fa - fb)
        return (U[a] + lam * (U[b] - U[a]), V[a] + lam * (V[b] - V[a]))

    # edges with a sign change and valid endpoints
    points = {}
    eh = valid[:-1, :] & valid[1:, :] & (pos[:-1, :] != pos[1:, :])
    for i, j in zip(*np.nonzero(eh)):
        points[nid(i, j)] = crossing((i, j), (i + 1, j))
    ev = valid[:, :-1] & valid[:, 1:] & (pos[:, :-1] != pos[:, 1:])
    for i, j in zip(*np.nonzero(ev)):
        points[hoff + nid(i, j)] = crossing((i, j), (i, j + 1))

    cv = valid[:-1, :-1] & valid[1:, :-1] & valid[1:, 1:] & valid[:-1, 1:]
    active = cv & (eh[:, :-1] | eh[:, 1:] | ev[:-1, :] | ev[1:, :])
    adj = {}

    def link(a, b):
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)

    for i, j in zip(*np.nonzero(active)):
        bottom, top = nid(i, j), nid(i, j + 1)
        left, right = hoff + nid(i, j), hoff + nid(i + 1, j)
        edges = [e for e in (bottom, right, top, left) if e in points]
        if len(edges) == 2:
            link(*edges)
        elif len(edges) == 4:
            center = 0.25 * (F[i, j] + F[i + 1, j] + F[i + 1, j + 1] + F[i, j + 1])
            if (center >= 0) == pos[i, j]:
                link(bottom, right)
                link(top, left)
            else:
                link(bottom, left)
                link(right, top)
    # edges crossing into invalid cells are dangling ends
    chains = []
    seen = set()
    starts = sorted(k for k, nb in adj.items() if len(nb) == 1) + sorted(adj)
    for s in starts:
        if s in seen:
            continue
        chain = [s]
        seen.add(s)
        prev, cur = None, s
        closed = False
        while True:
            nxt = [x for x in adj[cur] if x != prev]
            if prev is not None and len(adj[cur]) == 2 and adj[cur][0] == adj[cur][1] == prev:
                nxt = []
            if not nxt:
                break
            step = nxt[0]
            if step == s:
                closed = True
                break
            if step in seen:
                break
            chain.append(step)
            seen.add(step)
            prev, cur = cur, step
        pts = np.array([points[e] for e in chain])
        if len(pts) >= 2:
            chains.append((pts, closed))
    return chains


# Newton refinement and continuation ---------------------------------------------

def _value_grad(chart, u, v, i, params, method):
    f = field_jet(chart, u, v, i, 3, params, method)
    return f.value, np.stack([f.c[1], f.c[2]])


def newton_project(chart, pts, i, params=None, method="auto", iters=12, tol=1e-13):
    """Move points onto the zero set along the gradient; returns points and |f|."""
    p = np.array(pts, float).reshape(-1, 2).T.copy()
    dom = chart.domain
    f = np.zeros(p.shape[1])
    for _ in range(iters):
        f, g = _value_grad(chart, p[0], p[1], i, params, method)
        g2 = (g ** 2).sum(0)
        step = f / np.where(g2 > 0, g2, np.inf) * g
        active = np.abs(f) > tol
        if not active.any():
            break
        lam = np.ones_like(f)
        for _h in range(30):
            q = p - lam * step
            ok = dom.contains(q[0], q[1], params, strict=True)
            if ok.all():
                break
            lam = np.where(ok, lam, 0.5 * lam)
        p = np.where(active, p - lam * step, p)
    f, _ = _value_grad(chart, p[0], p[1], i, params, method)
    return p.T, np.abs(f)


def _side_levels(chart, side, u, v, params):
    """Level function of a chart side (positive inside) and its gradient."""
    dom = chart.domain
    one, zero = np.ones_like(u), np.zeros_like(u)
    if isinstance(dom, RectDomain):
        if side == "umin":
            return u - dom.umin, np.stack([one, zero])
        if side == "umax":
            return dom.umax - u, np.stack([-one, zero])
        if side == "vmin":
            return v - dom.vmin, np.stack([zero, one])
        return dom.vmax - v, np.stack([zero, -one])
    from . import exprlang as el
    L = el.eval_jet(dom.h if side == "h" else dom.k, u, v, 1, params)
    return L.value, np.stack([L.c[1], L.c[2]])


def _extend_ends(atlas, chart, ends, dirs, i, method, iters=40):
    """Continue chain ends to the chart boundary.

    For every end and every side of the chart, Newton's method solves
    f = 0, side level = delta (a tiny positive level, so the point stays inside
    where the chart is defined).  The solution reached by the shortest forward
    move wins.  Returns the boundary points and their sides.
    """
    params = atlas.params
    ends = np.asarray(ends, float)
    dirs = np.asarray(dirs, float)
    sides = atlas.sides(chart)
    size = max(abs(x) for x in chart.domain.bbox) or 1.0
    # implicit charts lose accuracy like eps/level near the boundary; 1e-8 keeps |f| noise ~1e-9
    delta = 1e-12 * size if isinstance(chart.domain, RectDomain) else 1e-8
    m = len(ends)
    P = np.repeat(ends, len(sides), axis=0).T.copy()
    D = np.repeat(dirs, len(sides), axis=0).T
    S = np.tile(np.arange(len(sides)), m)
    dom = chart.domain
    ok = np.ones(P.shape[1], bool)
    for _ in range(iters):
        f, g = _value_grad(chart, P[0], P[1], i, params, method)
        L = np.empty_like(f)
        gl = np.empty_like(g)
        for si, side in enumerate(sides):
            sel = S == si
            L[sel], gl[:, sel] = _side_levels(chart, side, P[0, sel], P[1, sel], params)
        r0, r1 = f, L - delta
        det = g[0] * gl[1] - g[1] * gl[0]
        bad = np.abs(det) < 1e-300
        det = np.where(bad, 1.0, det)
        step = np.stack([(r0 * gl[1] - r1 * g[1]) / det, (g[0] * r1 - gl[0] * r0) / det])
        ok &= ~bad
        lam = np.ones(P.shape[1])
        for _h in range(50):
            Q = P - lam * step
            inside = dom.contains(Q[0], Q[1], params, strict=True)
            if inside.all():
                break
            lam = np.where(inside, lam, 0.5 * lam)
        P = np.where(ok, P - lam * step, P)
        if np.all(np.abs(step).max(0) < 1e-15 * size):
            break
    f, _ = _value_grad(chart, P[0], P[1], i, params, method)
    L = np.array([_side_levels(chart, sides[S[j]], P[0, j:j + 1], P[1, j:j + 1], params)[0][0]
                  for j in range(P.shape[1])])
    scale = local_data(chart, P[0], P[1], i, params, method).scale
    conv = ok & (np.abs(f) < 1e-8 * scale) & (np.abs(L - delta) < 1e-3 * delta + 1e-15)
    move = P - np.repeat(ends, len(sides), axis=0).T
    fwd = (move * D).sum(0)
    dist = np.hypot(move[0], move[1])
    score = np.where(conv & (fwd > -1e-12), dist, np.inf).reshape(m, len(sides))
    best = score.argmin(axis=1)
    out, out_sides = [], []
    for j in range(m):
        k = j * len(sides) + best[j]
        if not np.isfinite(score[j, best[j]]):
            out.append(ends[j])
            out_sides.append(None)
        else:
            out.append(P[:, k])
            out_sides.append(sides[best[j]])
    return np.array(out), out_sides


# traced curves --------------------------------------------------------------------

@dataclass
class SingularCurve:
    """A polyline of refined singular points in one chart."""

    component: int
    chart: str
    points: np.ndarray           # (m, 2)
    closed: bool
    residual: np.ndarray         # |f| at points
    tangent: np.ndarray = None   # (m, 2) chart unit tangents along the polyline
    kernel: np.ndarray = None    # (m, 2) chart kernel directions (unit in the metric)
    end_sides: tuple = (None, None)

    def __len__(self):
        return len(self.points)


@dataclass
class SingularSet:
    component: int
    pieces: list
    loops: list                   # lists of (piece index, reversed)
    open_chains: list             # chains that could not be closed
    g1_violations: list           # (chart, u, v, |f|, |grad f|) grid witnesses
    grid: int
    residual_max: float = 0.0

    @property
    def empty(self):
        return not self.pieces

    def loop_points(self, k):
        out = []
        for idx, rev in self.loops[k]:
            P = self.pieces[idx].points
            out.append(P[::-1] if rev else P)
        return out


def _side_of(atlas, chart, p):
    dom = chart.domain
    if isinstance(dom, RectDomain):
        dists = {"umin": p[0] - dom.umin, "umax": dom.umax - p[0],
                 "vmin": p[1] - dom.vmin, "vmax": dom.vmax - p[1]}
        side = min(dists, key=dists.get)
        return side, dists[side]
    h, k = dom.levels(p[0], p[1], atlas.params)
    return ("h", float(h)) if h <= k else ("k", float(k))


def _edge_param(dom, side, p):
    if side in ("umin", "umax"):
        return (p[1] - dom.vmin) / (dom.vmax - dom.vmin)
    return (p[0] - dom.umin) / (dom.umax - dom.umin)


def _map_across(atlas, chart, side, p):
    """Images of a boundary point under the glue maps of ``chart.side``: list of (chart, side, point)."""
    out = []
    for g in atlas.glue:
        for ca, sa, cb, sb in ((g.chart_a, g.side_a, g.chart_b, g.side_b),
                               (g.chart_b, g.side_b, g.chart_a, g.side_a)):
            if ca != chart.name or sa != side or cb is None:
                continue
            other = atlas.chart(cb)
            if isinstance(chart.domain, RectDomain):
                t = _edge_param(chart.domain, side, p)
                if g.reverse:
                    t = 1.0 - t
                q = np.array(other.domain.side_points(sb, np.array([t])))[:, 0]
            else:
                q = np.array(p, float)
            out.append((cb, sb, q))
    return out


def gradient_scan(scan, i, params, method, tol=1e-8):
    """Grid nodes where both f and its gradient are negligible: (G1) witnesses."""
    chart = scan.chart
    F = scan.F
    small = scan.mask & (np.abs(np.nan_to_num(F, nan=np.inf)) < tol)
    if not small.any():
        return []
    uu, vv = scan.U[small], scan.V[small]
    bad = []
    for s in range(0, uu.size, 16384):
        f, g = _value_grad(chart, uu[s:s + 16384], vv[s:s + 16384], i, params, method)
        gn = np.hypot(g[0], g[1])
        for a, b, x, y in zip(uu[s:s + 16384][gn < tol], vv[s:s + 16384][gn < tol],
                              np.abs(f)[gn < tol], gn[gn < tol]):
            bad.append((chart.name, float(a), float(b), float(x), float(y)))
    return bad


def trace_singular_set(atlas, i, grid=512, method="auto", join_tol=None):
    """Trace the singular set of g_i over every chart and join pieces into loops."""
    params = atlas.params
    pieces, violations = [], []
    ends = []   # (piece index, which end 0/1)
    for chart in atlas.charts:
        scan = scan_chart(atlas, chart, i, grid, method)
        violations.extend(gradient_scan(scan, i, params, method))
        pending = []
        for pts, closed in marching_squares(scan.U, scan.V, scan.F):
            proj, res = newton_project(chart, pts, i, params, method)
            if closed:
                pieces.append(SingularCurve(i, chart.name, proj, True, res))
                continue
            # open chains end where the grid leaves the domain; continue to the boundary
            d0 = proj[0] - proj[min(1, len(proj) - 1)]
            d1 = proj[-1] - proj[max(len(proj) - 2, 0)]
            d0 = d0 / (np.hypot(*d0) or 1.0)
            d1 = d1 / (np.hypot(*d1) or 1.0)
            k = len(pieces)
            pieces.append(SingularCurve(i, chart.name, proj, False, res))
            pending.append((k, d0, d1))
        # extend all open chains of this chart to the boundary in one batch
        if pending:
            E = np.array([[pieces[k].points[0], pieces[k].points[-1]] for k, _, _ in pending]).reshape(-1, 2)
            Dd = np.array([[d0, d1] for _, d0, d1 in pending]).reshape(-1, 2)
            ext, sides = _extend_ends(atlas, chart, E, Dd, i, method)
            for j, (k, _, _) in enumerate(pending):
                pc = pieces[k]
                pts = np.vstack([ext[2 * j], pc.points, ext[2 * j + 1]])
                _, res = newton_project(chart, pts, i, params, method, iters=0)
                pc.points, pc.residual = pts, res
                pc.end_sides = (sides[2 * j], sides[2 * j + 1])
                ends += [(k, 0), (k, 1)]
    for pc in pieces:
        _attach_directions(atlas, pc, method)
    loops, open_chains = _join(atlas, pieces, ends, join_tol)
    rmax = max((float(np.max(p.residual / _scale_at(atlas, p, method))) for p in pieces), default=0.0)
    return SingularSet(i, pieces, loops, open_chains, violations, grid, rmax)


def _scale_at(atlas, piece, method):
    d = local_data(atlas.chart(piece.chart), piece.points[:, 0], piece.points[:, 1],
                   piece.component, atlas.params, method)
    return d.scale


def _attach_directions(atlas, piece, method):
    chart = atlas.chart(piece.chart)
    d = local_data(chart, piece.points[:, 0], piece.points[:, 1], piece.component, atlas.params, method)
    T = chart_tangent(d)
    step = np.gradient(piece.points, axis=0).T if len(piece.points) > 1 else T
    T = np.where((T * step).sum(0) < 0, -T, T)
    piece.tangent = T.T
    piece.kernel = d.kernel.T


def _join(atlas, pieces, ends, join_tol):
    """Pair open ends across glue edges and assemble loops of (piece, reversed)."""
    size = max(max(abs(b) for b in c.domain.bbox) for c in atlas.charts)
    tol = join_tol if join_tol is not None else 1e-5 * max(size, 1.0)
    partner = {}
    for k, e in ends:
        pc = pieces[k]
        chart = atlas.chart(pc.chart)
        p = pc.points[0] if e == 0 else pc.points[-1]
        side = pc.end_sides[e]
        best = None
        for cb, sb, q in _map_across(atlas, chart, side, p):
            for k2, e2 in ends:
                if (k2, e2) == (k, e):
                    continue
                o = pieces[k2]
                if o.chart != cb or o.end_sides[e2] != sb:
                    continue
                r = o.points[0] if e2 == 0 else o.points[-1]
                dist = float(np.hypot(*(r - q)))
                if dist < tol and (best is None or dist < best[0]):
                    best = (dist, (k2, e2))
        if best is not None:
            partner[(k, e)] = best[1]
    loops, used = [], set()
    open_chains = []
    for k, pc in enumerate(pieces):
        if pc.closed:
            loops.append([(k, False)])
            used.add(k)
    for k in range(len(pieces)):
        if k in used:
            continue
        # walk forward from end 1 of piece k
        loop = [(k, False)]
        used.add(k)
        cur, exit_end = k, 1
        closed = False
        while True:
            nxt = partner.get((cur, exit_end))
            if nxt is None or partner.get(nxt) != (cur, exit_end):
                break
            k2, e2 = nxt
            if k2 == k and e2 == 0:
                closed = True
                break
            if k2 in used:
                break
            loop.append((k2, e2 == 1))
            used.add(k2)
            cur, exit_end = k2, 1 - e2
        if closed:
            loops.append(loop)
        else:
            open_chains.append(loop)
    return loops, open_chains


# classification -------------------------------------------------------------------

@dataclass
class CuspRecord:
    component: int
    chart: str
    location: np.ndarray       # (u, v)
    sign: int
    tangency: float            # d/ds of the kernel/tangent transversality (nonzero at a 1-tangency)
    image: np.ndarray          # point of S_i
    kernel: np.ndarray
    tangent: np.ndarray
    cross: float               # |det[kernel, tangent]| in chart coordinates
    fold_value: float          # normalized fold determinant (vanishes at cusps)
    loop: int
    sign_normal_form: int = 0
    sign_sampled: int = 0
    cubic: float = 0.0

    def as_dict(self):
        return {"chart": self.chart, "u": float(self.location[0]), "v": float(self.location[1]),
                "sign": self.sign, "tangency": self.tangency, "cross": self.cross}


@dataclass
class LoopSamples:
    """Per-sample data along one loop (or open chain), kernel orientation made continuous."""

    charts: list
    points: np.ndarray
    t: np.ndarray
    fold: np.ndarray
    kernel4: np.ndarray        # (m, 4) kernel pushed to R^4
    closed: bool
    piece_of: np.ndarray       # piece index per sample
    image: np.ndarray = None   # (m, 3) points of S_i
    grad: np.ndarray = None    # (m,) normalized gradient size


@dataclass
class Classification:
    component: int
    samples: list              # LoopSamples per loop/chain
    cusps: list
    degenerate: list           # (chart, u, v, t, dt/ds) tangency failures
    labels: list               # per loop: array of FOLD/CUSP strings per sample
    min_fold_t: float = np.inf

    @property
    def n_plus(self):
        return sum(1 for c in self.cusps if c.sign > 0)

    @property
    def n_minus(self):
        return sum(1 for c in self.cusps if c.sign < 0)


def _kernel4(d):
    return (d.xu * d.kernel[0] + d.xv * d.kernel[1])


def _loop_samples(atlas, sset, chain, closed, method):
    charts, pts, ts, folds, k4s, owner, imgs, grads = [], [], [], [], [], [], [], []
    for idx, rev in chain:
        pc = sset.pieces[idx]
        P = pc.points[::-1] if rev else pc.points
        d = local_data(atlas.chart(pc.chart), P[:, 0], P[:, 1], sset.component, atlas.params, method)
        charts += [pc.chart] * len(P)
        pts.append(P)
        ts.append(transversality(d))
        folds.append(fold_determinant(d, atlas.chart(pc.chart).orientation))
        k4s.append(_kernel4(d).T)
        owner.append(np.full(len(P), idx))
        imgs.append(d.g.T)
        grads.append(normalized_gradient(d))
    t = np.concatenate(ts)
    fold = np.concatenate(folds)
    k4 = np.vstack(k4s)
    # continuity of the kernel orientation along the loop, in R^4
    flip = np.ones(len(t))
    for j in range(1, len(t)):
        s = flip[j - 1] * np.sign((k4[j] * k4[j - 1]).sum() or 1.0)
        flip[j] = s
    return LoopSamples(charts, np.vstack(pts), t * flip, fold * flip, k4 * flip[:, None],
                       closed, np.concatenate(owner), np.vstack(imgs), np.concatenate(grads))


def _oriented_t(atlas, chart, pts, i, ref4, method):
    d = local_data(atlas.chart(chart), pts[:, 0], pts[:, 1], i, atlas.params, method)
    k4 = _kernel4(d).T
    s = np.sign((k4 * ref4).sum(1))
    s = np.where(s == 0, 1.0, s)
    return transversality(d) * s, d


def _refine_cusps(atlas, i, cands, method, tol=1e-9, iters=60):
    """Bisection on the transversality between pairs of same-chart samples, batched per chart."""
    out = []
    by_chart = {}
    for c in cands:
        by_chart.setdefault(c["chart"], []).append(c)
    for chart, group in by_chart.items():
        a = np.array([c["a"] for c in group])
        b = np.array([c["b"] for c in group])
        ta = np.array([c["ta"] for c in group])
        ref = np.array([c["ref"] for c in group])
        done = np.zeros(len(group), bool)
        best = a.copy()
        for _ in range(iters):
            m = 0.5 * (a + b)
            m, _res = newton_project(atlas.chart(chart), m, i, atlas.params, method)
            tm, _ = _oriented_t(atlas, chart, m, i, ref, method)
            best = np.where(done[:, None], best, m)
            done |= np.abs(tm) < tol
            done |= np.hypot(*(b - a).T) < 1e-14
            if done.all():
                break
            same = np.sign(tm) == np.sign(ta)
            a = np.where((same & ~done)[:, None], m, a)
            b = np.where((~same & ~done)[:, None], m, b)
        for c, p in zip(group, best):
            out.append(dict(c, point=p))
    return out


def tangency_derivative(atlas, chart, p, i, ref4, method="auto", delta=1e-4):
    """d/ds of the transversality along the curve at p (s = arclength in the metric)."""
    ch = atlas.chart(chart)
    d = local_data(ch, p[:1], p[1:], i, atlas.params, method)
    T = chart_tangent(d)[:, 0]
    q = np.array([p - delta * T, p + delta * T])
    q, _ = newton_project(ch, q, i, atlas.params, method)
    tq, dq = _oriented_t(atlas, chart, q, i, ref4[None], method)
    X = ch.point(q[:, 0], q[:, 1], atlas.params)
    ds = np.linalg.norm(X[:, 1] - X[:, 0])
    # orient s along the kernel so the sign of the derivative is meaningful
    step4 = X[:, 1] - X[:, 0]
    if (step4 * ref4).sum() < 0:
        ds = -ds
    return float((tq[1] - tq[0]) / ds)


def classify_points(atlas, sset, method="auto", t_tol=1e-9, tangency_tol=1e-4, raise_degenerate=False):
    """Fold/cusp labels along every traced loop, refined cusps and their signs."""
    i = sset.component
    chains = [(c, True) for c in sset.loops] + [(c, False) for c in sset.open_chains]
    samples, cands = [], []
    for li, (chain, closed) in enumerate(chains):
        ls = _loop_samples(atlas, sset, chain, closed, method)
        samples.append(ls)
        m = len(ls.t)
        pairs = [(j, j + 1) for j in range(m - 1)]
        if closed:
            pairs.append((m - 1, 0))
        for a, b in pairs:
            tb = ls.t[b]
            if b < a:
                # the kernel line field may come back reversed after one turn
                tb = tb * np.sign((ls.kernel4[a] * ls.kernel4[b]).sum() or 1.0)
            if np.sign(ls.t[a]) == np.sign(tb) and ls.t[a] != 0:
                continue
            if ls.charts[a] == ls.charts[b] and ls.piece_of[a] == ls.piece_of[b]:
                cands.append(dict(chart=ls.charts[a], a=ls.points[a], b=ls.points[b],
                                  ta=ls.t[a], ref=ls.kernel4[a], loop=li))
            else:
                # the sign change sits on a glue edge: keep the endpoint closer to zero
                j = a if abs(ls.t[a]) <= abs(ls.t[b]) else b
                cands.append(dict(chart=ls.charts[j], a=ls.points[j], b=ls.points[j],
                                  ta=ls.t[j], ref=ls.kernel4[j], loop=li))
    refined = _refine_cusps(atlas, i, cands, method, t_tol)
    cusps, degenerate = [], []
    for c in refined:
        p = c["point"]
        dt = tangency_derivative(atlas, c["chart"], p, i, c["ref"], method)
        ch = atlas.chart(c["chart"])
        d = local_data(ch, p[:1], p[1:], i, atlas.params, method)
        if abs(dt) < tangency_tol:
            degenerate.append((c["chart"], float(p[0]), float(p[1]), float(transversality(d)[0]), dt))
            continue
        sign_nf, cubic = normal_form_sign(ch, p, i, atlas.params, method)
        sign_smp = sampled_sign(ch, p, i, atlas.params, method)
        cusps.append(CuspRecord(
            i, c["chart"], p, sign_nf if sign_nf == sign_smp else 0, dt, d.g[:, 0],
            d.kernel[:, 0] / np.hypot(*d.kernel[:, 0]), chart_tangent(d)[:, 0],
            float(abs(kernel_tangent_cross(d)[0])), float(fold_determinant(d, ch.orientation)[0]), c["loop"],
            sign_nf, sign_smp, cubic))
    if degenerate and raise_degenerate:
        raise DegenerateTangency(f"{len(degenerate)} singular points with degenerate tangency")
    labels = [np.full(len(s.t), FOLD, dtype=object) for s in samples]
    fold_t = [np.abs(s.t) for s in samples if len(s.t)]
    mn = float(min((x.min() for x in fold_t), default=np.inf))
    return Classification(i, samples, cusps, degenerate, labels, mn)


# cusp signs -------------------------------------------------------------------------

def _adapted_jets(chart, p, i, params, method):
    """g_i near p in adapted coordinates: source (s, t) with t along the kernel,
    target orthographic coordinates (G1, G2) with G2 along the image of dg.
    Both coordinate changes preserve orientation."""
    d = local_data(chart, p[:1], p[1:], i, params, method)
    k = d.kernel[:, 0] / np.hypot(*d.kernel[:, 0])
    w = np.array([k[1], -k[0]]) * chart.orientation
    N = d.g[:, 0] / np.linalg.norm(d.g[:, 0])
    img = d.dg[:, :, 0] @ w
    what = img / np.linalg.norm(img)
    c = np.cross(what, N)
    g = [x[0] for x in d.gjets]
    G1 = sum(((g[m] - g[m].value) * c[m] for m in range(3)), Jet2.constant(0.0, 3))
    G2 = sum(((g[m] - g[m].value) * what[m] for m in range(3)), Jet2.constant(0.0, 3))
    s = Jet2.variable(0.0, 0, 3)
    t = Jet2.variable(0.0, 1, 3)
    du = s * w[0] + t * k[0]
    dv = s * w[1] + t * k[1]
    return G1.compose(du, dv), G2.compose(du, dv), d


def _cubic_coefficient(G1, G2):
    """b in G ~ (a s t + b t^3, s) after taking G2 as the new first source coordinate."""
    alpha = G2.c[1]
    sp = Jet2.variable(0.0, 0, 3)
    t = Jet2.variable(0.0, 1, 3)
    phi = sp / alpha
    for _ in range(4):
        phi = phi + (sp - G2.compose(phi, t)) / alpha
    return float(G1.compose(phi, t).coeff(0, 3))


def normal_form_sign(chart, p, i, params=None, method="auto"):
    """Cusp sign from the 3-jet: with the second target coordinate taken as the new
    first source coordinate, g_i ~ (a s t + b t^3, s) and the map is orientation
    preserving on the injective side iff b < 0.  Returns (sign, b)."""
    G1, G2, _ = _adapted_jets(chart, p, i, params, method)
    b = _cubic_coefficient(G1, G2)
    return (-1 if b > 0 else 1), b


def planar_cusp_sign(F1, F2):
    """Sign of a cusp of a plane map F = (F1, F2) given by order-3 jets at the cusp.

    The same reduction as :func:`normal_form_sign`, with the source split into
    the kernel k of dF and w = (k2, -k1), and the target into dF(w)/|dF(w)|
    and its clockwise normal, so both coordinate changes preserve orientation.
    Returns (sign, b).
    """
    F1, F2 = F1.truncate(3), F2.truncate(3)
    D = np.array([[F1.c[1], F1.c[2]], [F2.c[1], F2.c[2]]], dtype=float)
    _, sv, vt = np.linalg.svd(D)
    if sv[0] == 0 or sv[1] > 1e-10 * sv[0]:
        raise DegenerateTangency("dF does not have rank one")
    k = vt[1]
    w = np.array([k[1], -k[0]])
    img = D @ w
    what = img / np.linalg.norm(img)
    c = np.array([what[1], -what[0]])
    G1 = (F1 - F1.value) * c[0] + (F2 - F2.value) * c[1]
    G2 = (F1 - F1.value) * what[0] + (F2 - F2.value) * what[1]
    s = Jet2.variable(0.0, 0, 3)
    t = Jet2.variable(0.0, 1, 3)
    du = s * w[0] + t * k[0]
    dv = s * w[1] + t * k[1]
    b = _cubic_coefficient(G1.compose(du, dv), G2.compose(du, dv))
    return (-1 if b > 0 else 1), b


def sampled_sign(chart, p, i, params=None, method="auto", delta=1e-2, eps=1e-3):
    """Cusp sign by sampling: find the side of the singular curve whose image falls
    outside the cusp of the image curve and read off the sign of J(g_i) there."""
    from .invariants import jacobian_from_frame
    d = local_data(chart, p[:1], p[1:], i, params, method)
    T = chart_tangent(d)[:, 0]
    n = d.grad[:, 0] / np.hypot(*d.grad[:, 0])
    q = np.array([p - delta * T, p + delta * T])
    q, _ = newton_project(chart, q, i, params, method)
    dq = local_data(chart, q[:, 0], q[:, 1], i, params, method)
    c0 = d.g[:, 0]
    axis = 0.5 * (dq.g[:, 0] + dq.g[:, 1]) - c0
    sides = np.array([p + eps * n, p - eps * n])
    ds = local_data(chart, sides[:, 0], sides[:, 1], i, params, method)
    along = ((ds.g - c0[:, None]) * axis[:, None]).sum(0)
    inj = int(np.argmin(along))
    X = chart.jets(sides[inj:inj + 1, 0], sides[inj:inj + 1, 1], 2, params)
    fr = frame_from_jets(X, _method(chart, method), chart.orientation)
    J = jacobian_from_frame(fr, i)[0]
    return 1 if J > 0 else -1


# genericity checks ----------------------------------------------------------------------

@dataclass
class CheckReport:
    name: str
    passed: bool
    value: float = float("nan")
    witnesses: list = field(default_factory=list)
    detail: str = ""


def check_G1(sset, classification=None, threshold=1e-6, strict=False):
    """(G1): the gradient of K +- K^N does not vanish on its zero set.

    The minimum of the normalized gradient along the traced curves is compared
    with ``threshold``; grid nodes where the function and its gradient both
    vanish (collected while tracing) are failures as well.  With ``strict`` a
    failure raises GradientVanishes instead of being returned.
    """
    vals = []
    if classification is not None:
        vals = [s.grad for s in classification.samples if s.grad is not None and len(s.grad)]
    mn = float(min((v.min() for v in vals), default=np.inf))
    wit = list(sset.g1_violations[:10])
    passed = not sset.g1_violations and mn > threshold
    detail = "gradient vanishes on the singular set" if sset.g1_violations else ""
    if sset.g1_violations:
        mn = 0.0
    if strict and not passed:
        where = f" at {wit[0]}" if wit else ""
        raise GradientVanishes(f"(G1) fails: normalized gradient {mn:.3g}{where}")
    return CheckReport("G1", passed, mn, wit, detail)


def check_G2(sset, classification, g1=None):
    """(G2): singular points are folds except finitely many cusps with nonzero 1-tangency."""
    g1 = g1 or check_G1(sset, classification)
    if not g1.passed:
        return CheckReport("G2", False, float("nan"), [], "G1 fails")
    bad = list(classification.degenerate)
    unsigned = [c for c in classification.cusps if c.sign == 0]
    passed = not bad
    mn = min((abs(c.tangency) for c in classification.cusps), default=float("inf"))
    detail = f"{len(classification.cusps)} cusps"
    if unsigned:
        detail += f", {len(unsigned)} with inconclusive sign"
    return CheckReport("G2", passed, mn, bad, detail)


def check_G3(classification, tol=1e-4 * RADIUS, angle_tol=1e-4, min_run=4):
    """(G3): self-intersections of the singular values are isolated transverse pairs,
    and no cusp value meets another singular value.

    Image polylines are bucketed on a spatial hash; segment pairs closer than
    ``tol`` are coincidences.  Pairs that are neighbours along the same curve,
    or both lie on the two branches next to the same cusp, are intrinsic and
    skipped.  A coincidence persisting over ``min_run`` consecutive segments of
    one curve is an overlap, hence tangential, whatever the chord angles say.
    """
    segs, owner = [], []
    for li, s in enumerate(classification.samples):
        m = len(s.image)
        idx = list(range(m - 1)) + ([m - 1] if s.closed and m > 2 else [])
        for j in idx:
            segs.append((s.image[j], s.image[(j + 1) % m]))
            owner.append((li, j, m, s.closed))
    if not segs:
        return CheckReport("G3", True, float("inf"), [], "empty singular set")
    A = np.array([a for a, _ in segs])
    B = np.array([b for _, b in segs])
    L = np.linalg.norm(B - A, axis=1)
    cell = max(float(L.max()), tol) * 2
    keys = np.floor(0.5 * (A + B) / cell).astype(np.int64)
    buckets = {}
    for n, k in enumerate(map(tuple, keys)):
        buckets.setdefault(k, []).append(n)
    # cusp windows: samples whose image lies near a cusp image on the same loop
    reach = 10 * tol ** (2.0 / 3.0)
    window = {}
    for ci, c in enumerate(classification.cusps):
        s = classification.samples[c.loop]
        near = np.linalg.norm(s.image - c.image, axis=1) < reach
        for j in np.nonzero(near)[0]:
            window.setdefault((c.loop, int(j)), set()).add(ci)
    # candidate pairs from neighbouring buckets, then all geometric tests at once
    offs = [(a, b, c) for a in (-1, 0, 1) for b in (-1, 0, 1) for c in (-1, 0, 1)]
    I, J = [], []
    for k, members in buckets.items():
        for o in offs:
            other = buckets.get((k[0] + o[0], k[1] + o[1], k[2] + o[2]))
            if other is None:
                continue
            for n in members:
                for m2 in other:
                    if m2 > n:
                        I.append(n)
                        J.append(m2)
    I, J = np.array(I, dtype=np.int64), np.array(J, dtype=np.int64)
    keep = np.ones(len(I), bool)
    for e in range(len(I)):
        (l1, j1, len1, cl1), (l2, j2, _, _) = owner[I[e]], owner[J[e]]
        if l1 == l2:
            dj = abs(j1 - j2)
            if cl1:
                dj = min(dj, len1 - dj)
            if dj <= 2:
                keep[e] = False
                continue
            w1 = window.get((l1, j1), set()) | window.get((l1, j1 + 1), set())
            w2 = window.get((l2, j2), set()) | window.get((l2, j2 + 1), set())
            if w1 & w2:
                keep[e] = False
    I, J = I[keep], J[keep]
    events = []
    if len(I):
        d, P = _segment_distance(A[I], B[I], A[J], B[J])
        hit = (d < tol) | _crossing_on_sphere(A[I], B[I], A[J], B[J])
        U1 = (B[I] - A[I]) / np.where(L[I] > 0, L[I], 1.0)[:, None]
        U2 = (B[J] - A[J]) / np.where(L[J] > 0, L[J], 1.0)[:, None]
        ang = np.arccos(np.minimum(1.0, np.abs((U1 * U2).sum(1))))
        # sorted for a deterministic event order
        for e in np.lexsort((J, I))[hit[np.lexsort((J, I))]]:
            events.append((int(I[e]), int(J[e]), P[e], float(ang[e])))
    failures = []
    # (a) cusp values meeting other singular values
    for ci, c in enumerate(classification.cusps):
        # point-to-segment distances, all segments at once
        dv = B - A
        lam = np.clip(((c.image - A) * dv).sum(1) / np.maximum(L ** 2, 1e-300), 0.0, 1.0)
        dist = np.linalg.norm(A + lam[:, None] * dv - c.image, axis=1)
        for n in np.nonzero(dist < tol)[0]:
            li, j, _, _ = owner[n]
            if ci in window.get((li, j), set()) or ci in window.get((li, j + 1), set()):
                continue
            failures.append(("cusp value on singular values", c.chart, float(c.location[0]), float(c.location[1])))
            break
    # (b) tangential coincidences: a near-parallel pair, or a run of consecutive
    # segments that all stay within tol of the same other curve (chords of an
    # overlap sampled at offset parameters are never exactly parallel)
    min_angle = float("inf")
    overlap = _overlap_events(events, owner, min_run)
    for e, (n, m2, p, ang) in enumerate(events):
        min_angle = min(min_angle, ang)
        if ang <= angle_tol and e not in overlap:
            failures.append(("tangential coincidence", tuple(np.round(p, 8))))
    for e in sorted(set(overlap.values())):
        min_angle = 0.0
        failures.append(("tangential coincidence", tuple(np.round(events[e][2], 8))))
    # (c) triples: cluster coincidence points and count distinct branches
    clusters = []
    for e, (n, m2, p, ang) in enumerate(events):
        if e in overlap:
            continue
        for cl in clusters:
            if np.linalg.norm(cl["p"] - p) < 10 * tol:
                cl["segs"].update((n, m2))
                break
        else:
            clusters.append({"p": p, "segs": {n, m2}})
    for cl in clusters:
        branches = _branches(sorted(cl["segs"]), owner)
        if branches >= 3:
            failures.append(("multiple coincidence", branches, tuple(np.round(cl["p"], 8))))
    detail = f"{len(clusters)} transverse double points"
    return CheckReport("G3", not failures, min_angle, failures, detail)


def _overlap_events(events, owner, min_run):
    """Events belonging to runs of at least ``min_run`` consecutive segments of one
    curve coinciding with a single other curve.  Maps event index to the index of
    a representative event (the middle of its run)."""
    by_pair = {}
    for e, (n, m2, _, _) in enumerate(events):
        for a, b in ((n, m2), (m2, n)):
            la, ja, _, _ = owner[a]
            by_pair.setdefault((la, owner[b][0]), {}).setdefault(ja, []).append(e)
    out = {}
    for idx in by_pair.values():
        js = sorted(idx)
        start = 0
        for k in range(1, len(js) + 1):
            if k == len(js) or js[k] != js[k - 1] + 1:
                run = js[start:k]
                if len(run) >= min_run:
                    members = sorted({e for j in run for e in idx[j]})
                    rep = idx[run[len(run) // 2]][0]
                    for e in members:
                        out.setdefault(e, rep)
                start = k
    return out


def _branches(seg_ids, owner):
    """Number of distinct curve branches among segments (runs of nearby indices merge)."""
    runs = 0
    last = None
    for n in seg_ids:
        li, j, m, _ = owner[n]
        if last is None or last[0] != li or abs(j - last[1]) > 3:
            runs += 1
        last = (li, j)
    return runs


def _crossing_on_sphere(p0, p1, q0, q1):
    """Proper crossings of pairs of short chords (rows of the (k, 3) inputs) after
    projecting onto the tangent plane of the sphere at their common centroid
    (chords bow by their sagitta, so a 3D distance test alone can miss genuine
    crossings)."""
    c = (p0 + p1 + q0 + q1) / 4.0
    n = c / np.linalg.norm(c, axis=1, keepdims=True)
    ref = np.where((np.abs(n[:, 0]) < 0.9)[:, None], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    e1 = np.cross(n, ref)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(n, e1)
    P = [np.stack([(x * e1).sum(1), (x * e2).sum(1)], 1) for x in (p0, p1, q0, q1)]

    def orient(a, b, c):
        return (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])

    d1, d2 = orient(P[2], P[3], P[0]), orient(P[2], P[3], P[1])
    d3, d4 = orient(P[0], P[1], P[2]), orient(P[0], P[1], P[3])
    return (d1 * d2 < 0) & (d3 * d4 < 0)


def _segment_distance(p0, p1, q0, q1):
    """Minimal distances between pairs of 3D segments (rows of the (k, 3) inputs)
    and the midpoints of the closest pairs."""
    d1, d2, r = p1 - p0, q1 - q0, p0 - q0
    a, e = (d1 * d1).sum(1), (d2 * d2).sum(1)
    b, c, f = (d1 * d2).sum(1), (d1 * r).sum(1), (d2 * r).sum(1)
    ga, ge = a > 1e-30, e > 1e-30
    sa, se = np.where(ga, a, 1.0), np.where(ge, e, 1.0)
    den = a * e - b * b
    s = np.where(den > 1e-30, np.clip((b * f - c * e) / np.where(den > 1e-30, den, 1.0), 0, 1), 0.0)
    t = (b * s + f) / se
    lo, hi = t < 0, t > 1
    s = np.where(lo, np.clip(-c / sa, 0, 1), np.where(hi, np.clip((b - c) / sa, 0, 1), s))
    t = np.clip(t, 0, 1)
    # degenerate segments
    s = np.where(~ge, np.clip(-c / sa, 0, 1), s)
    t = np.where(~ge, 0.0, t)
    t = np.where(~ga, np.clip(f / se, 0, 1), t)
    s = np.where(~ga, 0.0, s)
    cp, cq = p0 + s[:, None] * d1, q0 + t[:, None] * d2
    return np.linalg.norm(cp - cq, axis=1), 0.5 * (cp + cq)


def kernel_consistency(atlas, sset, method="auto"):
    """At traced points: numerical rank of dg_i (ratio of singular values) and the
    angle between the kernel of dg_i and the kernel of the Pfaffian pair."""
    worst_ratio, worst_angle = 0.0, 0.0
    for pc in sset.pieces:
        d = local_data(atlas.chart(pc.chart), pc.points[:, 0], pc.points[:, 1], pc.component,
                       atlas.params, method)
        M = np.moveaxis(d.dg, -1, 0)                       # (n, 3, 2)
        _, s, vt = np.linalg.svd(M)
        ratio = s[:, 1] / s[:, 0]
        kd = vt[:, 1, :]                                   # chart-coordinate kernel of dg
        kp = (d.kernel / np.hypot(d.kernel[0], d.kernel[1])).T
        ang = np.arcsin(np.clip(np.abs(kd[:, 0] * kp[:, 1] - kd[:, 1] * kp[:, 0]), 0, 1))
        worst_ratio = max(worst_ratio, float(ratio.max()))
        worst_angle = max(worst_angle, float(ang.max()))
    return worst_ratio, worst_angle


def fold_equivalence(classification):
    """Compare the fold determinant with the kernel transversality along every loop.

    Both vanish exactly at cusps, so they must change sign between the same
    consecutive samples.  Returns (number of disagreeing sample pairs, smallest
    ratio |fold| / |t| over the samples, largest |fold determinant| at a cusp).
    """
    bad, ratio = 0, np.inf
    for s in classification.samples:
        m = len(s.t)
        if m < 2:
            continue
        a, b = np.sign(s.t), np.sign(s.fold)
        ch_t, ch_f = a[1:] != a[:-1], b[1:] != b[:-1]
        if s.closed:
            flip = np.sign((s.kernel4[-1] * s.kernel4[0]).sum() or 1.0)
            ch_t = np.append(ch_t, a[0] * flip != a[-1])
            ch_f = np.append(ch_f, b[0] * flip != b[-1])
        bad += int(np.sum(ch_t != ch_f))
        ratio = min(ratio, float((np.abs(s.fold) / np.abs(s.t)).min()))
    at_cusps = max((abs(c.fold_value) for c in classification.cusps), default=0.0)
    return bad, ratio, at_cusps


def rank_scan(atlas, n=128, method="auto", tol=1e-6):
    """Rank of the Gauss map differential on a grid over every chart.

    Reports rank-deficient points with (K, Delta) there and checks that rank < 2
    happens exactly where K and Delta both vanish (to ``tol``).
    """
    from .gaussmap import rank_dg
    from .invariants import curvatures
    deficient, mismatch, total = [], 0, 0
    for chart in atlas.charts:
        U, V, mask = atlas.interior_grid(chart, n)
        u, v = U[mask], V[mask]
        _, _, cf = _forms(chart, u, v, 2, atlas.params, method)
        r = rank_dg(cf)
        inv = curvatures(cf)
        both = (np.abs(inv.K) < tol) & (np.abs(inv.Delta) < tol)
        mismatch += int(np.sum((r < 2) != both))
        total += u.size
        for j in np.nonzero(r < 2)[0][:20]:
            deficient.append((chart.name, float(u[j]), float(v[j]), float(inv.K[j]), float(inv.Delta[j])))
    passed = not deficient and mismatch == 0
    return CheckReport("rank", passed, float(total), deficient, f"{mismatch} Little-criterion mismatches")
