"""Regions M_i^+ / M_i^-, Euler characteristics, and the Gauss-Bonnet type identities.

Each chart domain is triangulated on a structured grid (rectangle cells, or
polar sectors for implicit domains).  Vertices are mapped to R^4 and merged
when they coincide there, which performs every gluing at once: periodic sides,
sheets meeting along h = 0, sides collapsed to a pole.  Triangles that
collapse under the merge are dropped.

Regions are full subcomplexes: M_i^+ is the set of simplices all of whose
vertices have K +- K^N >= 0 (and M_i^- those with all vertices < 0).  Because
the sign-change locus is a union of circles, the simplices with mixed signs
form annuli whose mixed edges and triangles pair up, so
chi(M) = chi(M^+) + chi(M^-) holds exactly for every mesh.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .atlas import ImplicitDomain, RectDomain
from .errors import GenericityViolation, MeshInconsistent
from .integrate import boundary_corners, curve_integral_kg, integrate_fields
from .singular import (check_G1, check_G2, classify_points, field_values,
                       trace_singular_set)


@dataclass
class Mesh:
    points: np.ndarray       # (V, 4) merged vertices in R^4
    triangles: np.ndarray    # (F, 3) vertex indices
    charts: list             # chart name per vertex (first representative)
    uv: np.ndarray           # (V, 2) evaluation point in that chart (nudged inside)
    boundary_edges: int = 0  # edges on a single triangle (0 for a closed surface)

    @property
    def edges(self):
        e = np.vstack([self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def euler_characteristic(self):
        return len(self.points) - len(self.edges) + len(self.triangles)


@dataclass
class RegionDecomposition:
    component: int
    mesh: Mesh
    vertex_sign: np.ndarray      # +1 / -1 per vertex
    labels: np.ndarray           # per triangle: +1, -1, or 0 where signs are mixed

    def subcomplex_chi(self, sign):
        return euler_characteristic(self, sign)

    def n_components(self, sign):
        """Number of connected components of the full subcomplex on vertices of ``sign``."""
        keep = self.vertex_sign == sign
        if not keep.any():
            return 0
        e = self.mesh.edges
        e = e[keep[e[:, 0]] & keep[e[:, 1]]]
        n = len(keep)
        g = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
        _, lab = connected_components(g, directed=False)
        return len(np.unique(lab[keep]))


# meshing ----------------------------------------------------------------------------

def _rect_grid(dom, n):
    m = n
    uu = np.linspace(dom.umin, dom.umax, n + 1)
    vv = np.linspace(dom.vmin, dom.vmax, m + 1)
    U, V = np.meshgrid(uu, vv, indexing="ij")
    # evaluate signs slightly inside: poles and periodic seams are chart singularities
    du, dv = (dom.umax - dom.umin) * 1e-6, (dom.vmax - dom.vmin) * 1e-6
    Ue = np.clip(U, dom.umin + du, dom.umax - du)
    Ve = np.clip(V, dom.vmin + dv, dom.vmax - dv)
    return U, V, Ue, Ve


def _sector_grid(dom, params, n, corners):
    """(t, phi) grid: t in [0, 1] from the boundary (t = 0) to the center (t = 1)."""
    if not corners:
        corners = [0.0]
    edges = list(corners) + [corners[0] + 2 * np.pi]
    m = max(4, n // 2)
    w = np.linspace(0.0, 1.0, m + 1)
    phis = []
    for a, b in zip(edges[:-1], edges[1:]):
        phis.append(a + (b - a) * 0.5 * (1 - np.cos(np.pi * w[:-1])))
    phi = np.concatenate(phis + [[edges[-1]]])
    rb, _ = dom.boundary_radius(phi, params)
    t = np.linspace(0.0, 1.0, n + 1)
    T, P = np.meshgrid(t, np.arange(len(phi)), indexing="ij")
    cu, cv = dom.center
    rho = rb[P] * (1 - T ** 2)
    U = cu + rho * np.cos(phi[P])
    V = cv + rho * np.sin(phi[P])
    # boundary vertices sit where the chart degenerates; read their signs just inside
    te = np.maximum(T, 1e-4)
    rho_e = rb[P] * (1 - te ** 2)
    return U, V, cu + rho_e * np.cos(phi[P]), cv + rho_e * np.sin(phi[P])


def _grid_triangles(shape, offset):
    a, b = shape
    idx = np.arange(a * b).reshape(a, b) + offset
    p, q, r, s = idx[:-1, :-1], idx[1:, :-1], idx[1:, 1:], idx[:-1, 1:]
    return np.vstack([np.stack([p, q, r], -1).reshape(-1, 3), np.stack([p, r, s], -1).reshape(-1, 3)])


def build_mesh(atlas, n=128, merge_tol=None):
    """Glued triangulation of the whole atlas; see the module docstring."""
    pts, uvs, tris, names = [], [], [], []
    offset = 0
    for chart in atlas.charts:
        dom = chart.domain
        if isinstance(dom, RectDomain):
            U, V, Ue, Ve = _rect_grid(dom, n)
        elif isinstance(dom, ImplicitDomain):
            U, V, Ue, Ve = _sector_grid(dom, atlas.params, n, boundary_corners(dom, atlas.params))
        else:
            raise TypeError(f"unsupported domain {type(dom).__name__}")
        P = chart.point(U.ravel(), V.ravel(), atlas.params).T
        P = np.nan_to_num(P, nan=0.0)
        pts.append(P)
        uvs.append(np.stack([Ue.ravel(), Ve.ravel()], 1))
        tris.append(_grid_triangles(U.shape, offset))
        names += [chart.name] * P.shape[0]
        offset += P.shape[0]
    P = np.vstack(pts)
    UV = np.vstack(uvs)
    F = np.vstack(tris)
    size = float(np.ptp(P, axis=0).max()) or 1.0
    tol = merge_tol if merge_tol is not None else 1e-6 * size
    rep = _merge(P, tol)
    uniq, inv = np.unique(rep, return_inverse=True)
    F = inv[F]
    F = F[(F[:, 0] != F[:, 1]) & (F[:, 1] != F[:, 2]) & (F[:, 0] != F[:, 2])]
    key = np.sort(F, axis=1)
    _, first = np.unique(key, axis=0, return_index=True)
    if len(first) != len(F):
        raise MeshInconsistent("triangles coincide after gluing")
    mesh = Mesh(P[uniq], F, [names[j] for j in uniq], UV[uniq])
    _check_manifold(mesh)
    return mesh


def _merge(P, tol):
    """Representative (smallest) index per point, uniting points closer than ``tol``."""
    pairs = cKDTree(P).query_pairs(tol, output_type="ndarray")
    n = len(P)
    g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, lab = connected_components(g, directed=False)
    first = np.full(lab.max() + 1, n)
    np.minimum.at(first, lab, np.arange(n))
    return first[lab]


def _check_manifold(mesh):
    """Every edge of a closed glued mesh lies on exactly two triangles."""
    t = mesh.triangles
    e = np.sort(np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    mesh.boundary_edges = int(np.sum(counts == 1))
    if np.any(counts > 2):
        raise MeshInconsistent(f"{int(np.sum(counts > 2))} edges on more than two triangles")


def euler_characteristic(region, sign=None):
    """V - E + F of a mesh, or of the full subcomplex of a decomposition on one sign."""
    if isinstance(region, Mesh):
        return region.euler_characteristic()
    mesh = region.mesh
    if sign is None:
        return mesh.euler_characteristic()
    keep = region.vertex_sign == sign
    e = mesh.edges
    t = mesh.triangles
    nv = int(keep.sum())
    ne = int(np.sum(keep[e[:, 0]] & keep[e[:, 1]]))
    nf = int(np.sum(keep[t].all(axis=1)))
    return nv - ne + nf


def decompose(atlas, mesh, i, method="auto"):
    """Label the mesh by the sign of K + (-1)^(i+1) K^N (zero counts as positive)."""
    f = np.empty(len(mesh.points))
    names = np.array(mesh.charts)
    for chart in atlas.charts:
        sel = names == chart.name
        if sel.any():
            f[sel] = field_values(chart, mesh.uv[sel, 0], mesh.uv[sel, 1], i, atlas.params, method)
    s = np.where(f >= 0, 1, -1)
    tri = s[mesh.triangles]
    labels = np.where((tri == 1).all(1), 1, np.where((tri == -1).all(1), -1, 0))
    return RegionDecomposition(i, mesh, s, labels)


# identities -------------------------------------------------------------------------

@dataclass
class ComponentReport:
    component: int
    chi_plus: int
    chi_minus: int
    n_plus_regions: int
    n_minus_regions: int
    S_plus: int
    S_minus: int
    S_unsigned: int
    deg: float
    int_abs: float
    int_abs_err: float
    int_kg: float
    int_kg_err: float
    loops: int
    quine_lhs: int = 0
    quine_rhs: int = 0


@dataclass
class GBReport:
    name: str
    chi_M: int
    topology_hint: int | None
    int_K: float
    int_KN: float
    components: list
    residuals: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)        # name -> bool
    genericity: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return all(self.checks.values())


def gauss_bonnet_report(atlas, grid=512, mesh_n=128, quad_n=64, method="auto",
                        gb_tol=0.02, int_tol=0.05, expected=None):
    """Compute every quantity of the Gauss-Bonnet type identities independently
    and report each identity's residual.

    Integer identities (Quine, chi additivity and the two embedding
    corollaries) are checked exactly with the degrees rounded; GB1 is checked
    relative to 2 pi |chi(M)| (or 2 pi when chi(M) = 0); (KdA) and (NdA) to
    ``int_tol``.  Raises GenericityViolation, carrying the partial report,
    when (G2) fails for either component.  ``expected`` may hold reference
    values (e.g. {"chi_plus": -12}) that are reported side by side.
    """
    atlas.require_closed()
    mesh = build_mesh(atlas, mesh_n)
    chi_M = mesh.euler_characteristic()
    ints = integrate_fields(atlas, ["K", "KN", "J1", "J2", "abs1", "abs2"], quad_n, method)
    rep = GBReport(atlas.name, chi_M, atlas.topology_hint, ints["K"].value, ints["KN"].value, [])
    rep.checks["chi_matches_hint"] = atlas.topology_hint is None or chi_M == atlas.topology_hint
    rep.checks["mesh_closed"] = getattr(mesh, "boundary_edges", 0) == 0
    violated = []
    for i in (1, 2):
        sset = trace_singular_set(atlas, i, grid, method)
        cls = classify_points(atlas, sset, method)
        g1 = check_G1(sset, cls)
        g2 = check_G2(sset, cls, g1)
        rep.genericity[f"G1_{i}"] = g1.passed
        rep.genericity[f"G2_{i}"] = g2.passed
        dec = decompose(atlas, mesh, i, method)
        cp = euler_characteristic(dec, 1)
        cm = euler_characteristic(dec, -1)
        ab = ints[f"abs{i}"]
        deg = ints[f"J{i}"].value / (2 * np.pi)
        if g2.passed:
            kg = curve_integral_kg(atlas, cls, method)
            kg_val, kg_err = kg.value, kg.estimated_error
        else:
            violated.append(i)
            kg_val, kg_err = float("nan"), float("nan")
        cr = ComponentReport(i, cp, cm, dec.n_components(1), dec.n_components(-1),
                             cls.n_plus, cls.n_minus, sum(1 for c in cls.cusps if c.sign == 0),
                             deg, ab.value, ab.estimated_error, kg_val, kg_err, len(sset.loops))
        cr.quine_lhs = 2 * int(np.rint(deg))
        cr.quine_rhs = cp - cm + cr.S_plus - cr.S_minus
        rep.components.append(cr)
    if violated:
        rep.notes.append("identities not asserted: (G2) fails for component(s) "
                         + ", ".join(map(str, violated)))
        raise GenericityViolation("(G2) fails", rep)
    _fill_identities(rep, gb_tol, int_tol)
    if expected:
        rep.notes += [f"expected {k} = {v}" for k, v in expected.items()]
    return rep


def _fill_identities(rep, gb_tol=0.02, int_tol=0.05):
    chi = rep.chi_M
    scale = 2 * np.pi * max(abs(chi), 1)
    r, c = rep.residuals, rep.checks
    tot = 0
    alt = 0
    for cr in rep.components:
        i = cr.component
        q = cr.chi_plus - cr.chi_minus + cr.S_plus - cr.S_minus
        tot += q
        alt += q if i == 1 else -q
        r[f"GB1_{i}"] = 2 * np.pi * chi - cr.int_abs - 2 * cr.int_kg
        c[f"GB1_{i}"] = abs(r[f"GB1_{i}"]) < gb_tol * scale
        r[f"quine_{i}"] = cr.quine_lhs - cr.quine_rhs
        c[f"quine_{i}"] = r[f"quine_{i}"] == 0
        r[f"additivity_{i}"] = chi - cr.chi_plus - cr.chi_minus
        c[f"additivity_{i}"] = r[f"additivity_{i}"] == 0
        c[f"degree_integral_{i}"] = abs(cr.deg - np.rint(cr.deg)) < 0.05
        # embedding corollaries (integer identities; S+ - S- must be even)
        r[f"chM+_{i}"] = 2 * chi - 2 * cr.chi_plus - (cr.S_plus - cr.S_minus)
        c[f"chM+_{i}"] = r[f"chM+_{i}"] == 0
        r[f"chM-_{i}"] = 2 * cr.chi_minus - (cr.S_plus - cr.S_minus)
        c[f"chM-_{i}"] = r[f"chM-_{i}"] == 0
    r["KdA"] = rep.int_K / np.pi - tot
    c["KdA"] = abs(r["KdA"]) < int_tol
    r["NdA"] = rep.int_KN / np.pi - alt
    c["NdA"] = abs(r["NdA"]) < int_tol
