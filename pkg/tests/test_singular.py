import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaussmap4.gaussmap import RADIUS
from gaussmap4.jets import Jet2, polynomial_jet
from gaussmap4.singular import (CUSP, Classification, LoopSamples, check_G1, check_G2, check_G3,
                                classify_points, fold_equivalence, kernel_consistency,
                                planar_cusp_sign, rank_scan, trace_singular_set)

from conftest import atlas_of, example1_sigma, expr_chart, random_cubic_monge, single_atlas


@pytest.fixture(scope="module")
def ex1():
    atlas = atlas_of("example1")
    out = {}
    for i in (1, 2):
        sset = trace_singular_set(atlas, i, 512)
        out[i] = (sset, classify_points(atlas, sset))
    return atlas, out


# plane-map cusps ------------------------------------------------------------------

def _nf(sign3):
    return polynomial_jet({(1, 1): 1.0, (0, 3): sign3}, 3), polynomial_jet({(1, 0): 1.0}, 3)


def preimage_count_sign(c3, eps=1e-3):
    """Sign of det dF on the injective side of F(u, v) = (u v + c3 v^3, u).

    Preimages of (X, Y) are u = Y with v a real root of c3 v^3 + Y v - X, so
    their number is counted exactly on either side of the fold at the cusp.
    """
    out = {}
    for side in (+1, -1):
        u, v = side * eps, 0.0
        X, Y = u * v + c3 * v ** 3, u
        roots = np.roots([c3, 0.0, Y, -X])
        n = int(np.sum(np.abs(roots.imag) < 1e-9))
        det = -(u + 3 * c3 * v ** 2)          # det [[v, u + 3 c3 v^2], [1, 0]]
        out[n] = int(np.sign(det))
    assert sorted(out) == [1, 3]
    return out[1]


@pytest.mark.parametrize("c3", [1.0, -1.0])
def test_normal_form_cusp_signs(c3):
    sign, b = planar_cusp_sign(*_nf(c3))
    assert sign == -int(c3)
    assert preimage_count_sign(c3) == sign


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=8, max_size=8), st.sampled_from([1.0, -1.0]))
def test_cusp_sign_under_linear_changes(m, c3):
    A = np.array(m[:4]).reshape(2, 2) + 2.5 * np.eye(2)    # source change
    B = np.array(m[4:]).reshape(2, 2) + 2.5 * np.eye(2)    # target change
    if abs(np.linalg.det(A)) < 0.2 or abs(np.linalg.det(B)) < 0.2:
        return
    s = Jet2.variable(0.0, 0, 3)
    t = Jet2.variable(0.0, 1, 3)
    u, v = s * A[0, 0] + t * A[0, 1], s * A[1, 0] + t * A[1, 1]
    f1 = u * v + v * v * v * c3
    f2 = u
    G1, G2 = f1 * B[0, 0] + f2 * B[0, 1], f1 * B[1, 0] + f2 * B[1, 1]
    sign, _ = planar_cusp_sign(G1, G2)
    expect = -int(c3) * int(np.sign(np.linalg.det(A) * np.linalg.det(B)))
    assert sign == expect


# Example 1 ------------------------------------------------------------------------

def test_example1_curve_through_origin(ex1):
    _, out = ex1
    sset, cls = out[1]
    assert len(sset.loops) == 1 and not sset.open_chains
    P = np.vstack(sset.loop_points(0))
    assert np.hypot(*P.T).min() < 2e-3
    scale = np.abs(example1_sigma(*P.T)).max() / np.abs(example1_sigma(0.5, 0.5))
    assert scale < 1e-9


def test_example1_origin_cusp(ex1):
    _, out = ex1
    _, cls = out[1]
    r = np.array([np.hypot(*c.location) for c in cls.cusps])
    c = cls.cusps[int(np.argmin(r))]
    assert r.min() < 1e-6
    assert abs(abs(c.kernel[0]) - 1) < 1e-9 and abs(abs(c.tangent[0]) - 1) < 1e-9
    assert c.sign == -1 and c.sign_normal_form == c.sign_sampled
    # two more cusps on the same curve inside the radius-0.5 disk
    assert sorted(np.round(r[r < 0.5], 3).tolist()) == [0.0, 0.412, 0.495]


def test_example1_fold_points_near_origin(ex1):
    _, out = ex1
    _, cls = out[1]
    s = cls.samples[0]
    r = np.hypot(*s.points.T)
    near = (r > 0.01) & (r < 0.3)
    assert near.sum() > 10
    assert np.all(np.abs(s.t[near]) > 1e-4)
    assert all(lab != CUSP for lab in cls.labels[0][near])


def test_example1_other_component_avoids_origin(ex1):
    _, out = ex1
    sset, _ = out[2]
    P = np.vstack([p.points for p in sset.pieces])
    assert np.hypot(*P.T).min() > 0.3


def test_example1_genericity(ex1):
    _, out = ex1
    for i in (1, 2):
        sset, cls = out[i]
        g1 = check_G1(sset, cls)
        assert g1.passed and g1.value > 1e-3
        assert check_G2(sset, cls, g1).passed
        assert check_G3(cls).passed


def test_example1_kernels_and_fold_criterion(ex1):
    atlas, out = ex1
    for i in (1, 2):
        sset, cls = out[i]
        ratio, angle = kernel_consistency(atlas, sset)
        assert ratio < 1e-8 and angle < 1e-8
        bad, min_ratio, at_cusps = fold_equivalence(cls)
        assert bad == 0


# degenerate surfaces ------------------------------------------------------------

def test_clifford_fails_g1():
    atlas = atlas_of("clifford")
    sset = trace_singular_set(atlas, 1, 64)
    cls = classify_points(atlas, sset)
    g1 = check_G1(sset, cls)
    assert not g1.passed and g1.witnesses
    assert not check_G2(sset, cls, g1).passed


def test_plane_fails_g1():
    # K +- K^N vanishes identically together with its gradient
    atlas = atlas_of("plane")
    sset = trace_singular_set(atlas, 1, 32)
    assert sset.empty and not check_G1(sset).passed
    assert check_G3(classify_points(atlas, sset)).passed


# (G3) on constructed curves ---------------------------------------------------------

def _arc(theta0, theta1, axis_tilt=0.0, n=60):
    th = np.linspace(theta0, theta1, n)
    c, s = np.cos(axis_tilt), np.sin(axis_tilt)
    base = np.stack([np.cos(th), np.sin(th), 0 * th], 1)
    R = np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    return RADIUS * base @ R.T


def _classification(images):
    samples = []
    for img in images:
        m = len(img)
        samples.append(LoopSamples(["X"] * m, np.zeros((m, 2)), np.ones(m), np.ones(m), np.zeros((m, 4)),
                                   False, np.zeros(m, int), img, np.ones(m)))
    return Classification(1, samples, [], [], [np.full(len(s.t), "fold", dtype=object) for s in samples])


def test_g3_tangential_folds_fail():
    # two disjoint fold arcs mapped onto the same great-circle arc
    cls = _classification([_arc(0.0, 0.6), _arc(0.3, 0.9)])
    rep = check_G3(cls)
    assert not rep.passed
    assert any(w[0] == "tangential coincidence" for w in rep.witnesses)


def test_g3_transverse_crossing_passes():
    cls = _classification([_arc(-0.3, 0.3), _arc(-0.3, 0.3, axis_tilt=np.pi / 3)])
    rep = check_G3(cls)
    assert rep.passed and rep.detail.startswith("1 ")


def test_g3_triple_point_fails():
    cls = _classification([_arc(-0.3, 0.3, t) for t in (0.0, np.pi / 3, 2 * np.pi / 3)])
    rep = check_G3(cls)
    assert not rep.passed
    assert any(w[0] == "multiple coincidence" for w in rep.witnesses)


# Gauss map rank -----------------------------------------------------------------------

def test_flat_point_family_rank():
    rep = rank_scan(atlas_of("flatpoint"), 65)     # odd grid: the origin is a node
    assert rep.passed and not rep.witnesses


@pytest.mark.parametrize("seed", range(20))
def test_random_cubic_monge_rank(seed):
    rep = rank_scan(single_atlas(random_cubic_monge(seed)), 32)
    assert rep.passed


def test_plane_rank_zero():
    rep = rank_scan(single_atlas(expr_chart(("u", "v", "0", "0"))), 8)
    assert not rep.passed and rep.witnesses


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=12, max_size=12))
def test_segment_distance_against_sampling(xs):
    from gaussmap4.singular import _segment_distance
    p0, p1, q0, q1 = np.array(xs).reshape(4, 1, 3)
    d, _ = _segment_distance(p0, p1, q0, q1)
    s = np.linspace(0, 1, 801)[:, None]
    P, Q = p0 + s * (p1 - p0), q0 + s * (q1 - q0)
    brute = np.sqrt(((P[:, None, :] - Q[None, :, :]) ** 2).sum(-1)).min()
    assert d[0] <= brute + 1e-12
    assert brute - d[0] < 2e-3 * (1 + np.linalg.norm(p1 - p0) + np.linalg.norm(q1 - q0))
