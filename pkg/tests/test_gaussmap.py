import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaussmap4.errors import StereoPole
from gaussmap4.frames import darboux_frame, rotate_frame
from gaussmap4.gaussmap import (FULL, NONE, RADIUS, Bivector, dgauss_components,
                                gauss_components, jacobians_from_forms, kernel_direction,
                                monge_stereo, plucker,
                                rank_dg, stereographic, wedge)
from gaussmap4.invariants import invariants_at, local_geometry

from conftest import EXAMPLE1, atlas_of, expr_chart, random_cubic_monge

E = np.eye(4)
O = np.array([0.0])


def test_wedge_of_basis_vectors():
    np.testing.assert_array_equal(wedge(E[0], E[1]).alpha, [1, 0, 0, 0, 0, 0])
    np.testing.assert_array_equal(wedge(E[1], E[0]).alpha, [-1, 0, 0, 0, 0, 0])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_unit_decomposable_bivectors(seed):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
    b = wedge(q[:, 0], q[:, 1])
    assert abs(b.decomposability()) < 1e-12
    assert b.norm2() == pytest.approx(1.0)
    # both components land on the spheres of radius 1/sqrt2
    assert np.linalg.norm(b.beta()) == pytest.approx(RADIUS)
    assert np.linalg.norm(b.gamma()) == pytest.approx(RADIUS)
    # the plane, not the basis, determines the bivector
    c, s = np.cos(0.7), np.sin(0.7)
    b2 = wedge(c * q[:, 0] + s * q[:, 1], -s * q[:, 0] + c * q[:, 1])
    np.testing.assert_allclose(b2.alpha, b.alpha, atol=1e-12)


def test_non_decomposable_detected():
    b = Bivector(np.array([1, 0, 0, 1, 0, 0]) / np.sqrt(2))
    assert b.decomposability() == pytest.approx(0.5)


def test_clifford_components_closed_form(clifford):
    rng = np.random.default_rng(9)
    u, v = rng.uniform(0, 2 * np.pi, (2, 50))
    gp = gauss_components(darboux_frame(clifford.charts[0], u, v, 1))
    s = 1 / np.sqrt(2)
    np.testing.assert_allclose(gp.beta, s * np.stack([0 * u, -np.sin(u + v), np.cos(u + v)]), atol=1e-14)
    np.testing.assert_allclose(gp.gamma, s * np.stack([0 * u, np.sin(u - v), -np.cos(u - v)]), atol=1e-14)


def test_monge_origin_stereo():
    g1, g2, dr, dp = monge_stereo(random_cubic_monge(4), O, O)
    assert np.all(g1 == 0) and np.all(g2 == 0)
    assert 1 / dr[0] == 0.5 and 1 / dp[0] == 0.5


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6))
def test_example1_stereographic_closed_form(u, v):
    c = expr_chart(EXAMPLE1)
    uu, vv = np.array([u]), np.array([v])
    g1, g2, dr, dp = monge_stereo(c, uu, vv)
    ref1 = -np.array([v + u * u - v * v, -4 * u * v + v * v]) / dr[0]
    np.testing.assert_allclose(g1[:, 0], ref1, atol=1e-14)
    # the closed form agrees with the frame route (projection from -x1 / sqrt2)
    gp = gauss_components(darboux_frame(c, uu, vv, 1))
    np.testing.assert_allclose(gp.stereo1[:, 0], g1[:, 0], atol=1e-12)
    np.testing.assert_allclose(gp.stereo2[:, 0], g2[:, 0], atol=1e-12)


def test_stereographic_pole():
    p = np.array([[-RADIUS], [0.0], [0.0]])
    assert np.all(np.isnan(stereographic(p)))
    with pytest.raises(StereoPole):
        stereographic(p, strict=True)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 40), st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi),
       st.floats(-0.2, 0.2), st.floats(-0.2, 0.2))
def test_components_ignore_frame_rotation(seed, a, b, u, v):
    fr = darboux_frame(random_cubic_monge(seed), np.array([u]), np.array([v]), 1)
    g0 = gauss_components(fr)
    g1 = gauss_components(rotate_frame(fr, a, b))
    np.testing.assert_allclose(g1.beta, g0.beta, atol=1e-10)
    np.testing.assert_allclose(g1.gamma, g0.gamma, atol=1e-10)
    assert abs(plucker(fr).decomposability()[0]) < 1e-12


def test_plane_differentials_vanish():
    cf = local_geometry(expr_chart(("u", "v", "0", "0")), np.array([0.1]), np.array([0.3])).forms
    for m in dgauss_components(cf):
        assert np.all(m == 0)
    assert rank_dg(cf)[0] == 0


def test_differential_determinants_match_curvatures():
    c = expr_chart(EXAMPLE1)
    rng = np.random.default_rng(1)
    u, v = rng.uniform(-0.8, 0.8, (2, 100))
    cf = local_geometry(c, u, v).forms
    inv = invariants_at(c, u, v)
    j1, j2 = jacobians_from_forms(cf)
    np.testing.assert_allclose(j1, 0.5 * (inv.K + inv.KN), atol=1e-12)
    np.testing.assert_allclose(j2, 0.5 * (inv.K - inv.KN), atol=1e-12)


def test_kernel_direction_cases():
    assert kernel_direction(np.eye(2)) is NONE
    assert kernel_direction(np.zeros((2, 2))) is FULL
    np.testing.assert_allclose(kernel_direction(np.array([[0.0, 0.0], [0.0, 1.0]])), [1.0, 0.0])


def test_example1_kernel_at_origin():
    # the rank-one component at the origin is g1 here (K + K^N = 0 there)
    cf = local_geometry(expr_chart(EXAMPLE1), O, O).forms
    d1, d2 = dgauss_components(cf)
    np.testing.assert_allclose(kernel_direction(d1[:, :, 0]), [1.0, 0.0], atol=1e-14)
    assert kernel_direction(d2[:, :, 0]) is NONE


def test_rank_cases():
    fp = atlas_of("flatpoint")
    cf = local_geometry(fp.charts[0], O, O, params=fp.params).forms
    assert rank_dg(cf)[0] == 2
