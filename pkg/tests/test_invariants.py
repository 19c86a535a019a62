import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaussmap4.gaussmap import jacobians_from_forms
from gaussmap4.invariants import (invariants_at, jacobian_by_pullback, local_geometry,
                                  sff_values)

from conftest import EXAMPLE1, atlas_of, expr_chart, random_cubic_monge

O = np.array([0.0])


def test_plane_is_flat():
    inv = invariants_at(expr_chart(("u", "v", "0", "0")), np.array([0.2, -0.4]), np.array([0.1, 0.5]))
    for val in inv.as_dict().values():
        assert np.all(val == 0.0)


def test_sphere_cap_second_fundamental_form():
    c = expr_chart(("u", "v", "1 - sqrt(1 - u^2 - v^2)", "0"), (-0.5, 0.5, -0.5, 0.5))
    (l3, m3, n3), (l4, m4, n4) = sff_values(local_geometry(c, O, O).forms)
    np.testing.assert_allclose([l3[0], m3[0], n3[0], l4[0], m4[0], n4[0]], [1, 0, 1, 0, 0, 0], atol=1e-14)


def test_example1_second_fundamental_form():
    # Monge form: II coefficients are the Hessians of a = uv - uv^2 + v^3/3, b = -u^2/2 - u^2 v
    (l3, m3, n3), (l4, m4, n4) = sff_values(local_geometry(expr_chart(EXAMPLE1), O, O).forms)
    np.testing.assert_allclose([l3[0], m3[0], n3[0], l4[0], m4[0], n4[0]], [0, 1, 0, -1, 0, 0], atol=1e-14)


def test_example1_curvatures_at_origin():
    # K = (l3 n3 - m3^2) + (l4 n4 - m4^2) = -1 with the II above
    inv = invariants_at(expr_chart(EXAMPLE1), O, O)
    assert inv.K[0] == pytest.approx(-1.0, abs=1e-12)
    assert inv.KN[0] == pytest.approx(1.0, abs=1e-12)
    assert inv.Jg1[0] == pytest.approx(0.0, abs=1e-12)
    assert inv.Jg2[0] == pytest.approx(-1.0, abs=1e-12)


def test_clifford_is_flat(clifford):
    rng = np.random.default_rng(5)
    u, v = rng.uniform(0, 2 * np.pi, (2, 200))
    inv = invariants_at(clifford.charts[0], u, v)
    assert np.abs(inv.K).max() < 1e-12 and np.abs(inv.KN).max() < 1e-12


def test_flat_point_family_at_origin():
    atlas = atlas_of("flatpoint")
    inv = invariants_at(atlas.charts[0], O, O, atlas.params)
    assert abs(inv.K[0]) < 1e-12 and abs(inv.KN[0]) < 1e-12
    assert inv.Delta[0] < 0


def test_sphere_constant_curvature(sphere):
    u = np.linspace(0.2, 2.9, 9)
    inv = invariants_at(sphere.charts[0], u, u)
    np.testing.assert_allclose(inv.K, 1.0, atol=1e-12)
    np.testing.assert_allclose(inv.KN, 0.0, atol=1e-12)
    np.testing.assert_allclose(inv.H2, 1.0, atol=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 50), st.floats(-0.25, 0.25), st.floats(-0.25, 0.25))
def test_three_jacobian_routes_agree(seed, u, v):
    c = random_cubic_monge(seed)
    uu, vv = np.array([u]), np.array([v])
    inv = invariants_at(c, uu, vv)
    cf = local_geometry(c, uu, vv).forms
    j1, j2 = jacobians_from_forms(cf)
    tol = 1e-9 * (1 + abs(inv.K[0]) + abs(inv.KN[0]))
    for i, ref in ((1, inv.Jg1[0]), (2, inv.Jg2[0])):
        assert abs(jacobian_by_pullback(c, uu, vv, i)[0] - ref) < tol
    assert abs(j1[0] - inv.Jg1[0]) < tol and abs(j2[0] - inv.Jg2[0]) < tol


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 50), st.floats(-0.25, 0.25), st.floats(-0.25, 0.25))
def test_method_independence(seed, u, v):
    c = random_cubic_monge(seed)
    a = invariants_at(c, np.array([u]), np.array([v]), method="monge")
    b = invariants_at(c, np.array([u]), np.array([v]), method="gram-schmidt")
    for k, val in a.as_dict().items():
        assert val[0] == pytest.approx(b.as_dict()[k][0], rel=1e-10, abs=1e-11), k


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 50), st.floats(-0.25, 0.25), st.floats(-0.25, 0.25))
def test_wintgen_inequality(seed, u, v):
    # K + |K^N| <= |H|^2 at every point of a surface in R^4
    inv = invariants_at(random_cubic_monge(seed), np.array([u]), np.array([v]))
    assert inv.H2[0] >= inv.K[0] + abs(inv.KN[0]) - 1e-12
