import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaussmap4.atlas import RectDomain, monge_chart
from gaussmap4.frames import (connection_forms, darboux_frame, monge_h, orthonormality_defect,
                              pfaffian_kernel, rotate_frame)

from conftest import EXAMPLE1, expr_chart, random_cubic_monge

O = np.array([0.0])


def forms_at(chart, u=0.0, v=0.0, method="auto"):
    fr = darboux_frame(chart, np.array([u]), np.array([v]), 2, method=method)
    return fr, connection_forms(fr)


def test_monge_origin_frame_is_standard():
    c = random_cubic_monge(0)
    fr, _ = forms_at(c)
    np.testing.assert_allclose(fr.matrix()[0], np.eye(4), atol=1e-15)
    assert monge_h(c, O, O)[0] == 1.0


def test_example1_first_frame_vector():
    fr, _ = forms_at(expr_chart(EXAMPLE1), 0.1, 0.0)
    np.testing.assert_allclose(fr.matrix()[0, 0], np.array([1, 0, 0, -0.1]) / np.sqrt(1.01), atol=1e-15)


def test_sphere_cap_normals():
    fr, _ = forms_at(expr_chart(("u", "v", "1 - sqrt(1 - u^2 - v^2)", "0"), (-0.5, 0.5, -0.5, 0.5)))
    np.testing.assert_allclose(fr.matrix()[0, 2:], np.eye(4)[2:], atol=1e-15)


def test_plane_forms_vanish():
    _, cf = forms_at(expr_chart(("u", "v", "0", "0")), 0.3, -0.2)
    for i in range(4):
        for j in range(4):
            assert np.all(cf.values(i, j) == 0.0)


def test_cylinder_forms():
    # oracle: e1 = (1, 0, u, 0)/sqrt(1+u^2) differentiates to (0, 0, 1, 0) at u = 0
    _, cf = forms_at(monge_chart({(2, 0): 0.5}, {}, domain=RectDomain(-1, 1, -1, 1)))
    assert cf.values(0, 2)[0, 0] == pytest.approx(1.0)
    for i in range(4):
        if i != 3:
            assert np.all(np.abs(cf.values(i, 3)) < 1e-15)


def test_sphere_cap_forms():
    _, cf = forms_at(expr_chart(("u", "v", "1 - sqrt(1 - u^2 - v^2)", "0"), (-0.5, 0.5, -0.5, 0.5)))
    w13, w23 = cf.values(0, 2)[:, 0], cf.values(1, 2)[:, 0]
    np.testing.assert_allclose(w13, [1.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(w23, [0.0, 1.0], atol=1e-14)


def test_rotation_identity_and_quarter_turn():
    c = random_cubic_monge(2)
    fr, _ = forms_at(c)
    np.testing.assert_allclose(rotate_frame(fr, 0.0, 0.0).matrix(), fr.matrix())
    # e1' = cos(a) e1 - sin(a) e2: a = -pi/2 sends (E1, E2) to (E2, -E1)
    M = rotate_frame(fr, -np.pi / 2, 0.0).matrix()[0]
    np.testing.assert_allclose(M, np.array([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]),
                               atol=1e-15)


def _w(cf, i, j):
    return cf.values(i - 1, j - 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 30), st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi),
       st.floats(-0.2, 0.2), st.floats(-0.2, 0.2))
def test_rotated_form_combinations(seed, a, b, u, v):
    fr, cf = forms_at(random_cubic_monge(seed), u, v)
    g = connection_forms(rotate_frame(fr, a, b))
    m, p = _w(cf, 1, 3) - _w(cf, 2, 4), _w(cf, 1, 4) + _w(cf, 2, 3)
    q, r = _w(cf, 1, 3) + _w(cf, 2, 4), _w(cf, 1, 4) - _w(cf, 2, 3)
    s, d = a + b, b - a
    pairs = [
        (_w(g, 1, 3) - _w(g, 2, 4), np.cos(s) * m - np.sin(s) * p),
        (_w(g, 1, 4) + _w(g, 2, 3), np.sin(s) * m + np.cos(s) * p),
        (_w(g, 1, 3) + _w(g, 2, 4), np.cos(d) * q - np.sin(d) * r),
        (_w(g, 1, 4) - _w(g, 2, 3), np.sin(d) * q + np.cos(d) * r),
    ]
    for lhs, rhs in pairs:
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 30), st.floats(-0.25, 0.25), st.floats(-0.25, 0.25))
def test_frames_orthonormal_and_routes_agree(seed, u, v):
    c = random_cubic_monge(seed)
    f1, cf1 = forms_at(c, u, v, "monge")
    f2, cf2 = forms_at(c, u, v, "gram-schmidt")
    assert orthonormality_defect(f1)[0] < 1e-12
    assert orthonormality_defect(f2)[0] < 1e-12
    assert np.linalg.det(f1.matrix()[0]) == pytest.approx(1.0)
    # the two frames differ by a rotation in each plane: tangent planes agree
    P1, P2 = f1.matrix()[0, :2], f2.matrix()[0, :2]
    np.testing.assert_allclose(P1.T @ P1, P2.T @ P2, atol=1e-12)


def test_pfaffian_kernel_of_dependent_covectors():
    c1 = np.array([[2.0], [1.0]])
    k = pfaffian_kernel(c1, -3 * c1)
    assert np.allclose(k[:, 0], np.array([1.0, -2.0]) / np.sqrt(5))
