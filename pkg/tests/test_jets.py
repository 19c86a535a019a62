import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaussmap4.errors import DegenerateJet, DomainError, OrderUnderflow
from gaussmap4.jets import (Jet2, jet_cos, jet_partial, jet_pow, jet_sin, jet_sqrt, monomials,
                            polynomial_jet)


def poly(d, order):
    return polynomial_jet(d, order)


def assert_poly(jet, expected):
    got = {m: jet.coeff(*m) for m in monomials(jet.order)}
    for m, c in got.items():
        assert c == pytest.approx(expected.get(m, 0.0), abs=1e-14), m


def test_product_truncates():
    j = poly({(0, 0): 1, (1, 0): 1}, 2) * poly({(0, 0): 1, (0, 1): 1}, 2)
    assert_poly(j, {(0, 0): 1, (1, 0): 1, (0, 1): 1, (1, 1): 1})


def test_product_order3():
    j = poly({(0, 0): 1, (1, 0): 1, (0, 2): 1}, 3) * poly({(0, 0): 1, (1, 0): -1}, 3)
    assert_poly(j, {(0, 0): 1, (2, 0): -1, (0, 2): 1, (1, 2): -1})


def test_self_quotient_is_one():
    f = poly({(0, 0): 2, (1, 0): 3, (1, 1): -1, (0, 3): 5}, 4)
    assert_poly(f / f, {(0, 0): 1})


def test_sqrt_binomial():
    assert_poly(jet_sqrt(poly({(0, 0): 1, (1, 0): 2}, 2)), {(0, 0): 1, (1, 0): 1, (2, 0): -0.5})


def test_sin_of_variable():
    assert_poly(jet_sin(Jet2.variable(0.0, 0, 3)), {(1, 0): 1, (3, 0): -1 / 6})


def test_sqrt_of_constant():
    for order in range(5):
        assert_poly(jet_sqrt(Jet2.constant(4.0, order)), {(0, 0): 2})


def test_partials():
    assert_poly(jet_partial(poly({(2, 1): 1}, 3), "u"), {(1, 1): 2})
    assert jet_partial(poly({(2, 1): 1}, 3), "u").order == 2
    assert_poly(jet_partial(Jet2.constant(3.0, 2), "v"), {})
    cube = poly({(3, 0): 1 / 6}, 4)
    assert_poly(cube.partial(0).partial(0), {(1, 0): 1})


def test_errors():
    with pytest.raises(DomainError):
        jet_sqrt(poly({(0, 0): -1, (1, 0): 1}, 2))
    with pytest.raises(DegenerateJet):
        Jet2.constant(1.0, 2) / poly({(1, 0): 1}, 2)
    with pytest.raises(OrderUnderflow):
        Jet2.constant(1.0, 0).partial(0)


def test_batch_axes():
    u0 = np.linspace(-1, 1, 7)
    j = jet_pow(Jet2.variable(u0, 0, 3), 3)
    assert j.shape == (7,)
    np.testing.assert_allclose(j.derivative(1, 0), 3 * u0 ** 2)
    np.testing.assert_allclose(j.derivative(3, 0), 6.0)


# jets against finite differences ----------------------------------------------------

def _compose(kind, u, v):
    """The same function built from jets (when u, v are jets) or from floats."""
    if isinstance(u, Jet2):
        sq, sn, cs = jet_sqrt, jet_sin, jet_cos
    else:
        sq, sn, cs = np.sqrt, np.sin, np.cos
    if kind == 0:
        return u * v * v + u / (2.0 + u * u + v * v)
    if kind == 1:
        return sq(3.0 + u + v * v) * sn(u - 2.0 * v)
    if kind == 2:
        return cs(u * v) / (1.5 + sn(v))
    return (u * u * u - v) * sq(2.0 + cs(u + v))


def fd_derivatives(f, u, v, h=1e-3):
    """Central differences (O(h^4)) of all partials up to order 2, plus two third ones."""
    def d1(g, x, y, axis):
        if axis == 0:
            return (-g(x + 2 * h, y) + 8 * g(x + h, y) - 8 * g(x - h, y) + g(x - 2 * h, y)) / (12 * h)
        return (-g(x, y + 2 * h) + 8 * g(x, y + h) - 8 * g(x, y - h) + g(x, y - 2 * h)) / (12 * h)
    du = lambda x, y: d1(f, x, y, 0)
    dv = lambda x, y: d1(f, x, y, 1)
    return {
        (1, 0): du(u, v), (0, 1): dv(u, v),
        (2, 0): d1(du, u, v, 0), (1, 1): d1(du, u, v, 1), (0, 2): d1(dv, u, v, 1),
    }


@settings(max_examples=250, deadline=None)
@given(kind=st.integers(0, 3), u=st.floats(-0.8, 0.8), v=st.floats(-0.8, 0.8))
def test_jets_match_finite_differences(kind, u, v):
    J = _compose(kind, Jet2.variable(u, 0, 4), Jet2.variable(v, 1, 4))
    fd = fd_derivatives(lambda x, y: _compose(kind, x, y), u, v)
    assert float(J.value) == pytest.approx(_compose(kind, u, v), rel=1e-12, abs=1e-12)
    for (i, j), ref in fd.items():
        got = float(J.derivative(i, j))
        assert abs(got - ref) <= 1e-6 * max(1.0, abs(ref)), ((i, j), got, ref)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=15, max_size=15),
       st.lists(st.floats(-2, 2), min_size=15, max_size=15))
def test_ring_laws(ca, cb):
    a, b = Jet2(np.array(ca), 4), Jet2(np.array(cb), 4)
    np.testing.assert_allclose((a * b).c, (b * a).c, atol=1e-12)
    np.testing.assert_allclose(((a + b) * a).c, (a * a + b * a).c, atol=1e-11)
    # Leibniz rule survives truncation one order down
    lhs = (a * b).partial(0)
    rhs = a.partial(0) * b.truncate(3) + a.truncate(3) * b.partial(0)
    np.testing.assert_allclose(lhs.c, rhs.c, atol=1e-11)
