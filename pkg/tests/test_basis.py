"""Quadrature rules, differentiation matrices, and interpolation."""

import numpy as np
import pytest

from semflow.basis import gauss_legendre, interp_matrix, legendre, make_basis


def monomial_integral(k):
    """Exact integral of x^k over [-1, 1]."""
    return 0.0 if k % 2 else 2.0 / (k + 1)


def test_low_order_nodes_match_closed_forms():
    b1 = make_basis(1)
    assert np.allclose(b1.points, [-1.0, 1.0], atol=1e-15)
    assert np.allclose(b1.weights, [1.0, 1.0], atol=1e-15)

    b2 = make_basis(2)
    assert np.allclose(b2.points, [-1.0, 0.0, 1.0], atol=1e-15)
    assert np.allclose(b2.weights, [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0], atol=1e-15)

    b3 = make_basis(3)
    r = 1.0 / np.sqrt(5.0)
    assert np.allclose(b3.points, [-1.0, -r, r, 1.0], atol=1e-14)
    assert np.allclose(b3.weights,
                       [1.0 / 6.0, 5.0 / 6.0, 5.0 / 6.0, 1.0 / 6.0], atol=1e-14)

    b4 = make_basis(4)
    r = np.sqrt(3.0 / 7.0)
    assert np.allclose(b4.points, [-1.0, -r, 0.0, r, 1.0], atol=1e-14)
    assert np.allclose(b4.weights,
                       [0.1, 49.0 / 90.0, 32.0 / 45.0, 49.0 / 90.0, 0.1],
                       atol=1e-14)


@pytest.mark.parametrize("order", range(1, 13))
def test_quadrature_exact_to_degree_2n_minus_1(order):
    b = make_basis(order)
    for k in range(2 * order):
        val = np.dot(b.weights, b.points**k)
        assert abs(val - monomial_integral(k)) < 1e-12, (order, k)


@pytest.mark.parametrize("order", range(1, 13))
def test_differentiation_exact_to_degree_n(order):
    b = make_basis(order)
    for k in range(order + 1):
        exact = k * b.points ** (k - 1) if k > 0 else np.zeros(order + 1)
        got = b.dmat @ b.points**k
        assert np.max(np.abs(got - exact)) < 1e-11, (order, k)


def test_points_antisymmetric_weights_symmetric():
    for order in range(1, 13):
        b = make_basis(order)
        assert np.array_equal(b.points, -b.points[::-1])
        assert np.array_equal(b.weights, b.weights[::-1])
        assert abs(b.weights.sum() - 2.0) < 1e-13


def test_derivative_matrix_kills_constants():
    for order in (2, 5, 9):
        b = make_basis(order)
        assert np.max(np.abs(b.dmat @ np.ones(order + 1))) < 1e-12


def test_basis_arrays_read_only():
    b = make_basis(4)
    for arr in (b.points, b.weights, b.dmat):
        with pytest.raises(ValueError):
            arr[0] = 0.0


def test_make_basis_rejects_bad_orders():
    with pytest.raises(ValueError):
        make_basis(0)
    with pytest.raises(ValueError):
        make_basis(2.5)


def test_basis_n_property():
    b = make_basis(7)
    assert b.n == 8
    assert b.order == 7
    assert b.points.shape == (8,)
    assert b.dmat.shape == (8, 8)


def test_legendre_endpoint_values():
    x = np.array([-1.0, 1.0])
    for n in range(1, 10):
        p, _ = legendre(n, x)
        assert p[1] == 1.0
        assert p[0] == (-1.0) ** n


def test_legendre_matches_explicit_polynomials():
    x = np.linspace(-1, 1, 11)
    p2, dp2 = legendre(2, x)
    assert np.allclose(p2, 1.5 * x**2 - 0.5, atol=1e-14)
    assert np.allclose(dp2, 3.0 * x, atol=1e-13)
    p3, dp3 = legendre(3, x)
    assert np.allclose(p3, 2.5 * x**3 - 1.5 * x, atol=1e-14)
    assert np.allclose(dp3, 7.5 * x**2 - 1.5, atol=1e-13)


def test_interp_matrix_identity_at_nodes():
    b = make_basis(6)
    m = interp_matrix(b, b.points)
    assert np.array_equal(m, np.eye(7))


def test_interp_matrix_exact_for_polynomials():
    b = make_basis(5)
    targets = np.linspace(-1, 1, 17)
    m = interp_matrix(b, targets)
    for k in range(6):
        got = m @ b.points**k
        assert np.max(np.abs(got - targets**k)) < 1e-12
    # partition of unity
    assert np.max(np.abs(m.sum(axis=1) - 1.0)) < 1e-12


def test_interp_matrix_rejects_bad_targets():
    b = make_basis(3)
    with pytest.raises(ValueError):
        interp_matrix(b, np.array([1.5]))
    with pytest.raises(ValueError):
        interp_matrix(b, np.zeros((2, 2)))


def test_gauss_legendre_exactness():
    for m in (1, 3, 8):
        x, w = gauss_legendre(m)
        for k in range(2 * m):
            assert abs(np.dot(w, x**k) - monomial_integral(k)) < 1e-12
    with pytest.raises(ValueError):
        gauss_legendre(0)
