"""Matrix-free operators against dense assembly and polynomial exactness."""

import numpy as np
import pytest

import oracles
from conftest import box_space
from semflow import operators
from semflow.basis import make_basis
from semflow.space import build_space


def element_space(order, curved):
    basis = make_basis(order)
    if curved:
        lattice = oracles.curved_lattice(basis.points)
        mesh = oracles.single_element_mesh(oracles.unit_corners(),
                                           curved_coords=lattice,
                                           geom_order=order)
    else:
        mesh = oracles.single_element_mesh(oracles.sheared_corners())
    return build_space(mesh, basis)


@pytest.mark.parametrize("curved", [False, True], ids=["affine", "curved"])
def test_laplace_matches_dense_assembly(curved, rng):
    space = element_space(3, curved)
    kmat = oracles.dense_stiffness(space.coords[:, 0], space.basis.dmat,
                                   space.basis.weights)
    for _ in range(5):
        u = rng.standard_normal(space.shape)
        got = space.gs.add(operators.laplace_local(space, u)).ravel()
        want = kmat @ u.ravel()
        assert np.max(np.abs(got - want)) <= 1e-11 * np.max(np.abs(want))


def test_helmholtz_adds_scaled_mass(rng):
    space = box_space((0.0, 1.5, 0.0, 1.0, 0.0, 1.0), (2, 1, 1), 4)
    u = rng.standard_normal(space.shape)
    lv, lm = 0.7, 42.0
    got = operators.helmholtz_local(space, u, lv, lm)
    want = lv * operators.laplace_local(space, u) + lm * space.bm * u
    assert np.allclose(got, want, rtol=1e-12, atol=1e-12)


def test_helmholtz_rejects_bad_coefficients(unit_cube_n4):
    u = np.ones(unit_cube_n4.shape)
    with pytest.raises(ValueError):
        operators.helmholtz_local(unit_cube_n4, u, 0.0, 1.0)
    with pytest.raises(ValueError):
        operators.helmholtz_local(unit_cube_n4, u, 1.0, -1.0)


def test_weak_form_equals_strong_integral(unit_cube_n4, rng):
    """sum_i u_i (grad phi_i, w) must equal (grad u, w) under one quadrature."""
    space = unit_cube_n4
    u = space.from_function(lambda x, y, z: x**2 * y + 0.5 * z**2 - x)
    w = np.stack([
        space.from_function(lambda x, y, z: x * z + 1.0),
        space.from_function(lambda x, y, z: y**2),
        space.from_function(lambda x, y, z: x - y * z),
    ])
    lhs = float(np.sum(operators.weak_grad_dot(space, w) * u))
    gu = operators.grad(space, u)
    rhs = space.integral(sum(gu[l] * w[l] for l in range(3)))
    assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(rhs))


def test_stiffness_is_symmetric_bilinear(unit_cube_n4):
    space = unit_cube_n4
    u = space.from_function(lambda x, y, z: x * y + z**3)
    v = space.from_function(lambda x, y, z: np.cos(np.pi * x) * y)
    auv = float(np.sum(u * operators.laplace_local(space, v)))
    avu = float(np.sum(v * operators.laplace_local(space, u)))
    gu = operators.grad(space, u)
    gv = operators.grad(space, v)
    energy = space.integral(sum(gu[l] * gv[l] for l in range(3)))
    assert abs(auv - avu) < 1e-11 * max(1.0, abs(auv))
    assert abs(auv - energy) < 1e-11 * max(1.0, abs(energy))


def test_gradient_exact_for_polynomials(unit_cube_n4):
    space = unit_cube_n4
    u = space.from_function(lambda x, y, z: x**2 * y + 3.0 * z)
    gx, gy, gz = operators.grad(space, u)
    assert np.allclose(gx, 2.0 * space.x * space.y, atol=1e-11)
    assert np.allclose(gy, space.x**2, atol=1e-11)
    assert np.allclose(gz, 3.0, atol=1e-11)


def test_divergence_examples(unit_cube_n4):
    space = unit_cube_n4
    v = np.stack([space.x, -space.y, np.zeros(space.shape)])
    assert np.max(np.abs(operators.div(space, v))) < 1e-11
    v2 = np.stack([space.x, np.zeros(space.shape), np.zeros(space.shape)])
    assert np.allclose(operators.div(space, v2), 1.0, atol=1e-11)


def test_curl_examples(unit_cube_n4):
    space = unit_cube_n4
    zero = np.zeros(space.shape)
    v = np.stack([zero, zero, space.y.copy()])
    c = operators.curl(space, v)
    assert np.allclose(c[0], 1.0, atol=1e-11)
    assert np.max(np.abs(c[1])) < 1e-11
    assert np.max(np.abs(c[2])) < 1e-11
    # curl of a gradient vanishes for smooth polynomials
    g = operators.grad(space, space.from_function(
        lambda x, y, z: x**2 * z + y**2))
    cg = operators.curl(space, np.stack(g))
    assert np.max(np.abs(cg)) < 1e-10


def test_advect_constant_velocity_linear_field(unit_cube_n4):
    space = unit_cube_n4
    c = np.stack([np.full(space.shape, 1.0), np.full(space.shape, 2.0),
                  np.full(space.shape, -1.0)])
    u = space.from_function(lambda x, y, z: x + 2.0 * y - z)
    got = operators.advect(space, c, u)
    assert np.allclose(got, 1.0 + 4.0 + 1.0, atol=1e-11)


def test_dealias_matches_plain_for_representable_products(unit_cube_n4):
    space = unit_cube_n4
    dealias = operators.Dealias(space)
    c = np.stack([np.full(space.shape, 0.5), np.full(space.shape, 1.5),
                  np.full(space.shape, 2.0)])
    u = space.from_function(lambda x, y, z: x**3 + y * z)  # c . grad u degree <= N
    plain = operators.advect(space, c, u)
    filtered = operators.advect(space, c, u, dealias=dealias)
    assert np.allclose(filtered, plain, rtol=1e-11, atol=1e-11)


def test_dealias_projection_reproduces_resolved_fields(unit_cube_n4):
    space = unit_cube_n4
    dealias = operators.Dealias(space)
    u = space.from_function(lambda x, y, z: x**4 - 2.0 * y**3 + z)
    ones = np.stack([np.ones(space.shape), np.zeros(space.shape),
                     np.zeros(space.shape)])
    # advecting with unit x-velocity: result is du/dx, degree N-1, resolved
    got = operators.advect(space, ones, u, dealias=dealias)
    want = operators.grad(space, u)[0]
    assert np.allclose(got, want, rtol=1e-10, atol=1e-10)


def test_advect_vec_componentwise(unit_cube_n4, rng):
    space = unit_cube_n4
    c = rng.standard_normal((3,) + space.shape)
    u = rng.standard_normal((3,) + space.shape)
    got = operators.advect_vec(space, c, u)
    for l in range(3):
        assert np.allclose(got[l], operators.advect(space, c, u[l]),
                           rtol=1e-13, atol=1e-13)


def test_cfl_uniform_flow_hand_value():
    space = box_space((0.0, 2.0, 0.0, 2.0, 0.0, 2.0), (1, 1, 1), 2)
    v = np.stack([np.ones(space.shape), np.zeros(space.shape),
                  np.zeros(space.shape)])
    # dx/dr = 1 and the N=2 nodes {-1, 0, 1} have unit spacing
    assert abs(operators.cfl(space, v, 0.3) - 0.3) < 1e-13
    half = box_space((0.0, 1.0, 0.0, 1.0, 0.0, 1.0), (1, 1, 1), 2)
    vh = np.stack([np.ones(half.shape), np.zeros(half.shape),
                   np.zeros(half.shape)])
    assert abs(operators.cfl(half, vh, 0.3) - 0.6) < 1e-13


def test_cfl_scales_linearly_in_dt_and_speed(unit_cube_n4, rng):
    space = unit_cube_n4
    v = rng.standard_normal((3,) + space.shape)
    base = operators.cfl(space, v, 1e-3)
    assert abs(operators.cfl(space, v, 2e-3) - 2.0 * base) < 1e-12
    assert abs(operators.cfl(space, 3.0 * v, 1e-3) - 3.0 * base) < 1e-12


def test_make_global_op_masks_are_identity_rows(unit_cube_n4, rng):
    space = unit_cube_n4
    mask = np.ones(space.shape)
    mask.reshape(-1)[space.facet_flat.ravel()] = 0.0
    op = operators.make_global_op(space, 1.0, 2.0, mask=mask)
    u = rng.standard_normal(space.shape)
    out = op(u)
    sel = mask == 0.0
    assert np.array_equal(out[sel], u[sel])
