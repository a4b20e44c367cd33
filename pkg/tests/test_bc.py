"""Boundary profiles, masks, Dirichlet application, and surface integrals."""

import dataclasses
import logging

import numpy as np
import pytest

import oracles
from conftest import all_tags, box_space
from semflow import bc
from semflow.basis import make_basis
from semflow.errors import ConfigError
from semflow.mesh import gen_cylinder_box_mesh
from semflow.space import build_space


# ---------------------------------------------------------------------------
# profile functions


def test_inflow_profile_dyadic_heights_are_exact():
    h, u_cl = 2.0, 1.0
    # (2^-7)^(1/7) and (2^-14)^(1/7) are exactly representable powers of two
    assert bc.inflow_profile(np.array([h / 2.0**7]), u_cl, h)[0] == 0.5
    assert bc.inflow_profile(np.array([h / 2.0**14]), u_cl, h)[0] == 0.25
    assert bc.inflow_profile(np.array([h]), u_cl, h)[0] == u_cl
    assert bc.inflow_profile(np.array([0.0]), u_cl, h)[0] == 0.0


def test_inflow_profile_scales_and_custom_exponent():
    got = bc.inflow_profile(np.array([0.25]), 3.0, 1.0, exponent=0.5)
    assert got[0] == pytest.approx(1.5, abs=1e-15)
    two = bc.inflow_profile(np.array([0.5, 1.0]), 2.0, 1.0, exponent=1.0)
    assert np.allclose(two, [1.0, 2.0], atol=1e-15)


def test_inflow_profile_clamps_and_warns(caplog):
    with caplog.at_level(logging.WARNING, logger="semflow.bc"):
        got = bc.inflow_profile(np.array([-0.5, 1.5]), 1.0, 1.0)
    assert got[0] == 0.0
    assert got[1] == 1.0
    assert any("clamping" in r.message for r in caplog.records)


def test_rotor_smoothing_exact_anchor_values():
    u_spin, delta = 3.0, 0.25
    y = np.array([-1.0, 0.0, delta / 2.0, delta, 2.0])
    s = bc.rotor_smoothing(y, u_spin, delta)
    assert s[0] == 0.0
    assert s[1] == 0.0
    assert s[2] == u_spin / 2.0  # q=1/2 makes the exponent exactly zero
    assert s[3] == u_spin
    assert s[4] == u_spin


def test_rotor_smoothing_is_monotone_and_bounded():
    y = np.linspace(-0.1, 0.4, 401)
    s = bc.rotor_smoothing(y, 1.0, 0.25)
    assert np.all(np.diff(s) >= 0.0)
    assert np.all((s >= 0.0) & (s <= 1.0))


def test_rotor_smoothing_joins_smoothly():
    # numerical derivative at both ends of the ramp stays near zero:
    # the bump function is C-infinity, so one-sided slopes must vanish
    delta, eps = 0.25, 1e-6
    for y0 in (0.0, delta):
        lo = bc.rotor_smoothing(np.array([y0 - eps]), 1.0, delta)[0]
        hi = bc.rotor_smoothing(np.array([y0 + eps]), 1.0, delta)[0]
        assert abs(hi - lo) / (2.0 * eps) < 1e-6


def test_rotor_velocity_direction_and_tangency():
    u_spin, delta = 2.0, 0.1
    y = np.array([delta])  # fully spun up
    # +x side of the cylinder moves toward -z
    v = bc.rotor_velocity(np.array([0.5]), y, np.array([0.0]), u_spin, delta)
    assert np.allclose(v[:, 0], [0.0, 0.0, -u_spin], atol=1e-15)
    # +z side moves toward +x
    v = bc.rotor_velocity(np.array([0.0]), y, np.array([0.5]), u_spin, delta)
    assert np.allclose(v[:, 0], [u_spin, 0.0, 0.0], atol=1e-15)
    # tangency and speed on a ring of arbitrary radius
    th = np.linspace(0.0, 2.0 * np.pi, 17)
    x, z = 1.7 * np.cos(th), 1.7 * np.sin(th)
    v = bc.rotor_velocity(x, np.full_like(x, delta), z, u_spin, delta)
    radial = v[0] * x + v[2] * z
    speed = np.hypot(v[0], v[2])
    assert np.max(np.abs(radial)) < 1e-13
    assert np.allclose(speed, u_spin, atol=1e-13)
    assert np.max(np.abs(v[1])) == 0.0


def test_rotor_velocity_axis_point_and_wall_foot():
    v = bc.rotor_velocity(np.array([0.0]), np.array([1.0]), np.array([0.0]),
                          1.0, 0.1)
    assert np.max(np.abs(v)) == 0.0  # on the spin axis
    v = bc.rotor_velocity(np.array([0.5]), np.array([0.0]), np.array([0.0]),
                          1.0, 0.1)
    assert np.max(np.abs(v)) == 0.0  # at the bottom wall the ramp is zero


def test_rotor_velocity_respects_center_offset():
    v = bc.rotor_velocity(np.array([3.0]), np.array([1.0]), np.array([4.0]),
                          1.0, 0.1, center=(3.0, 4.0))
    assert np.max(np.abs(v)) == 0.0


# ---------------------------------------------------------------------------
# BoundarySet


def lid_specs():
    specs = all_tags({"kind": "noslip"})
    specs["xlo"] = {"kind": "velocity", "value": (1.0, 2.0, 3.0)}
    specs["xhi"] = {"kind": "outflow"}
    specs["yhi"] = {"kind": "symmetry"}
    return specs


def facet_points(space, tag):
    return np.unique(space.facet_flat[space.facet_sel(tag)].ravel())


def test_masks_follow_kind_priorities():
    space = box_space((0.0, 1.0, 0.0, 1.0, 0.0, 1.0), (2, 2, 2), 3)
    bset = bc.BoundarySet(space, lid_specs())

    prs = bset.prs_mask.reshape(-1)
    out_pts = facet_points(space, "xhi")
    assert np.all(prs[out_pts] == 0.0)
    other = np.setdiff1d(np.arange(prs.size), out_pts)
    assert np.all(prs[other] == 1.0)
    assert bset.has_pressure_dirichlet

    vel = bset.vel_mask.reshape(3, -1)
    for tag in ("xlo", "ylo", "zlo", "zhi"):  # full Dirichlet walls
        pts = facet_points(space, tag)
        assert np.all(vel[:, pts] == 0.0), tag
    sym_only = np.setdiff1d(
        facet_points(space, "yhi"),
        np.concatenate([facet_points(space, t)
                        for t in ("xlo", "ylo", "zlo", "zhi")]))
    assert np.all(vel[1, sym_only] == 0.0)
    assert np.all(vel[0, sym_only] == 1.0)
    assert np.all(vel[2, sym_only] == 1.0)
    # outflow leaves the velocity unconstrained
    out_only = np.setdiff1d(out_pts, np.concatenate(
        [facet_points(space, t) for t in ("xlo", "ylo", "yhi", "zlo", "zhi")]))
    assert np.all(vel[:, out_only] == 1.0)


def test_all_dirichlet_box_has_no_pressure_dirichlet():
    space = box_space((0.0, 1.0, 0.0, 1.0, 0.0, 1.0), (1, 1, 1), 3)
    bset = bc.BoundarySet(space, all_tags({"kind": "noslip"}))
    assert not bset.has_pressure_dirichlet
    assert np.all(bset.prs_mask == 1.0)
    assert np.all(bset.vel_mask.reshape(3, -1)[:, space.facet_flat.ravel()] == 0.0)


def test_apply_dirichlet_values_and_priority(rng):
    space = box_space((0.0, 1.0, 0.0, 1.0, 0.0, 1.0), (2, 2, 2), 3)
    bset = bc.BoundarySet(space, lid_specs())
    vel = rng.standard_normal((3,) + space.shape)
    bset.apply_dirichlet(vel, 0.0)
    flat = vel.reshape(3, -1)

    xlo = facet_points(space, "xlo")
    noslip = np.concatenate([facet_points(space, t)
                             for t in ("ylo", "zlo", "zhi")])
    own = xlo[~np.isin(xlo, noslip)]  # includes the edge shared with yhi
    assert np.all(flat[0, own] == 1.0)
    assert np.all(flat[1, own] == 2.0)  # Dirichlet wins over symmetry there
    assert np.all(flat[2, own] == 3.0)
    for tag in ("ylo", "zlo", "zhi"):
        pts = facet_points(space, tag)
        assert np.all(flat[:, pts[~np.isin(pts, xlo)]] == 0.0), tag
    yhi = facet_points(space, "yhi")
    sym_only = yhi[~np.isin(yhi, np.concatenate([xlo, noslip]))]
    assert np.all(flat[1, sym_only] == 0.0)


def test_apply_dirichlet_is_idempotent(rng):
    space = box_space((0.0, 1.0, 0.0, 1.0, 0.0, 1.0), (2, 1, 1), 4)
    bset = bc.BoundarySet(space, lid_specs())
    vel = rng.standard_normal((3,) + space.shape)
    once = bset.apply_dirichlet(vel.copy(), 0.5)
    twice = bset.apply_dirichlet(once.copy(), 0.5)
    assert np.array_equal(once, twice)


def test_dirichlet_field_zero_away_from_walls():
    space = box_space((0.0, 1.0, 0.0, 1.0, 0.0, 1.0), (2, 2, 2), 4)
    bset = bc.BoundarySet(space, lid_specs())
    g = bset.dirichlet_field(0.0)
    constrained = bset.vel_mask == 0.0
    assert np.all(g[~constrained] == 0.0)
    assert np.max(np.abs(g)) == 3.0  # largest imposed component


def test_inflow_bc_matches_profile_on_wall():
    space = box_space((0.0, 4.0, 0.0, 2.0, 0.0, 1.0), (2, 2, 1), 5)
    specs = all_tags({"kind": "noslip"})
    specs["xlo"] = {"kind": "inflow", "u_cl": 1.5, "h": 2.0}
    bset = bc.BoundarySet(space, specs)
    g = bset.dirichlet_field(0.0)
    pts = facet_points(space, "xlo")
    # edges shared with the noslip walls are overwritten by them
    edge = np.concatenate([facet_points(space, t)
                           for t in ("ylo", "yhi", "zlo", "zhi")])
    pts = pts[~np.isin(pts, edge)]
    ys = space.y.reshape(-1)[pts]
    want = bc.inflow_profile(ys, 1.5, 2.0)
    got = g[0].reshape(-1)[pts]
    assert np.array_equal(got, want)
    assert np.all(g[1].reshape(-1)[pts] == 0.0)
    assert np.all(g[2].reshape(-1)[pts] == 0.0)


def test_rotor_spec_alpha_times_ucl():
    fn = bc._make_evaluator("rotor", {"u_cl": 2.0, "alpha": 3.0, "delta": 0.5})
    v = fn(np.array([1.0]), np.array([0.5]), np.array([0.0]), 0.0)
    assert v[2, 0] == -6.0  # u_spin = alpha * u_cl


def test_pressure_surface_rhs_constant_velocity():
    space = box_space((0.0, 1.0, 0.0, 1.0, 0.0, 1.0), (2, 2, 2), 4)
    specs = all_tags({"kind": "noslip"})
    specs["xhi"] = {"kind": "velocity", "value": (2.0, 0.0, 0.0)}
    bset = bc.BoundarySet(space, specs)
    rhs = bset.pressure_surface_rhs(0.0)
    # sum over basis functions of the facet quadrature of g.n: all walls
    # except xhi carry g = 0, and on xhi the outward normal is +x
    assert abs(rhs.sum() - 2.0) < 1e-12
    interior = np.ones(space.shape, dtype=bool).reshape(-1)
    interior[space.facet_flat.ravel()] = False
    assert np.all(rhs.reshape(-1)[interior] == 0.0)


def test_surface_flux_rhs_skips_outflow_facets():
    space = box_space((0.0, 1.0, 0.0, 1.0, 0.0, 1.0), (2, 2, 2), 4)
    bset = bc.BoundarySet(space, lid_specs())
    field = np.zeros((3,) + space.shape)
    field[0] = 1.0
    rhs = bset.surface_flux_rhs(field)
    # included facets: xlo (n=-x), ylo/yhi/zlo/zhi (n . x = 0); xhi excluded
    assert abs(rhs.sum() + 1.0) < 1e-12
    xhi = facet_points(space, "xhi")
    touched = np.concatenate([facet_points(space, t)
                              for t in ("xlo", "ylo", "yhi", "zlo", "zhi")])
    pure_outflow = xhi[~np.isin(xhi, touched)]
    assert np.all(rhs.reshape(-1)[pure_outflow] == 0.0)


def test_taylor_green_bc_matches_analytic():
    from semflow.analytic import taylor_green_velocity
    space = box_space((0.0, np.pi / 2, 0.0, np.pi / 2, 0.0, np.pi / 8),
                      (2, 2, 1), 4)
    bset = bc.BoundarySet(space, all_tags({"kind": "taylor_green", "nu": 0.5}))
    t = 0.037
    g = bset.dirichlet_field(t)
    want = taylor_green_velocity(space.x, space.y, space.z, t, 0.5)
    sel = bset.vel_mask == 0.0
    assert np.allclose(g[sel], np.asarray(want)[sel], rtol=0, atol=1e-15)


def test_function_bc_receives_time():
    space = box_space((0.0, 1.0, 0.0, 1.0, 0.0, 1.0), (1, 1, 1), 3)
    specs = all_tags({"kind": "noslip"})
    specs["zhi"] = {"kind": "function",
                    "fn": lambda x, y, z, t: np.stack(
                        [np.full_like(x, t), np.zeros_like(x), np.zeros_like(x)])}
    bset = bc.BoundarySet(space, specs)
    g = bset.dirichlet_field(2.5)
    pts = facet_points(space, "zhi")
    edge = np.concatenate([facet_points(space, t)
                           for t in ("xlo", "xhi", "ylo", "yhi", "zlo")])
    inner = pts[~np.isin(pts, edge)]
    assert np.all(g[0].reshape(-1)[inner] == 2.5)


# ---------------------------------------------------------------------------
# configuration errors


def test_unknown_tag_rejected():
    space = box_space((0.0, 1.0, 0.0, 1.0, 0.0, 1.0), (1, 1, 1), 2)
    specs = all_tags({"kind": "noslip"})
    specs["nope"] = {"kind": "noslip"}
    with pytest.raises(ConfigError, match="unknown tag"):
        bc.BoundarySet(space, specs)


def test_unknown_kind_rejected():
    space = box_space((0.0, 1.0, 0.0, 1.0, 0.0, 1.0), (1, 1, 1), 2)
    specs = all_tags({"kind": "noslip"})
    specs["xlo"] = {"kind": "slippery"}
    with pytest.raises(ConfigError, match="unknown"):
        bc.BoundarySet(space, specs)


def test_missing_tag_rejected():
    space = box_space((0.0, 1.0, 0.0, 1.0, 0.0, 1.0), (1, 1, 1), 2)
    specs = all_tags({"kind": "noslip"})
    del specs["zhi"]
    with pytest.raises(ConfigError, match="no boundary condition"):
        bc.BoundarySet(space, specs)


def test_tag_without_facets_rejected():
    basis = make_basis(2)
    mesh = oracles.single_element_mesh(oracles.unit_corners())
    mesh = dataclasses.replace(mesh, tag_names=("wall", "ghost"))
    space = build_space(mesh, basis)
    specs = {"wall": {"kind": "noslip"}, "ghost": {"kind": "noslip"}}
    with pytest.raises(ConfigError, match="no facets"):
        bc.BoundarySet(space, specs)


def test_symmetry_on_curved_surface_rejected():
    mesh = gen_cylinder_box_mesh(1.0, (-3.0, 3.0), (-3.0, 3.0), 1.0,
                                 n_azimuthal=4, n_radial=1, n_axial=1,
                                 n_upstream=1, n_downstream=1,
                                 n_front=1, n_back=1, geom_order=3)
    space = build_space(mesh, make_basis(3))
    with pytest.raises(ConfigError, match="non-axis-aligned"):
        bc.BoundarySet(space, {"bottom": {"kind": "noslip"},
                               "cylinder": {"kind": "symmetry"}})


def test_bad_constant_velocity_shape_rejected():
    space = box_space((0.0, 1.0, 0.0, 1.0, 0.0, 1.0), (1, 1, 1), 2)
    specs = all_tags({"kind": "noslip"})
    specs["xlo"] = {"kind": "velocity", "value": (1.0, 2.0)}
    with pytest.raises(ConfigError, match="3 components"):
        bc.BoundarySet(space, specs)


def test_bad_profile_parameters_rejected():
    space = box_space((0.0, 1.0, 0.0, 1.0, 0.0, 1.0), (1, 1, 1), 2)
    for spec in ({"kind": "inflow", "u_cl": 1.0, "h": 0.0},
                 {"kind": "rotor", "u_spin": 1.0, "delta": -0.1}):
        specs = all_tags({"kind": "noslip"})
        specs["xlo"] = spec
        with pytest.raises(ConfigError, match="positive"):
            bc.BoundarySet(space, specs)
