"""Surface forces, field norms, near-wall divergence profiles, running stats."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import operators


@dataclass
class SurfaceForce:
    """Pressure and viscous force components on one tagged surface."""

    pressure: np.ndarray   # (3,)
    viscous: np.ndarray    # (3,)

    @property
    def total(self):
        return self.pressure + self.viscous


def surface_force(space, tag, prs, vel, mu, stress_form="gradient"):
    """Aerodynamic force exerted by the fluid on a tagged wall.

    Integrates -p n + tau . n with n the wall normal pointing into the
    fluid (for an immersed body this is the body-outward normal), so drag
    on a bluff body in a +x stream comes out positive.

    ``stress_form`` selects the viscous stress: "gradient" uses
    tau_ij = mu * du_i/dx_j, "symmetric" uses
    tau_ij = mu * (du_i/dx_j + du_j/dx_i).
    """
    if stress_form not in ("gradient", "symmetric"):
        raise ValueError(f"unknown stress form {stress_form!r}")
    sel = np.nonzero(space.facet_sel(tag))[0]
    flat = space.facet_flat[sel]                      # (k, n, n)
    # facet normals point out of the fluid domain; the wall normal is -n
    nrm = -np.moveaxis(space.facet_normal[sel], -1, 0)  # (3, k, n, n)
    wa = space.facet_warea[sel]

    pf = prs.reshape(-1)[flat]
    f_p = np.array([-(wa * pf * nrm[i]).sum() for i in range(3)])

    gv = np.stack([operators.grad(space, vel[l]) for l in range(3)])  # (i, j, ...)
    gvf = gv.reshape(3, 3, -1)[:, :, flat.ravel()].reshape(3, 3, *flat.shape)
    if stress_form == "symmetric":
        gvf = gvf + gvf.transpose(1, 0, 2, 3, 4)
    traction = mu * np.einsum("ij...,j...->i...", gvf, nrm)
    f_v = (wa * traction).reshape(3, -1).sum(axis=1)
    return SurfaceForce(pressure=f_p, viscous=f_v)


def force_coefficients(force, u_ref, height, diameter, rho=1.0):
    """(C_d, C_l): streamwise (x) and spanwise (z) force over 0.5*rho*u_ref*h*D.

    The normalization constant is taken literally; with the nondimensional
    convention rho = u_ref = 1 it coincides with the dynamic-pressure form.
    """
    norm = 0.5 * rho * u_ref * height * diameter
    total = force.total
    return float(total[0] / norm), float(total[2] / norm)


def divergence_norm(space, vel):
    """L2 norm of the pointwise divergence."""
    return space.l2_norm(operators.div(space, vel))


def kinetic_energy(space, vel):
    """0.5 * integral of |v|^2."""
    return 0.5 * space.integral(vel[0] ** 2 + vel[1] ** 2 + vel[2] ** 2)


def near_boundary_divergence(space, vel, tags=None, n_layers=4):
    """RMS of the divergence grouped by distance from tagged boundaries.

    Returns (distances, rms) for the first ``n_layers`` distinct GLL-point
    distances; the splitting scheme concentrates its divergence error in a
    boundary layer of thickness ~ sqrt(gamma0 nu dt), so the profile should
    decay moving inward.
    """
    if tags is None:
        sel = np.ones(space.facet_tag.size, dtype=bool)
    else:
        sel = np.zeros(space.facet_tag.size, dtype=bool)
        for tag in tags:
            sel |= space.facet_sel(tag)
    bpts = space.coords.reshape(3, -1)[:, space.facet_flat[sel].ravel()].T
    tree = cKDTree(np.unique(bpts, axis=0))
    pts = space.coords.reshape(3, -1).T
    dist, _ = tree.query(pts)
    d = operators.div(space, vel).reshape(-1)
    key = np.round(dist, 10)
    levels = np.unique(key)[:n_layers]
    out_d = []
    out_rms = []
    for lv in levels:
        m = key == lv
        out_d.append(float(lv))
        out_rms.append(float(np.sqrt(np.mean(d[m] ** 2))))
    return np.array(out_d), np.array(out_rms)


class StreamingStats:
    """Single-pass mean and variance (Welford), plus min/max."""

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0
        self.min = math.inf
        self.max = -math.inf

    def push(self, x):
        x = float(x)
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (x - self.mean)
        self.min = min(self.min, x)
        self.max = max(self.max, x)

    @property
    def variance(self):
        """Sample variance (ddof=1)."""
        if self.count < 2:
            return 0.0
        return self._m2 / (self.count - 1)

    @property
    def std(self):
        return math.sqrt(self.variance)


def observed_order(dts, errors):
    """Least-squares slope of log(error) against log(dt)."""
    dts = np.asarray(dts, dtype=np.float64)
    errors = np.asarray(errors, dtype=np.float64)
    if np.any(errors <= 0.0) or np.any(dts <= 0.0):
        raise ValueError("orders require positive step sizes and errors")
    return float(np.polyfit(np.log(dts), np.log(errors), 1)[0])


def observed_order_differenced(dts, errors):
    """Observed order from differences of consecutive errors.

    A temporal error measured on a fixed mesh bottoms out at the spatial
    resolution; that dt-independent offset biases the plain log-log slope.
    Differencing consecutive values cancels any constant part, recovering
    the order of the decaying contribution.  Requires a constant step-size
    ratio and a strictly decreasing error sequence.
    """
    dts = np.asarray(dts, dtype=np.float64)
    errors = np.asarray(errors, dtype=np.float64)
    if dts.size < 3:
        raise ValueError("differenced order needs at least three step sizes")
    ratios = dts[:-1] / dts[1:]
    if not np.allclose(ratios, ratios[0], rtol=1e-12):
        raise ValueError("differenced order requires a constant dt ratio")
    diffs = errors[:-1] - errors[1:]
    if np.any(diffs <= 0.0):
        raise ValueError("differenced order requires strictly decreasing errors")
    return float(np.polyfit(np.log(dts[:-1]), np.log(diffs), 1)[0])
