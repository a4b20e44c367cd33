"""Boundary conditions: profiles, masks, Dirichlet application, surface terms.

Supported kinds (per boundary tag):

- ``noslip``           zero velocity
- ``velocity``         constant velocity, params ``value=[vx, vy, vz]``
- ``inflow``           power-law streamwise profile, params ``u_cl``, ``h``,
                       optional ``exponent`` (default 1/7)
- ``rotor``            rotating-cylinder wall with smoothed spin-up from the
                       bottom wall, params ``u_spin`` (or ``u_cl``+``alpha``),
                       ``delta``, optional ``center=[x0, z0]``
- ``function``         programmatic Dirichlet, params ``fn(x, y, z, t) -> (3, ...)``
- ``taylor_green``     time-dependent Dirichlet from the decaying-vortex
                       solution, params ``nu``
- ``symmetry``         zero wall-normal velocity on an axis-aligned facet
- ``outflow``          do-nothing velocity, pressure pinned to zero

Where facets of different kinds meet at an edge the constraint written last
wins pointwise; Dirichlet values are written after symmetry zeros, so the
effective priority is Dirichlet > symmetry > outflow.
"""

import logging

import numpy as np

from . import analytic
from .errors import ConfigError

logger = logging.getLogger(__name__)

#: kinds that constrain all three velocity components
DIRICHLET_KINDS = ("noslip", "velocity", "inflow", "rotor", "function", "taylor_green")


def inflow_profile(y, u_cl, h, exponent=1.0 / 7.0):
    """Power-law streamwise velocity u_cl * (y/h)^exponent, clamped to [0, h]."""
    y = np.asarray(y, dtype=np.float64)
    if np.any(y < -1e-10 * h) or np.any(y > h * (1.0 + 1e-10)):
        logger.warning(
            "inflow profile evaluated outside [0, %g]: range [%g, %g]; clamping",
            h, float(y.min()), float(y.max()),
        )
    yc = np.clip(y, 0.0, h)
    return u_cl * (yc / h) ** exponent


def rotor_smoothing(y, u_spin, delta):
    """Wall-distance ramp of the rotor surface speed.

    Zero at y=0, u_spin for y >= delta, and in between
    u_spin / (1 + exp(1/(q-1) + 1/q)) with q = y/delta: a C-infinity bump
    that equals u_spin/2 at q = 1/2.
    """
    y = np.asarray(y, dtype=np.float64)
    q = y / delta
    s = np.empty_like(q)
    lo = q <= 0.0
    hi = q >= 1.0
    mid = ~(lo | hi)
    s[lo] = 0.0
    s[hi] = u_spin
    qm = q[mid]
    arg = np.clip(1.0 / (qm - 1.0) + 1.0 / qm, -700.0, 700.0)
    s[mid] = u_spin / (1.0 + np.exp(arg))
    return s


def rotor_velocity(x, y, z, u_spin, delta, center=(0.0, 0.0)):
    """Velocity of a cylinder surface spinning about the y axis.

    The surface moves azimuthally at speed ``rotor_smoothing(y)``; with the
    chosen sense the +x side of the cylinder moves toward -z and the
    oncoming +x stream is deflected to produce positive-z lift.
    """
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    dx = x - center[0]
    dz = z - center[1]
    rho = np.hypot(dx, dz)
    s = rotor_smoothing(y, u_spin, delta)
    safe = np.where(rho > 0.0, rho, 1.0)
    fac = np.where(rho > 0.0, s / safe, 0.0)
    out = np.zeros((3,) + np.broadcast(x, np.asarray(y), z).shape)
    out[0] = fac * dz
    out[2] = -fac * dx
    return out


def _const_fn(value):
    v = np.asarray(value, dtype=np.float64)
    if v.shape != (3,):
        raise ConfigError(f"constant velocity must have 3 components, got {v.shape}")

    def fn(x, y, z, t):
        shape = np.shape(x)
        return np.broadcast_to(v.reshape((3,) + (1,) * len(shape)),
                               (3,) + shape).copy()

    return fn


def _inflow_fn(params):
    u_cl = float(params["u_cl"])
    h = float(params["h"])
    exponent = float(params.get("exponent", 1.0 / 7.0))
    if h <= 0.0:
        raise ConfigError(f"inflow height h must be positive, got {h}")

    def fn(x, y, z, t):
        out = np.zeros((3,) + np.shape(x))
        out[0] = inflow_profile(y, u_cl, h, exponent)
        return out

    return fn


def _rotor_fn(params):
    if "u_spin" in params:
        u_spin = float(params["u_spin"])
    else:
        u_spin = float(params["u_cl"]) * float(params.get("alpha", 3.0))
    delta = float(params["delta"])
    if delta <= 0.0:
        raise ConfigError(f"rotor smoothing distance delta must be positive, got {delta}")
    center = tuple(float(c) for c in params.get("center", (0.0, 0.0)))

    def fn(x, y, z, t):
        return rotor_velocity(x, y, z, u_spin, delta, center)

    return fn


def _taylor_green_fn(params):
    nu = float(params["nu"])

    def fn(x, y, z, t):
        return analytic.taylor_green_velocity(x, y, z, t, nu)

    return fn


def _make_evaluator(kind, params):
    if kind == "noslip":
        return _const_fn((0.0, 0.0, 0.0))
    if kind == "velocity":
        return _const_fn(params["value"])
    if kind == "inflow":
        return _inflow_fn(params)
    if kind == "rotor":
        return _rotor_fn(params)
    if kind == "function":
        return params["fn"]
    if kind == "taylor_green":
        return _taylor_green_fn(params)
    raise ConfigError(f"unknown Dirichlet kind {kind!r}")


class BoundarySet:
    """Compiled boundary conditions for one function space."""

    def __init__(self, space, specs):
        self.space = space
        self.vel_mask = np.ones((3,) + space.shape)
        self.prs_mask = np.ones(space.shape)
        self.dirichlet = []   # (tag, facet selector indices, evaluator)
        self.symmetry = []    # (facet indices, axis)
        seen = set()
        for tag, spec in sorted(specs.items()):
            if tag not in space.mesh.tag_names:
                raise ConfigError(
                    f"boundary condition references unknown tag {tag!r}; "
                    f"mesh has {space.mesh.tag_names}"
                )
            kind = spec["kind"]
            params = {k: v for k, v in spec.items() if k != "kind"}
            idx = np.nonzero(space.facet_sel(tag))[0]
            if idx.size == 0:
                raise ConfigError(f"tag {tag!r} has no facets on this mesh")
            seen.add(tag)
            if kind in DIRICHLET_KINDS:
                self.dirichlet.append((tag, idx, _make_evaluator(kind, params)))
            elif kind == "symmetry":
                axis = self._symmetry_axis(tag, idx)
                self.symmetry.append((idx, axis))
            elif kind == "outflow":
                flat = space.facet_flat[idx].ravel()
                self.prs_mask.reshape(-1)[flat] = 0.0
            else:
                raise ConfigError(f"unknown boundary kind {kind!r} for tag {tag!r}")
        missing = set(space.mesh.tag_names) - seen
        if missing:
            raise ConfigError(f"no boundary condition given for tags {sorted(missing)}")
        for idx, axis in self.symmetry:
            flat = space.facet_flat[idx].ravel()
            self.vel_mask[axis].reshape(-1)[flat] = 0.0
        for _, idx, _ in self.dirichlet:
            flat = space.facet_flat[idx].ravel()
            for l in range(3):
                self.vel_mask[l].reshape(-1)[flat] = 0.0
        self.has_pressure_dirichlet = bool(np.any(self.prs_mask == 0.0))
        self._neumann_facets = [idx for _, idx, _ in self.dirichlet]
        self._neumann_facets += [idx for idx, _ in self.symmetry]

    def _symmetry_axis(self, tag, idx):
        nrm = self.space.facet_normal[idx]  # (k, n, n, 3)
        mean = np.abs(nrm).reshape(-1, 3).mean(axis=0)
        axis = int(np.argmax(mean))
        comp = np.abs(nrm[..., axis])
        others = np.delete(np.abs(nrm), axis, axis=-1)
        if np.any(comp < 1.0 - 1e-8) or np.any(others > 1e-8):
            raise ConfigError(
                f"symmetry tag {tag!r} lies on a non-axis-aligned surface; "
                "only coordinate-plane symmetry is supported"
            )
        return axis

    def apply_dirichlet(self, vel, t):
        """Overwrite constrained velocity points with boundary values at time t."""
        flat = vel.reshape(3, -1)
        for idx, axis in self.symmetry:
            flat[axis][self.space.facet_flat[idx].ravel()] = 0.0
        for tag, idx, fn in self.dirichlet:
            pts = self.space.facet_flat[idx]
            xs = self.space.coords.reshape(3, -1)[:, pts.ravel()]
            g = np.asarray(fn(xs[0], xs[1], xs[2], t), dtype=np.float64)
            for l in range(3):
                flat[l][pts.ravel()] = g[l]
        return vel

    def dirichlet_field(self, t):
        """Velocity field that is the boundary data at constrained points, else 0."""
        g = np.zeros((3,) + self.space.shape)
        self.apply_dirichlet(g, t)
        return g

    def pressure_surface_rhs(self, t):
        """Surface integrals sum_facets phi_i (g . n) dA at Dirichlet walls.

        Returned as a local scalar field (only boundary points are nonzero);
        the splitting-scheme pressure right-hand side subtracts gamma0/dt
        times this.
        """
        out = np.zeros(self.space.shape).reshape(-1)
        for tag, idx, fn in self.dirichlet:
            pts = self.space.facet_flat[idx]          # (k, n, n)
            xs = self.space.coords.reshape(3, -1)[:, pts.ravel()]
            g = np.asarray(fn(xs[0], xs[1], xs[2], t), dtype=np.float64)
            g = g.reshape(3, *pts.shape)
            nrm = np.moveaxis(self.space.facet_normal[idx], -1, 0)  # (3, k, n, n)
            gn = (g * nrm).sum(axis=0) * self.space.facet_warea[idx]
            np.add.at(out, pts.ravel(), gn.ravel())
        return out.reshape(self.space.shape)

    def surface_flux_rhs(self, field):
        """Surface integrals sum_facets phi_i (F . n) dA over velocity-BC facets.

        field is a local vector field; its trace is taken from each facet's
        own element.  Natural-outflow facets are excluded (the pressure is
        pinned there rather than given a Neumann condition).
        """
        out = np.zeros(self.space.shape).reshape(-1)
        flat = field.reshape(3, -1)
        for idx in self._neumann_facets:
            pts = self.space.facet_flat[idx]          # (k, n, n)
            f = flat[:, pts.ravel()].reshape(3, *pts.shape)
            nrm = np.moveaxis(self.space.facet_normal[idx], -1, 0)
            fn = (f * nrm).sum(axis=0) * self.space.facet_warea[idx]
            np.add.at(out, pts.ravel(), fn.ravel())
        return out.reshape(self.space.shape)
