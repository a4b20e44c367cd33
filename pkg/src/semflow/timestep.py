"""Semi-implicit splitting scheme for incompressible flow.

Each step advances velocity and pressure in three stages:

1. the convective term and body forces are extrapolated from previous
   steps (explicit), combined with the backward-difference history sum;
2. a pressure Poisson problem is solved whose right-hand side is the weak
   divergence of the extrapolated acceleration minus nu * curl(curl v*),
   with the Dirichlet-wall surface term carrying the new-time boundary
   data and the rotational form keeping the splitting boundary error at
   the scheme's order;
3. each velocity component solves a Helmholtz problem
   (gamma0/dt) B u + nu K u = B (v*/dt - grad p), with boundary values
   imposed by lifting.

The backward-difference/extrapolation order ramps 1, 2, 3 over the first
steps unless the state was primed with an exact multi-level history.
"""

import time as _time
from dataclasses import dataclass

import numpy as np

from . import operators
from .errors import ConfigError
from .krylov import ProjectionSpace, gmres, pcg
from .precond import BlockJacobi, HybridSchwarz

#: (gamma0, alpha[], beta[]) per order: gamma0 v^{n+1} = sum alpha_q v^{n-q}
#: + dt * sum beta_q N^{n-q} + dt * (implicit terms)
_SCHEMES = {
    1: (1.0, (1.0,), (1.0,)),
    2: (1.5, (2.0, -0.5), (2.0, -1.0)),
    3: (11.0 / 6.0, (3.0, -1.5, 1.0 / 3.0), (3.0, -3.0, 1.0)),
}


def scheme_coeffs(order):
    """Backward-difference/extrapolation coefficients (gamma0, alpha, beta)."""
    if order not in _SCHEMES:
        raise ConfigError(f"scheme order must be 1, 2 or 3, got {order}")
    g0, a, b = _SCHEMES[order]
    return g0, np.array(a), np.array(b)


@dataclass
class FlowState:
    """Velocity/pressure histories carried between steps."""

    time: float
    nsteps: int
    vel_hist: list          # [v^n, v^{n-1}, v^{n-2}] vector fields
    curl_hist: list         # curls of vel_hist entries
    nl_hist: list           # [N^{n-1}, N^{n-2}] explicit terms
    prs: np.ndarray
    primed: bool = False

    @property
    def vel(self):
        return self.vel_hist[0]


@dataclass
class StepDiagnostics:
    """Per-step solver and field diagnostics."""

    step: int
    time: float
    cfl: float
    div_norm: float
    p_iterations: int
    p_residual: float
    v_iterations: tuple
    v_residual: tuple
    wall_time: float = 0.0


@dataclass
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 50
    restart: int = 10
    precond: str = "jacobi"
    projection: bool = True


class Stepper:
    """One configured time integrator bound to a space and boundary set."""

    def __init__(self, space, bset, *, nu, dt, scheme_order=3, dealias=False,
                 pressure=None, velocity=None, forcing=None, forcing_fn=None,
                 proj_capacity=20, proj_reset=20, coarse_iters=10):
        if nu <= 0.0:
            raise ConfigError(f"viscosity must be positive, got {nu}")
        if dt <= 0.0:
            raise ConfigError(f"time step must be positive, got {dt}")
        if scheme_order not in (1, 2, 3):
            raise ConfigError(f"scheme order must be 1, 2 or 3, got {scheme_order}")
        self.space = space
        self.bset = bset
        self.nu = float(nu)
        self.dt = float(dt)
        self.scheme_order = int(scheme_order)
        self.dealias = operators.Dealias(space) if dealias else None
        self.forcing = forcing
        self.forcing_fn = forcing_fn
        self.p_opt = pressure if pressure is not None else SolverOptions(
            tol=1e-5, max_iter=200, restart=10, precond="schwarz")
        self.v_opt = velocity if velocity is not None else SolverOptions(
            tol=1e-8, max_iter=50, precond="jacobi")

        gs = space.gs
        self._dot = gs.dot
        self.apply_p = operators.make_global_op(space, 1.0, 0.0, mask=bset.prs_mask)
        self.p_precond = self._build_precond(self.p_opt.precond, bset.prs_mask,
                                             1.0, 0.0, coarse_iters)
        self._mass_assembled = gs.add(space.bm)
        self._ones = np.ones(space.shape)
        self._mass_total = gs.dot(self._ones, self._mass_assembled)

        self._vel_ops = {}
        self._vel_pcs = {}
        self._coarse_iters = coarse_iters
        self._last_order = None

        self._proj = {}
        if self.p_opt.projection:
            self._proj["p"] = ProjectionSpace(gs.dot, proj_capacity, proj_reset)
        if self.v_opt.projection:
            for name in ("vx", "vy", "vz"):
                self._proj[name] = ProjectionSpace(gs.dot, proj_capacity, proj_reset)

    def _build_precond(self, kind, mask, lam_visc, lam_mass, coarse_iters):
        if kind == "none":
            return None
        if kind == "jacobi":
            return BlockJacobi(self.space, lam_visc, lam_mass, mask=mask)
        if kind == "schwarz":
            return HybridSchwarz(self.space, mask=mask, lam_visc=lam_visc,
                                 lam_mass=lam_mass, coarse_iters=coarse_iters)
        raise ConfigError(f"unknown preconditioner {kind!r}")

    def _velocity_setup(self, order):
        """Operators and preconditioners for gamma0(order)/dt mass shift."""
        if order not in self._vel_ops:
            g0 = scheme_coeffs(order)[0]
            lam_mass = g0 / self.dt
            ops = []
            pcs = []
            for l in range(3):
                mask = self.bset.vel_mask[l]
                ops.append(operators.make_global_op(self.space, self.nu, lam_mass, mask))
                pcs.append(self._build_precond(self.v_opt.precond, mask, self.nu,
                                               lam_mass, self._coarse_iters))
            self._vel_ops[order] = ops
            self._vel_pcs[order] = pcs
        return self._vel_ops[order], self._vel_pcs[order]

    # ------------------------------------------------------------------ setup

    def initial_state(self, vel0, t0=0.0, prs0=None):
        """State from an initial velocity field (order ramps up from 1)."""
        space = self.space
        vel = space.gs.avg(np.asarray(vel0, dtype=np.float64).copy())
        self.bset.apply_dirichlet(vel, t0)
        prs = space.zeros() if prs0 is None else np.asarray(prs0, dtype=np.float64).copy()
        return FlowState(
            time=float(t0), nsteps=0,
            vel_hist=[vel], curl_hist=[operators.curl(space, vel)],
            nl_hist=[], prs=prs, primed=False,
        )

    def primed_state(self, vel_fn, t0=0.0, prs_fn=None):
        """State with full-order history filled from an analytic solution.

        vel_fn(x, y, z, t) -> (3, ...); the explicit-term history is rebuilt
        exactly as a running simulation would have computed it, so the first
        step immediately runs at the configured scheme order.
        """
        space = self.space
        xs = space.coords
        vel_hist = []
        curl_hist = []
        nl_hist = []
        for q in range(3):
            tq = t0 - q * self.dt
            v = np.asarray(vel_fn(xs[0], xs[1], xs[2], tq), dtype=np.float64).copy()
            vel_hist.append(v)
            curl_hist.append(operators.curl(space, v))
            if q > 0:
                nl_hist.append(self._explicit_term(v, tq))
        prs = space.zeros()
        if prs_fn is not None:
            prs = np.asarray(prs_fn(xs[0], xs[1], xs[2], t0), dtype=np.float64).copy()
        return FlowState(
            time=float(t0), nsteps=0,
            vel_hist=vel_hist, curl_hist=curl_hist, nl_hist=nl_hist,
            prs=prs, primed=True,
        )

    def _explicit_term(self, vel, t):
        nl = -operators.advect_vec(self.space, vel, vel, dealias=self.dealias)
        if self.forcing is not None:
            nl += self.forcing.force_field(self.space, t)
        if self.forcing_fn is not None:
            xs = self.space.coords
            nl += np.asarray(self.forcing_fn(xs[0], xs[1], xs[2], t), dtype=np.float64)
        return nl

    # ------------------------------------------------------------------- step

    def step(self, state):
        """Advance one time step; returns (new_state, StepDiagnostics)."""
        wall0 = _time.perf_counter()
        space = self.space
        bset = self.bset
        gs = space.gs
        dt = self.dt
        t_new = state.time + dt
        order = self.scheme_order if state.primed else min(
            state.nsteps + 1, self.scheme_order)
        g0, alphas, betas = scheme_coeffs(order)

        nl_hist = [self._explicit_term(state.vel, state.time)] + list(state.nl_hist)

        vhat_dt = space.zeros_vec()
        omega = space.zeros_vec()
        for q in range(order):
            vhat_dt += (alphas[q] / dt) * state.vel_hist[q]
            vhat_dt += betas[q] * nl_hist[q]
            omega += betas[q] * state.curl_hist[q]

        # --- pressure Poisson solve
        # The rotational (curl-curl) term is divergence-free, so it enters the
        # weak Poisson problem only through its boundary trace; keeping it out
        # of the volume term avoids feeding its discrete divergence back into
        # the interior.
        rhs_loc = operators.weak_grad_dot(space, vhat_dt)
        rhs_loc -= self.nu * bset.surface_flux_rhs(operators.curl(space, omega))
        rhs_loc -= (g0 / dt) * bset.pressure_surface_rhs(t_new)
        rhs = bset.prs_mask * gs.add(rhs_loc)
        if not bset.has_pressure_dirichlet:
            c = gs.dot(self._ones, rhs) / self._mass_total
            rhs = rhs - c * self._mass_assembled

        proj = self._proj.get("p")
        if proj is not None:
            x0, b = proj.prepare(rhs, self.apply_p)
        else:
            x0, b = np.zeros_like(rhs), rhs
        p_info = gmres(self.apply_p, b, tol=self.p_opt.tol,
                       max_iter=self.p_opt.max_iter, restart=self.p_opt.restart,
                       precond=self.p_precond, dot=self._dot)
        dx = p_info.x
        if not bset.has_pressure_dirichlet:
            # Constants are in the operator's null space; keep the stored
            # projection basis out of it.
            dx = dx - space.mean(dx)
        if proj is not None:
            proj.absorb(dx, self.apply_p)
        prs = gs.avg(x0 + dx)
        if not bset.has_pressure_dirichlet:
            prs -= space.mean(prs)
        if np.isnan(prs).any():
            raise RuntimeError(
                f"NaN in pressure at step {state.nsteps + 1} (t = {t_new:.6g})")

        # --- velocity Helmholtz solves
        gradp = operators.grad(space, prs)
        g_field = bset.dirichlet_field(t_new)
        lam_mass = g0 / dt
        ops, pcs = self._velocity_setup(order)
        if order != self._last_order:
            for name in ("vx", "vy", "vz"):
                if name in self._proj:
                    self._proj[name].invalidate()
            self._last_order = order

        vel_new = space.zeros_vec()
        v_iters = []
        v_res = []
        names = ("vx", "vy", "vz")
        for l in range(3):
            mask = bset.vel_mask[l]
            rhs_loc = space.bm * (vhat_dt[l] - gradp[l])
            rhs_loc -= operators.helmholtz_local(space, g_field[l], self.nu, lam_mass)
            rhs_l = mask * gs.add(rhs_loc)
            projv = self._proj.get(names[l])
            if projv is not None:
                x0, b = projv.prepare(rhs_l, ops[l])
            else:
                x0, b = np.zeros_like(rhs_l), rhs_l
            info = pcg(ops[l], b, tol=self.v_opt.tol, max_iter=self.v_opt.max_iter,
                       precond=pcs[l], dot=self._dot)
            if projv is not None:
                projv.absorb(info.x, ops[l])
            vel_new[l] = x0 + info.x + g_field[l]
            v_iters.append(info.iterations)
            v_res.append(info.residual)

        vel_new = gs.avg(vel_new)
        bset.apply_dirichlet(vel_new, t_new)
        if np.isnan(vel_new).any():
            raise RuntimeError(
                f"NaN in velocity at step {state.nsteps + 1} (t = {t_new:.6g})")

        div_norm = space.l2_norm(operators.div(space, vel_new))
        cfl_val = operators.cfl(space, vel_new, dt)

        new_state = FlowState(
            time=t_new,
            nsteps=state.nsteps + 1,
            vel_hist=[vel_new] + list(state.vel_hist[:2]),
            curl_hist=[operators.curl(space, vel_new)] + list(state.curl_hist[:2]),
            nl_hist=nl_hist[:2],
            prs=prs,
            primed=state.primed,
        )
        diag = StepDiagnostics(
            step=new_state.nsteps,
            time=t_new,
            cfl=cfl_val,
            div_norm=div_norm,
            p_iterations=p_info.iterations,
            p_residual=p_info.residual,
            v_iterations=tuple(v_iters),
            v_residual=tuple(v_res),
            wall_time=_time.perf_counter() - wall0,
        )
        return new_state, diag
