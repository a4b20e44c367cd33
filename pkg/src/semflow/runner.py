"""Case execution: build, step loop, CSV/VTK/checkpoint output, restart.

CSV schemas (documented in docs/diagnostics.md; all floats "%.17g"):

- diagnostics.csv: step,time,cfl,p_iters,p_res,ux_iters,uy_iters,uz_iters,
  ux_res,uy_res,uz_res,div_norm,wall_time
- forces.csv: time,Fx_p,Fy_p,Fz_p,Fx_v,Fy_v,Fz_v,C_d,C_l

wall_time is the only nondeterministic column; determinism comparisons
must exclude it.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import analytic, caseconfig, diagnostics, kernels, output
from .basis import make_basis
from .bc import BoundarySet
from .errors import ConfigError
from .forcing import TrippingForcing
from .space import build_space
from .timestep import FlowState, Stepper

_DIAG_HEADER = ("step,time,cfl,p_iters,p_res,ux_iters,uy_iters,uz_iters,"
                "ux_res,uy_res,uz_res,div_norm,wall_time")
_FORCE_HEADER = "time,Fx_p,Fy_p,Fz_p,Fx_v,Fy_v,Fz_v,C_d,C_l"


def _fmt(x):
    return f"{float(x):.17g}"


@dataclass
class RunResult:
    """Everything a caller or test needs after a run."""

    config: object
    output_dir: str
    state: FlowState
    stepper: Stepper
    diag_rows: list = field(default_factory=list)
    force_rows: list = field(default_factory=list)
    cd_stats: diagnostics.StreamingStats = None
    cl_stats: diagnostics.StreamingStats = None
    benchmark: dict = None


def build_stepper(cfg, mesh=None):
    """Construct (space, boundary set, forcing, stepper) for a case."""
    if mesh is None:
        mesh = caseconfig.build_mesh(cfg)
    basis = make_basis(cfg.order)
    space = build_space(mesh, basis)
    bset = BoundarySet(space, cfg.boundaries)
    forcing = None
    if "tripping" in cfg.forcing:
        params = dict(cfg.forcing["tripping"])
        params.setdefault("seed", cfg.seed)
        try:
            forcing = TrippingForcing(**params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid tripping parameters: {exc}") from exc
    stepper = Stepper(
        space, bset, nu=cfg.viscosity, dt=cfg.dt,
        scheme_order=cfg.scheme_order, dealias=cfg.dealias,
        pressure=cfg.pressure_solver, velocity=cfg.velocity_solver,
        forcing=forcing,
    )
    return space, bset, forcing, stepper


def _initial_state(cfg, space, stepper):
    if cfg.exact_history:
        if cfg.initial["type"] != "taylor_green":
            raise ConfigError(
                "scheme.exact_history requires the taylor_green initial condition")
        nu = float(cfg.initial.get("nu", cfg.viscosity))

        def vel_fn(x, y, z, t):
            return analytic.taylor_green_velocity(x, y, z, t, nu)

        def prs_fn(x, y, z, t):
            return analytic.taylor_green_pressure(x, y, z, t, nu)

        return stepper.primed_state(vel_fn, 0.0, prs_fn=prs_fn)
    return stepper.initial_state(caseconfig.initial_velocity(cfg, space), 0.0)


def _diag_row(d):
    vi = d.v_iterations
    vr = d.v_residual
    return ",".join(
        [str(d.step), _fmt(d.time), _fmt(d.cfl), str(d.p_iterations), _fmt(d.p_residual),
         str(vi[0]), str(vi[1]), str(vi[2]), _fmt(vr[0]), _fmt(vr[1]), _fmt(vr[2]),
         _fmt(d.div_norm), _fmt(d.wall_time)]
    )


def _save_checkpoint(path, cfg, state, stepper):
    arrays = {}
    for q, v in enumerate(state.vel_hist):
        arrays[f"vel_{q}"] = v
    for q, nl in enumerate(state.nl_hist):
        arrays[f"nl_{q}"] = nl
    arrays["prs"] = state.prs
    proj_meta = {}
    for name, proj in stepper._proj.items():
        if proj.xs:
            arrays[f"proj_{name}_xs"] = np.stack([x.reshape(-1) for x in proj.xs])
            arrays[f"proj_{name}_axs"] = np.stack([a.reshape(-1) for a in proj.axs])
        proj_meta[name] = {"count": proj.count, "solves": proj._solves}
    meta = {
        "case": cfg.name,
        "time": state.time,
        "nsteps": state.nsteps,
        "primed": state.primed,
        "n_vel_hist": len(state.vel_hist),
        "n_nl_hist": len(state.nl_hist),
        "last_order": stepper._last_order,
        "projections": proj_meta,
        "forcing": stepper.forcing.get_state() if stepper.forcing is not None else None,
    }
    output.write_checkpoint(path, arrays, meta)


def load_checkpoint_state(path, cfg, space, stepper):
    """Rebuild a FlowState (and stepper side state) from a checkpoint."""
    arrays, meta = output.read_checkpoint(path)
    shape = (3,) + space.shape
    vel_hist = [arrays[f"vel_{q}"].reshape(shape) for q in range(meta["n_vel_hist"])]
    nl_hist = [arrays[f"nl_{q}"].reshape(shape) for q in range(meta["n_nl_hist"])]
    from . import operators
    state = FlowState(
        time=float(meta["time"]),
        nsteps=int(meta["nsteps"]),
        vel_hist=vel_hist,
        curl_hist=[operators.curl(space, v) for v in vel_hist],
        nl_hist=nl_hist,
        prs=arrays["prs"].reshape(space.shape),
        primed=bool(meta["primed"]),
    )
    for name, pm in meta.get("projections", {}).items():
        proj = stepper._proj.get(name)
        if proj is None:
            continue
        proj.invalidate()
        proj._solves = int(pm["solves"])
        if pm["count"]:
            xs = arrays[f"proj_{name}_xs"]
            axs = arrays[f"proj_{name}_axs"]
            fshape = space.shape
            proj.xs = [xs[i].reshape(fshape) for i in range(xs.shape[0])]
            proj.axs = [axs[i].reshape(fshape) for i in range(axs.shape[0])]
    if meta.get("forcing") is not None:
        if stepper.forcing is None:
            raise ConfigError("checkpoint carries tripping state but the case has none")
        stepper.forcing.set_state(meta["forcing"])
    # restoring the last scheme order keeps the step loop's projection
    # invalidation on the same schedule as the uninterrupted run, so a
    # restart reproduces it bitwise
    stepper._last_order = meta.get("last_order")
    return state


def run_case(cfg, output_dir, threads=None, benchmark=False, restart=None,
             mesh=None, quiet=False):
    """Execute a case; returns a RunResult.  Raises on config errors;
    solver NaN aborts propagate as RuntimeError."""
    os.makedirs(output_dir, exist_ok=True)
    if threads is not None:
        kernels.set_num_threads(threads)
    space, bset, forcing, stepper = build_stepper(cfg, mesh=mesh)
    if restart is not None:
        state = load_checkpoint_state(restart, cfg, space, stepper)
    else:
        state = _initial_state(cfg, space, stepper)

    n_steps = 500 if benchmark else cfg.n_steps
    out = cfg.output
    do_forces = bool(out.forces_tag)
    cd_stats = diagnostics.StreamingStats()
    cl_stats = diagnostics.StreamingStats()
    diag_rows = []
    force_rows = []
    wall_times = []

    diag_path = os.path.join(output_dir, "diagnostics.csv")
    force_path = os.path.join(output_dir, "forces.csv")
    with open(diag_path, "w", encoding="ascii") as fdiag:
        fdiag.write(_DIAG_HEADER + "\n")
        fforce = None
        if do_forces:
            fforce = open(force_path, "w", encoding="ascii")
            fforce.write(_FORCE_HEADER + "\n")
        try:
            while state.nsteps < n_steps:
                state, diag = stepper.step(state)
                wall_times.append(diag.wall_time)
                row = _diag_row(diag)
                diag_rows.append(row)
                fdiag.write(row + "\n")
                if cfg.cfl_limit > 0.0 and diag.cfl > cfg.cfl_limit:
                    raise RuntimeError(
                        f"CFL {diag.cfl:.3f} exceeded limit {cfg.cfl_limit} "
                        f"at step {diag.step}")
                if do_forces and diag.step % out.forces_every == 0:
                    fr = diagnostics.surface_force(
                        space, out.forces_tag, state.prs, state.vel,
                        cfg.viscosity, stress_form=out.stress_form)
                    cd, cl = diagnostics.force_coefficients(
                        fr, out.u_ref, out.height, out.diameter)
                    cd_stats.push(cd)
                    cl_stats.push(cl)
                    frow = ",".join([_fmt(diag.time)] + [_fmt(v) for v in fr.pressure]
                                    + [_fmt(v) for v in fr.viscous]
                                    + [_fmt(cd), _fmt(cl)])
                    force_rows.append(frow)
                    fforce.write(frow + "\n")
                if out.fields_every > 0 and diag.step % out.fields_every == 0:
                    output.write_vtk(
                        os.path.join(output_dir, f"fields_{diag.step:06d}.vtk"),
                        space, scalars={"pressure": state.prs},
                        vectors={"velocity": state.vel},
                        title=f"{cfg.name} step {diag.step}")
                if cfg.checkpoint_every > 0 and diag.step % cfg.checkpoint_every == 0:
                    _save_checkpoint(
                        os.path.join(output_dir, f"checkpoint_{diag.step:06d}.ckpt"),
                        cfg, state, stepper)
                if not quiet and (diag.step % 50 == 0 or diag.step == n_steps):
                    print(f"[{cfg.name}] step {diag.step}/{n_steps} t={diag.time:.4f} "
                          f"cfl={diag.cfl:.3f} div={diag.div_norm:.3e} "
                          f"p_it={diag.p_iterations} v_it={max(diag.v_iterations)}")
        finally:
            if fforce is not None:
                fforce.close()

    _save_checkpoint(os.path.join(output_dir, "final.ckpt"), cfg, state, stepper)

    result = RunResult(config=cfg, output_dir=output_dir, state=state,
                       stepper=stepper, diag_rows=diag_rows, force_rows=force_rows,
                       cd_stats=cd_stats, cl_stats=cl_stats)
    if do_forces:
        summary = {
            "samples": cd_stats.count,
            "cd_mean": cd_stats.mean, "cd_std": cd_stats.std,
            "cl_mean": cl_stats.mean, "cl_std": cl_stats.std,
        }
        with open(os.path.join(output_dir, "forces_summary.json"), "w",
                  encoding="ascii") as f:
            json.dump(summary, f, indent=1, sort_keys=True)
    if benchmark:
        tail = np.asarray(wall_times[-100:])
        result.benchmark = {
            "steps": len(wall_times),
            "sampled": int(tail.size),
            "mean_step_seconds": float(tail.mean()),
            "std_step_seconds": float(tail.std(ddof=1)) if tail.size > 1 else 0.0,
            "kernel_lane": kernels.lane_name(),
        }
        with open(os.path.join(output_dir, "benchmark.json"), "w",
                  encoding="ascii") as f:
            json.dump(result.benchmark, f, indent=1, sort_keys=True)
        if not quiet:
            b = result.benchmark
            print(f"[{cfg.name}] benchmark ({b['kernel_lane']} lane): "
                  f"{b['mean_step_seconds']*1e3:.3f} ms/step "
                  f"+- {b['std_step_seconds']*1e3:.3f} "
                  f"(last {b['sampled']} of {b['steps']})")
    return result


def taylor_green_error(space, state, nu):
    """L2 velocity error against the decaying-vortex solution at state.time."""
    exact = analytic.taylor_green_velocity(space.x, space.y, space.z, state.time, nu)
    err2 = 0.0
    for l in range(3):
        d = state.vel[l] - exact[l]
        err2 += space.integral(d * d)
    return float(np.sqrt(max(err2, 0.0)))


def run_taylor_green_convergence(suite, output_dir, threads=None, quiet=False):
    """Run a Taylor-Green case over several time steps; tabulate errors.

    suite: {"version": 1, "case": {...}, "dts": [...]}  where the embedded
    case uses the taylor_green initial condition and an end_time.  Returns
    a list of {dt, velocity_error, divergence_norm} dicts and writes
    convergence.csv; observed orders are printed and returned.
    """
    if suite.get("version") != 1:
        raise ConfigError(f"suite version must be 1, got {suite.get('version')!r}")
    base = suite.get("case")
    dts = suite.get("dts")
    if not isinstance(base, dict) or not isinstance(dts, list) or len(dts) < 2:
        raise ConfigError("suite needs a 'case' object and >= 2 'dts'")
    if "end_time" not in base:
        raise ConfigError("suite case must fix end_time (not n_steps)")
    os.makedirs(output_dir, exist_ok=True)
    if threads is not None:
        kernels.set_num_threads(threads)

    rows = []
    mesh = None
    shells = None
    from . import operators
    for dt in dts:
        data = dict(base)
        data["dt"] = float(dt)
        cfg = caseconfig.from_dict(data, name=f"tg_dt{dt:g}")
        if mesh is None:
            mesh = caseconfig.build_mesh(cfg)
        sub = os.path.join(output_dir, f"dt_{dt:g}")
        res = run_case(cfg, sub, mesh=mesh, quiet=True)
        space = res.stepper.space
        nu = float(cfg.initial.get("nu", cfg.viscosity))
        err = taylor_green_error(space, res.state, nu)
        dnorm = diagnostics.divergence_norm(space, res.state.vel)
        dmax = float(np.abs(operators.div(space, res.state.vel)).max())
        if shells is None:
            # near-boundary profile from the coarsest run, where the splitting
            # signal sits well above the spatial floor
            shells = diagnostics.near_boundary_divergence(space, res.state.vel,
                                                          n_layers=3)[1].tolist()
        rows.append({"dt": float(dt), "velocity_error": err,
                     "divergence_norm": dnorm, "divergence_max": dmax})
        if not quiet:
            print(f"[convergence] dt={dt:g} velocity_error={err:.6e} "
                  f"div_l2={dnorm:.6e} div_max={dmax:.6e}")

    with open(os.path.join(output_dir, "convergence.csv"), "w", encoding="ascii") as f:
        f.write("dt,velocity_error,divergence_norm,divergence_max\n")
        for r in rows:
            f.write(f"{_fmt(r['dt'])},{_fmt(r['velocity_error'])},"
                    f"{_fmt(r['divergence_norm'])},{_fmt(r['divergence_max'])}\n")
    dmaxs = [r["divergence_max"] for r in rows]
    # the divergence sits on a spatial floor, so its order is estimated from
    # consecutive differences (floor-offset cancelling); when the floor
    # dominates outright the estimator has no signal to work with, and the
    # harness reports null rather than failing the whole suite
    try:
        div_order = diagnostics.observed_order_differenced(
            [r["dt"] for r in rows], dmaxs)
    except ValueError:
        div_order = None
    orders = {
        # total-error slope: what a user of the scheme actually observes
        "velocity_order": diagnostics.observed_order(
            [r["dt"] for r in rows], [r["velocity_error"] for r in rows]),
        "divergence_order": div_order,
        "divergence_decreasing": bool(
            all(a > b for a, b in zip(dmaxs, dmaxs[1:]))),
        "boundary_shells": shells,
    }
    if not quiet:
        div_txt = "n/a" if div_order is None else f"{div_order:.3f}"
        print(f"[convergence] velocity order {orders['velocity_order']:.3f}, "
              f"divergence order {div_txt}")
    with open(os.path.join(output_dir, "orders.json"), "w", encoding="ascii") as f:
        json.dump(orders, f, indent=1, sort_keys=True)
    return rows, orders
