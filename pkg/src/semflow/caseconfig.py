"""Versioned JSON case files: schema validation and object construction.

A case file fully determines a run (mesh, discretization, physics, solver
settings, outputs, seed); see docs/case_schema.md for the field-by-field
contract.  Validation is strict: unknown keys are rejected so typos fail
fast instead of silently using defaults.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .mesh import gen_box_mesh, gen_cylinder_box_mesh, read_mesh
from .timestep import SolverOptions

_TOP_KEYS = {
    "version", "name", "mesh", "order", "viscosity", "reynolds", "u_ref",
    "length_ref", "dt", "end_time", "n_steps", "scheme", "dealias",
    "initial", "boundaries", "forcing", "solvers", "output", "checkpoint",
    "seed", "cfl_limit",
}


@dataclass
class OutputOptions:
    fields_every: int = 0
    forces_tag: str = ""
    forces_every: int = 1
    stress_form: str = "gradient"
    u_ref: float = 1.0
    height: float = 1.0
    diameter: float = 1.0


@dataclass
class CaseConfig:
    name: str
    mesh_spec: dict
    order: int
    viscosity: float
    dt: float
    n_steps: int
    scheme_order: int = 3
    exact_history: bool = False
    dealias: bool = False
    initial: dict = field(default_factory=lambda: {"type": "zero"})
    boundaries: dict = field(default_factory=dict)
    forcing: dict = field(default_factory=dict)
    pressure_solver: SolverOptions = field(default_factory=lambda: SolverOptions(
        tol=1e-5, max_iter=200, restart=10, precond="schwarz", projection=True))
    velocity_solver: SolverOptions = field(default_factory=lambda: SolverOptions(
        tol=1e-8, max_iter=50, restart=10, precond="jacobi", projection=True))
    output: OutputOptions = field(default_factory=OutputOptions)
    checkpoint_every: int = 0
    seed: int = 0
    cfl_limit: float = 0.0


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _check_keys(d, allowed, where):
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {where}; "
                          f"allowed: {sorted(allowed)}")


def _solver_options(d, where, defaults):
    _check_keys(d, {"tol", "max_iter", "restart", "precond", "projection"}, where)
    opt = SolverOptions(
        tol=float(d.get("tol", defaults.tol)),
        max_iter=int(d.get("max_iter", defaults.max_iter)),
        restart=int(d.get("restart", defaults.restart)),
        precond=str(d.get("precond", defaults.precond)),
        projection=bool(d.get("projection", defaults.projection)),
    )
    _require(opt.tol > 0.0, f"{where}.tol must be positive, got {opt.tol}")
    _require(opt.max_iter >= 1, f"{where}.max_iter must be >= 1")
    _require(opt.restart >= 1, f"{where}.restart must be >= 1")
    _require(opt.precond in ("none", "jacobi", "schwarz"),
             f"{where}.precond must be none|jacobi|schwarz, got {opt.precond!r}")
    return opt


def from_dict(data, name="case"):
    """Validate a parsed case dictionary and return a CaseConfig."""
    if not isinstance(data, dict):
        raise ConfigError(f"case file must contain a JSON object, got {type(data).__name__}")
    _check_keys(data, _TOP_KEYS, "case file")
    version = data.get("version")
    _require(version == 1, f"case schema version must be 1, got {version!r}")
    name = str(data.get("name", name))

    mesh_spec = data.get("mesh")
    _require(isinstance(mesh_spec, dict), "mesh block is required")

    order = data.get("order")
    _require(isinstance(order, int) and 1 <= order <= 12,
             f"order must be an integer in [1, 12], got {order!r}")

    if "viscosity" in data:
        _require("reynolds" not in data, "give either viscosity or reynolds, not both")
        nu = float(data["viscosity"])
    elif "reynolds" in data:
        re = float(data["reynolds"])
        _require(re > 0.0, f"reynolds must be positive, got {re}")
        nu = float(data.get("u_ref", 1.0)) * float(data.get("length_ref", 1.0)) / re
    else:
        raise ConfigError("one of viscosity or reynolds is required")
    _require(nu > 0.0, f"viscosity must be positive, got {nu}")

    dt = float(data.get("dt", 0.0))
    _require(dt > 0.0, f"dt must be positive, got {dt}")
    if "n_steps" in data:
        _require("end_time" not in data, "give either n_steps or end_time, not both")
        n_steps = int(data["n_steps"])
    elif "end_time" in data:
        t_end = float(data["end_time"])
        _require(t_end > 0.0, f"end_time must be positive, got {t_end}")
        n_steps = int(round(t_end / dt))
        _require(abs(n_steps * dt - t_end) <= 1e-9 * max(t_end, 1.0),
                 f"end_time {t_end} is not an integer number of steps of dt {dt}")
    else:
        raise ConfigError("one of n_steps or end_time is required")
    _require(n_steps >= 1, f"need at least one step, got {n_steps}")

    scheme = data.get("scheme", {})
    _check_keys(scheme, {"order", "exact_history"}, "scheme")
    scheme_order = int(scheme.get("order", 3))
    _require(scheme_order in (1, 2, 3), f"scheme.order must be 1..3, got {scheme_order}")

    initial = data.get("initial", {"type": "zero"})
    _check_keys(initial, {"type", "value", "nu"}, "initial")
    _require(initial.get("type") in ("zero", "uniform", "taylor_green"),
             f"initial.type must be zero|uniform|taylor_green, got {initial.get('type')!r}")

    boundaries = data.get("boundaries", {})
    _require(isinstance(boundaries, dict) and boundaries,
             "boundaries block is required (one entry per mesh tag)")
    for tag, spec in boundaries.items():
        _require(isinstance(spec, dict) and "kind" in spec,
                 f"boundary {tag!r} must be an object with a 'kind'")

    forcing = data.get("forcing", {})
    _check_keys(forcing, {"tripping"}, "forcing")

    solvers = data.get("solvers", {})
    _check_keys(solvers, {"pressure", "velocity"}, "solvers")
    defaults = CaseConfig(name="", mesh_spec={}, order=1, viscosity=1.0, dt=1.0, n_steps=1)
    p_opt = _solver_options(solvers.get("pressure", {}), "solvers.pressure",
                            defaults.pressure_solver)
    v_opt = _solver_options(solvers.get("velocity", {}), "solvers.velocity",
                            defaults.velocity_solver)

    out = data.get("output", {})
    _check_keys(out, {"fields_every", "forces_tag", "forces_every", "stress_form",
                      "u_ref", "height", "diameter"}, "output")
    output = OutputOptions(
        fields_every=int(out.get("fields_every", 0)),
        forces_tag=str(out.get("forces_tag", "")),
        forces_every=int(out.get("forces_every", 1)),
        stress_form=str(out.get("stress_form", "gradient")),
        u_ref=float(out.get("u_ref", 1.0)),
        height=float(out.get("height", 1.0)),
        diameter=float(out.get("diameter", 1.0)),
    )
    _require(output.stress_form in ("gradient", "symmetric"),
             f"output.stress_form must be gradient|symmetric, got {output.stress_form!r}")
    _require(output.forces_every >= 1, "output.forces_every must be >= 1")

    ckpt = data.get("checkpoint", {})
    _check_keys(ckpt, {"every"}, "checkpoint")

    return CaseConfig(
        name=name,
        mesh_spec=mesh_spec,
        order=order,
        viscosity=nu,
        dt=dt,
        n_steps=n_steps,
        scheme_order=scheme_order,
        exact_history=bool(scheme.get("exact_history", False)),
        dealias=bool(data.get("dealias", False)),
        initial=initial,
        boundaries=boundaries,
        forcing=forcing,
        pressure_solver=p_opt,
        velocity_solver=v_opt,
        output=output,
        checkpoint_every=int(ckpt.get("every", 0)),
        seed=int(data.get("seed", 0)),
        cfl_limit=float(data.get("cfl_limit", 0.0)),
    )


def load_case(path):
    """Parse and validate a JSON case file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read case file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"case file {path} is not valid JSON: {exc}") from exc
    name = str(path).rsplit("/", 1)[-1]
    if name.endswith(".json"):
        name = name[:-5]
    return from_dict(data, name=name)


def build_mesh(cfg):
    """Construct the mesh described by a case's mesh block."""
    spec = dict(cfg.mesh_spec)
    if "file" in spec:
        _check_keys(spec, {"file"}, "mesh")
        return read_mesh(spec["file"])
    gen = spec.pop("generator", None)
    if gen == "box":
        _check_keys(spec, {"extent", "counts", "tags"}, "mesh(box)")
        extent = spec.get("extent")
        counts = spec.get("counts")
        _require(isinstance(extent, list) and len(extent) == 6,
                 "mesh.extent must be [x0, x1, y0, y1, z0, z1]")
        _require(isinstance(counts, list) and len(counts) == 3,
                 "mesh.counts must be [nx, ny, nz]")
        tags = spec.get("tags")
        return gen_box_mesh(extent, counts, tags=tuple(tags) if tags else None)
    if gen == "cylinder_box":
        allowed = {"diameter", "xlim", "zlim", "height", "n_azimuthal", "n_radial",
                   "n_axial", "n_upstream", "n_downstream", "n_front", "n_back",
                   "collar", "geom_order"}
        _check_keys(spec, allowed, "mesh(cylinder_box)")
        try:
            return gen_cylinder_box_mesh(**spec)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid cylinder_box mesh parameters: {exc}") from exc
    raise ConfigError(f"mesh block needs a 'file' or a known 'generator', got {gen!r}")


def initial_velocity(cfg, space):
    """Initial velocity field from a case's initial block."""
    kind = cfg.initial["type"]
    if kind == "zero":
        return space.zeros_vec()
    if kind == "uniform":
        value = np.asarray(cfg.initial.get("value", (0.0, 0.0, 0.0)), dtype=np.float64)
        _require(value.shape == (3,), "initial.value must have 3 components")
        out = space.zeros_vec()
        for l in range(3):
            out[l] = value[l]
        return out
    if kind == "taylor_green":
        from . import analytic
        nu = float(cfg.initial.get("nu", cfg.viscosity))
        return analytic.taylor_green_velocity(space.x, space.y, space.z, 0.0, nu)
    raise ConfigError(f"unknown initial condition {kind!r}")
