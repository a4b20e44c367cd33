"""Command-line driver: run cases, generate meshes, run convergence suites.

Exit codes: 0 success, 1 runtime failure (solver NaN, CFL abort), 2 bad
configuration or arguments.
"""

import argparse
import json
import sys

from . import caseconfig, runner
from .errors import SemflowError
from .mesh import gen_box_mesh, gen_cylinder_box_mesh, write_mesh


def _floats(text, count, what):
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != count:
        raise argparse.ArgumentTypeError(f"{what} needs {count} values, got {len(parts)}")
    return [float(p) for p in parts]


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="semflow",
        description="Spectral-element incompressible flow solver (batch driver).",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run a case file")
    runp.add_argument("case", help="path to a JSON case file")
    runp.add_argument("--output-dir", default="out", help="directory for artifacts")
    runp.add_argument("--threads", type=int, default=None,
                      help="kernel thread count (1 = bit-reproducible)")
    runp.add_argument("--benchmark", action="store_true",
                      help="run 500 steps and report wall-time stats over the last 100")
    runp.add_argument("--restart", default=None, help="checkpoint file to resume from")

    mg = sub.add_parser("meshgen", help="generate a mesh file")
    mgs = mg.add_subparsers(dest="shape", required=True)

    box = mgs.add_parser("box", help="structured box")
    box.add_argument("--extent", required=True,
                     help="x0,x1,y0,y1,z0,z1")
    box.add_argument("--counts", required=True, help="nx,ny,nz elements")
    box.add_argument("--tags", default=None,
                     help="six tag names: xlo,xhi,ylo,yhi,zlo,zhi order")
    box.add_argument("-o", "--output", required=True)

    cyl = mgs.add_parser("cylinder-box", help="cylinder in a box (O-grid + frame)")
    cyl.add_argument("--diameter", type=float, default=1.0)
    cyl.add_argument("--xlim", required=True, help="x0,x1")
    cyl.add_argument("--zlim", required=True, help="z0,z1")
    cyl.add_argument("--height", type=float, required=True)
    cyl.add_argument("--n-azimuthal", type=int, default=8)
    cyl.add_argument("--n-radial", type=int, default=2)
    cyl.add_argument("--n-axial", type=int, default=2)
    cyl.add_argument("--n-upstream", type=int, default=None)
    cyl.add_argument("--n-downstream", type=int, default=None)
    cyl.add_argument("--n-front", type=int, default=None)
    cyl.add_argument("--n-back", type=int, default=None)
    cyl.add_argument("--collar", type=float, default=None)
    cyl.add_argument("--geom-order", type=int, default=7,
                     help="order of the curved-face node lattice (= solver order)")
    cyl.add_argument("-o", "--output", required=True)

    conv = sub.add_parser("convergence", help="run a time-step refinement suite")
    conv.add_argument("suite", help="path to a JSON suite file")
    conv.add_argument("--output-dir", default="out_convergence")
    conv.add_argument("--threads", type=int, default=None)
    return ap


def main(argv=None):
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "run":
            cfg = caseconfig.load_case(args.case)
            result = runner.run_case(
                cfg, args.output_dir, threads=args.threads,
                benchmark=args.benchmark, restart=args.restart)
            print(f"[{cfg.name}] finished {result.state.nsteps} steps "
                  f"(t = {result.state.time:.6g}); outputs in {args.output_dir}")
            return 0
        if args.command == "meshgen":
            if args.shape == "box":
                extent = _floats(args.extent, 6, "--extent")
                counts = [int(c) for c in _floats(args.counts, 3, "--counts")]
                tags = None
                if args.tags:
                    tags = tuple(t.strip() for t in args.tags.split(","))
                mesh = gen_box_mesh(extent, counts, tags=tags)
            else:
                xlim = _floats(args.xlim, 2, "--xlim")
                zlim = _floats(args.zlim, 2, "--zlim")
                mesh = gen_cylinder_box_mesh(
                    diameter=args.diameter, xlim=xlim, zlim=zlim,
                    height=args.height, n_azimuthal=args.n_azimuthal,
                    n_radial=args.n_radial, n_axial=args.n_axial,
                    n_upstream=args.n_upstream, n_downstream=args.n_downstream,
                    n_front=args.n_front, n_back=args.n_back,
                    collar=args.collar, geom_order=args.geom_order)
            write_mesh(mesh, args.output)
            print(f"wrote {mesh.n_elements} elements, "
                  f"{mesh.vertices.shape[0]} vertices to {args.output}")
            return 0
        if args.command == "convergence":
            with open(args.suite, "r", encoding="utf-8") as f:
                suite = json.load(f)
            runner.run_taylor_green_convergence(
                suite, args.output_dir, threads=args.threads)
            return 0
        ap.error(f"unknown command {args.command!r}")
    except SemflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, OSError, json.JSONDecodeError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
