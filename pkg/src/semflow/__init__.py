"""semflow: matrix-free spectral element solver for incompressible flow.

Nodal hexahedral spectral elements on Gauss-Lobatto-Legendre points with a
semi-implicit pressure-velocity splitting.  The package is organized
bottom-up:

* ``basis``      -- 1D Gauss-Lobatto-Legendre quadrature and derivative
                    matrices, the building block of every operator.
* ``mesh``       -- hexahedral meshes, generators and a binary file format.
* ``space``      -- discrete function space: geometry factors, metrics and
                    the gather-scatter (direct-stiffness) connectivity.
* ``operators``  -- matrix-free weak Laplacian / Helmholtz, gradients,
                    advection and CFL estimates.
* ``krylov``     -- preconditioned CG, restarted GMRES and solution
                    projection across time steps.
* ``precond``    -- block-Jacobi (counted diagonal) and hybrid additive
                    Schwarz + coarse-grid preconditioners.
* ``bc``         -- boundary condition evaluators (inflow profile, rotating
                    wall, symmetry, outflow) and Dirichlet masks.
* ``forcing``    -- stochastic boundary-layer tripping forcing.
* ``timestep``   -- BDF3/EXT3 pressure-velocity splitting scheme.
* ``diagnostics``-- surface forces, force coefficients, divergence and
                    energy norms, streaming statistics.
* ``runner``     -- time loop with CSV/VTK/checkpoint output.
* ``cli``        -- command line driver (run / meshgen / convergence).
"""

__version__ = "0.1.0"

from .basis import Basis1D, make_basis
from .bc import BoundarySet
from .caseconfig import CaseConfig, from_dict, load_case
from .forcing import TrippingForcing
from .krylov import ProjectionSpace, SolveInfo, gmres, pcg
from .mesh import Mesh, gen_box_mesh, gen_cylinder_box_mesh, read_mesh, write_mesh
from .precond import BlockJacobi, HybridSchwarz
from .runner import run_case, run_taylor_green_convergence
from .space import FunctionSpace, build_space
from .timestep import FlowState, Stepper, scheme_coeffs

__all__ = [
    "Basis1D",
    "make_basis",
    "Mesh",
    "gen_box_mesh",
    "gen_cylinder_box_mesh",
    "read_mesh",
    "write_mesh",
    "FunctionSpace",
    "build_space",
    "BoundarySet",
    "TrippingForcing",
    "ProjectionSpace",
    "SolveInfo",
    "gmres",
    "pcg",
    "BlockJacobi",
    "HybridSchwarz",
    "FlowState",
    "Stepper",
    "scheme_coeffs",
    "CaseConfig",
    "from_dict",
    "load_case",
    "run_case",
    "run_taylor_green_convergence",
    "__version__",
]
