"""Hot element-local kernels with two interchangeable lanes.

Every function here operates on element-local arrays of shape
``(E, n, n, n)`` (scalar fields) where the three trailing axes index GLL
nodes along the reference directions r, s, t.

Two implementations exist:

* ``_numpy``  -- reshaped matmul contractions; always available.
* ``_numba``  -- explicitly parallel JIT loops over elements.

The active lane is chosen once at import time from the environment
variable ``SEMFLOW_NUMBA``:

* ``1`` / ``true`` / ``on`` / ``numba``   -- require the numba lane.
* ``0`` / ``false`` / ``off`` / ``numpy`` -- force the pure-numpy lane.
* unset / anything else                   -- numba if importable, else numpy.

Both lanes are deterministic: per-element work never crosses element
boundaries, and the gather-scatter reductions run in a fixed ascending
order per global id, so results are bit-identical regardless of thread
count within a lane.
"""

import os

_env = os.environ.get("SEMFLOW_NUMBA", "").strip().lower()

if _env in ("0", "false", "off", "numpy"):
    from . import _numpy as _lane

    LANE = "numpy"
elif _env in ("1", "true", "on", "numba"):
    from . import _numba as _lane

    LANE = "numba"
else:
    try:
        from . import _numba as _lane

        LANE = "numba"
    except ImportError:
        from . import _numpy as _lane

        LANE = "numpy"

apply_r = _lane.apply_r
apply_s = _lane.apply_s
apply_t = _lane.apply_t
grad_ref = _lane.grad_ref
ax_helmholtz_local = _lane.ax_helmholtz_local
gs_gather = _lane.gs_gather
gs_scatter = _lane.gs_scatter


def lane_name():
    """Name of the active kernel lane ('numpy' or 'numba')."""
    return LANE


def set_num_threads(k):
    """Set the kernel thread count (numba lane only; numpy lane ignores it).

    Clamped to the number of threads numba launched with, so asking for
    more than the machine has is not an error.
    """
    if LANE == "numba":
        import numba

        numba.set_num_threads(min(max(1, int(k)), numba.config.NUMBA_NUM_THREADS))
