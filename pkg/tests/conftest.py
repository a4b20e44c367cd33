"""Shared helpers for the test suite."""

import numpy as np
import pytest

from semflow.basis import make_basis
from semflow.mesh import gen_box_mesh
from semflow.space import build_space


def box_space(extent, counts, order, tags=None):
    """Box mesh + GLL basis + assembled function space."""
    mesh = gen_box_mesh(extent, counts, tags=tags)
    return build_space(mesh, make_basis(order))


def all_tags(spec):
    """The same boundary spec dict for all six default box tags."""
    return {t: dict(spec) for t in ("xlo", "xhi", "ylo", "yhi", "zlo", "zhi")}


@pytest.fixture(scope="session")
def unit_cube_n4():
    """2x2x2 unit cube at order 4: the workhorse multi-element space."""
    return box_space((0.0, 1.0, 0.0, 1.0, 0.0, 1.0), (2, 2, 2), 4)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(2024)
