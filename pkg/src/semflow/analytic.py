"""Closed-form reference solutions used for verification.

The decaying planar vortex (Taylor-Green) solves the incompressible
momentum equation with no forcing: the convective term is balanced by the
pressure gradient and the viscous term drives the exponential decay.
"""

import numpy as np


def taylor_green_velocity(x, y, z, t, nu):
    """Velocity of the decaying planar vortex (z component identically 0)."""
    decay = np.exp(-2.0 * nu * t)
    out = np.zeros((3,) + np.broadcast(np.asarray(x), np.asarray(y)).shape)
    out[0] = np.sin(x) * np.cos(y) * decay
    out[1] = -np.cos(x) * np.sin(y) * decay
    return out


def taylor_green_pressure(x, y, z, t, nu):
    """Pressure of the decaying planar vortex (zero mean on [0, 2pi]^2)."""
    decay = np.exp(-4.0 * nu * t)
    return 0.25 * (np.cos(2.0 * x) + np.cos(2.0 * y)) * decay
