"""Stochastic tripping body force localized near a boundary-layer line.

The force acts on the wall-normal (y) velocity component only:

    F_y(x, y, z, t) = g(z, t) * exp(-((x - x0)/l_x)^2 - (y/l_y)^2)

g blends a steady random spanwise signal with a piecewise-cubic
interpolation between random signals redrawn every ``t_s`` time units:

    g = amp_steady * h_s(z)
      + amp_unsteady * ((1 - b) h_i(z) + b h_{i+1}(z)),
    b = 3 p^2 - 2 p^3,  p = t/t_s - i,  i = floor(t/t_s)

so g is C1 in time.  Each h is a sum of ``n_modes`` unit-amplitude Fourier
modes over the spanwise extent with independently drawn uniform phases.
The force is identically zero outside the spanwise extent.
"""

import numpy as np

_TWO_PI = 2.0 * np.pi


class TrippingForcing:
    """Seeded, restartable tripping force generator."""

    def __init__(self, *, x0, y0=0.0, length_x, length_y, z_min, z_max,
                 amp_steady=0.0, amp_unsteady=0.3, t_scale=0.14,
                 n_modes=40, seed=0):
        if length_x <= 0.0 or length_y <= 0.0:
            raise ValueError("tripping envelope lengths must be positive")
        if z_max <= z_min:
            raise ValueError(f"empty spanwise extent [{z_min}, {z_max}]")
        if t_scale <= 0.0:
            raise ValueError(f"time scale must be positive, got {t_scale}")
        if n_modes < 1:
            raise ValueError(f"need at least one spanwise mode, got {n_modes}")
        self.x0 = float(x0)
        self.y0 = float(y0)
        self.length_x = float(length_x)
        self.length_y = float(length_y)
        self.z_min = float(z_min)
        self.z_max = float(z_max)
        self.amp_steady = float(amp_steady)
        self.amp_unsteady = float(amp_unsteady)
        self.t_scale = float(t_scale)
        self.n_modes = int(n_modes)
        self.rng = np.random.default_rng(seed)
        self.phases_steady = self.rng.uniform(0.0, _TWO_PI, self.n_modes)
        self.segment = 0
        self.phases_lo = self.rng.uniform(0.0, _TWO_PI, self.n_modes)
        self.phases_hi = self.rng.uniform(0.0, _TWO_PI, self.n_modes)
        self._started = False

    def _h(self, z, phases):
        zn = (np.asarray(z, dtype=np.float64) - self.z_min) / (self.z_max - self.z_min)
        m = np.arange(1, self.n_modes + 1, dtype=np.float64)
        return np.cos(
            _TWO_PI * m.reshape((-1,) + (1,) * zn.ndim) * zn[None]
            + phases.reshape((-1,) + (1,) * zn.ndim)
        ).sum(axis=0)

    def advance(self, t):
        """Roll the random signals forward to the segment containing t.

        The first call fixes where the stream begins: if it lands before the
        default segment 0 (multistep schemes prime their history at earlier
        times), the already-drawn signal pair is rebased to that segment.
        After that, time may only move forward.
        """
        target = int(np.floor(t / self.t_scale))
        if not self._started:
            self._started = True
            if target < self.segment:
                self.segment = target
        if target < self.segment:
            raise ValueError(
                f"time moved backwards: t={t} is in segment {target}, "
                f"state is at segment {self.segment}"
            )
        while self.segment < target:
            self.phases_lo = self.phases_hi
            self.phases_hi = self.rng.uniform(0.0, _TWO_PI, self.n_modes)
            self.segment += 1

    def spanwise_signal(self, z, t):
        """g(z, t): blended random spanwise signal (advances state to t)."""
        self.advance(t)
        p = t / self.t_scale - self.segment
        b = 3.0 * p * p - 2.0 * p * p * p
        g = self.amp_unsteady * (
            (1.0 - b) * self._h(z, self.phases_lo) + b * self._h(z, self.phases_hi)
        )
        if self.amp_steady != 0.0:
            g = g + self.amp_steady * self._h(z, self.phases_steady)
        return g

    def evaluate(self, x, y, z, t):
        """Wall-normal force component at the given points and time."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        g = self.spanwise_signal(z, t)
        envelope = np.exp(
            -(((x - self.x0) / self.length_x) ** 2)
            - (((y - self.y0) / self.length_y) ** 2)
        )
        inside = (z >= self.z_min) & (z <= self.z_max)
        return np.where(inside, g * envelope, 0.0)

    def force_field(self, space, t):
        """Full vector force at the GLL points of a space (only F_y nonzero)."""
        out = np.zeros((3,) + space.shape)
        out[1] = self.evaluate(space.x, space.y, space.z, t)
        return out

    def get_state(self):
        """JSON-serializable snapshot sufficient for bit-exact restart."""
        return {
            "segment": self.segment,
            "phases_steady": self.phases_steady.tolist(),
            "phases_lo": self.phases_lo.tolist(),
            "phases_hi": self.phases_hi.tolist(),
            "rng_state": self.rng.bit_generator.state,
        }

    def set_state(self, state):
        self._started = True
        self.segment = int(state["segment"])
        self.phases_steady = np.asarray(state["phases_steady"], dtype=np.float64)
        self.phases_lo = np.asarray(state["phases_lo"], dtype=np.float64)
        self.phases_hi = np.asarray(state["phases_hi"], dtype=np.float64)
        self.rng.bit_generator.state = state["rng_state"]
