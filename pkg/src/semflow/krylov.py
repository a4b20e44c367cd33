"""Matrix-free Krylov solvers and successive-solve projection.

Both solvers take the operator and preconditioner as callables and an inner
product ``dot`` (for assembled spectral-element fields this is the
multiplicity-weighted dot so that duplicated interface points count once).
Tolerances are absolute on the preconditioned-from-the-right true residual.

The GMRES here stores the preconditioned basis vectors z_j = M(v_j) and
forms the update from them, so it is flexible: M may itself be an inner
iteration (e.g. a fixed-iteration coarse solve) without breaking the
recurrence.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SolverBreakdownError


@dataclass
class SolveInfo:
    """Result of a Krylov solve."""

    x: np.ndarray
    iterations: int
    residual: float
    initial_residual: float
    converged: bool


def _default_dot(a, b):
    return float(np.dot(a.ravel(), b.ravel()))


def pcg(apply_a, b, *, tol, max_iter, precond=None, dot=None, x0=None):
    """Preconditioned conjugate gradients with absolute residual tolerance.

    Raises SolverBreakdownError if the operator or preconditioner produces
    a non-positive curvature <p, Ap>, which signals a non-SPD system.
    """
    if dot is None:
        dot = _default_dot
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b.copy() if x0 is None else b - apply_a(x)
    res0 = np.sqrt(dot(r, r))
    res = res0
    if res <= tol:
        return SolveInfo(x, 0, res, res0, True)
    z = precond(r) if precond is not None else r.copy()
    p = z.copy()
    rz = dot(r, z)
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        ap = apply_a(p)
        pap = dot(p, ap)
        if pap <= 0.0:
            raise SolverBreakdownError(
                f"non-positive curvature <p,Ap> = {pap:.3e} in conjugate gradients",
                iteration=it,
            )
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        res = np.sqrt(dot(r, r))
        if res <= tol:
            converged = True
            break
        z = precond(r) if precond is not None else r.copy()
        rz_new = dot(r, z)
        beta = rz_new / rz
        rz = rz_new
        p = z + beta * p
    return SolveInfo(x, it, res, res0, converged)


def gmres(apply_a, b, *, tol, max_iter, restart=10, precond=None, dot=None, x0=None):
    """Right-preconditioned restarted GMRES (flexible variant).

    Modified Gram-Schmidt with one conditional reorthogonalization pass;
    convergence is declared on the absolute residual, which is recomputed
    from the true operator at the end of every cycle.
    """
    if dot is None:
        dot = _default_dot
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b.copy() if x0 is None else b - apply_a(x)
    beta = np.sqrt(dot(r, r))
    res0 = beta
    if beta <= tol:
        return SolveInfo(x, 0, beta, res0, True)
    total = 0
    converged = False
    while total < max_iter and not converged:
        m = min(restart, max_iter - total)
        vs = [r / beta]
        zs = []
        h = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        j_end = 0
        for j in range(m):
            z = precond(vs[j]) if precond is not None else vs[j].copy()
            zs.append(z)
            w = apply_a(z)
            norm_before = np.sqrt(dot(w, w))
            hcol = np.zeros(j + 2)
            for i in range(j + 1):
                hij = dot(w, vs[i])
                w -= hij * vs[i]
                hcol[i] = hij
            norm_after = np.sqrt(dot(w, w))
            if norm_after < 0.7071 * norm_before:
                # severe cancellation: a second Gram-Schmidt pass restores
                # orthogonality without changing the projection in exact math
                for i in range(j + 1):
                    c = dot(w, vs[i])
                    w -= c * vs[i]
                    hcol[i] += c
                norm_after = np.sqrt(dot(w, w))
            hcol[j + 1] = norm_after
            # previously accumulated Givens rotations
            for i in range(j):
                tmp = cs[i] * hcol[i] + sn[i] * hcol[i + 1]
                hcol[i + 1] = -sn[i] * hcol[i] + cs[i] * hcol[i + 1]
                hcol[i] = tmp
            denom = np.hypot(hcol[j], hcol[j + 1])
            if denom == 0.0:
                raise SolverBreakdownError(
                    "zero Hessenberg column in GMRES (operator annihilated the "
                    "search direction)",
                    iteration=total + 1,
                )
            cs[j] = hcol[j] / denom
            sn[j] = hcol[j + 1] / denom
            hcol[j] = denom
            hcol[j + 1] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            h[: j + 2, j] = hcol
            total += 1
            j_end = j + 1
            happy = norm_after <= 1e-14 * max(norm_before, 1.0)
            if abs(g[j + 1]) <= tol or happy or total >= max_iter:
                break
            vs.append(w / norm_after)
        # solve the triangular least-squares system and update
        y = np.zeros(j_end)
        for i in range(j_end - 1, -1, -1):
            y[i] = (g[i] - h[i, i + 1 : j_end] @ y[i + 1 : j_end]) / h[i, i]
        for i in range(j_end):
            x += y[i] * zs[i]
        r = b - apply_a(x)
        beta = np.sqrt(dot(r, r))
        if beta <= tol:
            converged = True
    return SolveInfo(x, total, beta, res0, converged)


class ProjectionSpace:
    """A-orthonormal basis of previous solutions for initial-guess projection.

    ``prepare(rhs, apply_a)`` returns the best initial guess in the stored
    span and the true deflated right-hand side; after solving the deflated
    system for the correction dx, ``absorb(dx, apply_a)`` extends the basis.
    Each costs one extra operator application.  The space is cleared when it
    reaches capacity and, independently, every ``reset_every`` solves, and
    must be invalidated explicitly whenever the operator changes.
    """

    def __init__(self, dot=None, capacity=20, reset_every=20):
        self.dot = dot if dot is not None else _default_dot
        self.capacity = int(capacity)
        self.reset_every = int(reset_every)
        self.xs = []
        self.axs = []
        self._solves = 0

    @property
    def count(self):
        return len(self.xs)

    def invalidate(self):
        """Discard the stored basis (call when the operator changes)."""
        self.xs = []
        self.axs = []
        self._solves = 0

    def prepare(self, rhs, apply_a):
        """Return (x_guess, deflated_rhs) for the next solve.

        The deflated right-hand side is the true residual rhs - A x_guess,
        recomputed with a fresh operator application rather than from the
        stored A-images: that way a degraded basis can only weaken the
        initial guess, never corrupt the solve itself.
        """
        self._solves += 1
        if self._solves > self.reset_every:
            self.xs = []
            self.axs = []
            self._solves = 1
        if not self.xs:
            return np.zeros_like(rhs), rhs.copy()
        x0 = np.zeros_like(rhs)
        for xi in self.xs:
            x0 += self.dot(xi, rhs) * xi
        return x0, rhs - apply_a(x0)

    def absorb(self, dx, apply_a):
        """A-orthonormalize the correction dx against the basis and append.

        Corrections that are A-degenerate (within the stored span, or in the
        operator's null space) are discarded: normalizing them would amplify
        roundoff into the basis.
        """
        if len(self.xs) >= self.capacity:
            self.xs = []
            self.axs = []
        d = dx.copy()
        ad = apply_a(d)
        a0 = self.dot(d, ad)
        if a0 <= 0.0:
            return
        for xi, axi in zip(self.xs, self.axs):
            c = self.dot(xi, ad)
            d -= c * xi
            ad -= c * axi
        nrm2 = self.dot(d, ad)
        if nrm2 <= 1e-14 * a0:
            return
        nrm = np.sqrt(nrm2)
        self.xs.append(d / nrm)
        self.axs.append(ad / nrm)
