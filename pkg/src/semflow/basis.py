"""1D Gauss-Lobatto-Legendre (GLL) basis: points, weights, derivative matrix.

All tensor-product operators in the package are built from the three arrays
produced here: the nodal points on [-1, 1], the quadrature weights, and the
nodal differentiation matrix.  Points and weights are exactly symmetric about
the origin so that mirrored meshes produce bitwise mirrored coordinates.
"""

from dataclasses import dataclass

import numpy as np

_NEWTON_TOL = 1e-14
_NEWTON_MAXIT = 100


def legendre(n, x):
    """Evaluate the Legendre polynomial P_n and its derivative at x.

    Uses the three-term recurrence; works on scalars or arrays.

    Returns
    -------
    (p, dp) : tuple of ndarray
        Values of P_n(x) and P_n'(x).
    """
    x = np.asarray(x, dtype=np.float64)
    if n == 0:
        return np.ones_like(x), np.zeros_like(x)
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    # derivative from the standard identity (1 - x^2) P_n' = n (P_{n-1} - x P_n)
    dp = np.where(
        np.abs(x) == 1.0,
        0.5 * n * (n + 1) * np.sign(x) ** (n + 1),
        n * (p_prev - x * p) / np.where(np.abs(x) == 1.0, 1.0, 1.0 - x * x),
    )
    return p, dp


def _gll_points(n):
    """Nodes of the (n+1)-point GLL rule: +-1 and the roots of P_n'."""
    if n == 1:
        return np.array([-1.0, 1.0])
    # Chebyshev-Gauss-Lobatto points seed the Newton iteration for the
    # interior roots of P_n'.
    x = -np.cos(np.pi * np.arange(1, n) / n)
    for _ in range(_NEWTON_MAXIT):
        p, dp = legendre(n, x)
        # P_n'' from the Legendre ODE: (1-x^2) P'' = 2 x P' - n(n+1) P
        d2p = (2.0 * x * dp - n * (n + 1) * p) / (1.0 - x * x)
        dx = dp / d2p
        x = x - dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    else:
        raise RuntimeError(
            f"GLL point iteration did not converge for order {n} "
            f"within {_NEWTON_MAXIT} iterations"
        )
    pts = np.concatenate(([-1.0], x, [1.0]))
    # enforce exact antisymmetry so mirrored meshes match bitwise
    return 0.5 * (pts - pts[::-1])


@dataclass(frozen=True)
class Basis1D:
    """GLL basis of a given polynomial order.

    Attributes
    ----------
    order : int
        Polynomial order N; there are N+1 nodes per direction.
    points : ndarray, shape (N+1,)
        GLL nodes on [-1, 1], ascending, exactly antisymmetric.
    weights : ndarray, shape (N+1,)
        Quadrature weights (positive, sum to 2).
    dmat : ndarray, shape (N+1, N+1)
        Nodal differentiation matrix, dmat[i, j] = l_j'(x_i); every row
        sums exactly to zero.
    """

    order: int
    points: np.ndarray
    weights: np.ndarray
    dmat: np.ndarray

    @property
    def n(self):
        """Number of nodes per direction (order + 1)."""
        return self.order + 1


def make_basis(order):
    """Construct the GLL basis of the given polynomial order.

    Parameters
    ----------
    order : int
        Polynomial order N >= 1.

    Returns
    -------
    Basis1D
    """
    if not isinstance(order, (int, np.integer)) or order < 1:
        raise ValueError(f"polynomial order must be an integer >= 1, got {order!r}")
    n = int(order)
    pts = _gll_points(n)
    p, _ = legendre(n, pts)
    wts = 2.0 / (n * (n + 1) * p * p)
    dmat = _diff_matrix(pts)
    for arr in (pts, wts, dmat):
        arr.setflags(write=False)
    return Basis1D(order=n, points=pts, weights=wts, dmat=dmat)


def _bary_weights(pts):
    """Barycentric weights of the node set."""
    diff = pts[:, None] - pts[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def _diff_matrix(pts):
    """Nodal differentiation matrix via barycentric weights.

    Off-diagonal entries use the standard ratio formula; the diagonal is
    the negated row sum so that constants differentiate to exactly zero.
    """
    w = _bary_weights(pts)
    dx = pts[:, None] - pts[None, :]
    np.fill_diagonal(dx, 1.0)
    dmat = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(dmat, 0.0)
    np.fill_diagonal(dmat, -np.sum(dmat, axis=1))
    return dmat


def interp_matrix(basis, targets):
    """Interpolation matrix from the GLL nodes to arbitrary target points.

    Parameters
    ----------
    basis : Basis1D
    targets : array_like
        Points in [-1, 1] to evaluate at.

    Returns
    -------
    ndarray, shape (len(targets), N+1)
        J[k, j] = l_j(targets[k]).  Rows for target points that coincide
        with a node are exact unit vectors.
    """
    t = np.atleast_1d(np.asarray(targets, dtype=np.float64))
    if t.ndim != 1:
        raise ValueError("target points must be one-dimensional")
    if np.any(t < -1.0 - 1e-12) or np.any(t > 1.0 + 1e-12):
        bad = t[(t < -1.0 - 1e-12) | (t > 1.0 + 1e-12)][0]
        raise ValueError(f"interpolation target {bad} lies outside [-1, 1]")
    pts = basis.points
    w = _bary_weights(pts)
    out = np.zeros((t.size, pts.size))
    diff = t[:, None] - pts[None, :]
    exact_row, exact_col = np.nonzero(np.abs(diff) < 1e-14)
    regular = np.ones(t.size, dtype=bool)
    regular[exact_row] = False
    if np.any(regular):
        ww = w[None, :] / diff[regular]
        out[regular] = ww / np.sum(ww, axis=1, keepdims=True)
    out[exact_row, exact_col] = 1.0
    return out


def gauss_legendre(m):
    """Points and weights of the m-point Gauss-Legendre rule on [-1, 1]."""
    if m < 1:
        raise ValueError(f"Gauss-Legendre rule needs at least 1 point, got {m}")
    return np.polynomial.legendre.leggauss(m)
