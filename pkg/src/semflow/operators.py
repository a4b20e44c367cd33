"""Matrix-free tensor-product operators on a FunctionSpace.

Weak Laplacian / Helmholtz actions are element-local (``w^e = D^T G^e D u^e``
plus an optional mass term); the corresponding global operator is
``gs.add`` composed with the local action, with Dirichlet rows replaced by
the identity.  Gradients, divergence and curl are strong-form (pointwise)
derivatives via the chain rule.
"""

import numpy as np

from . import kernels
from .basis import gauss_legendre, interp_matrix


def laplace_local(space, u):
    """Element-local weak Laplacian action D^T G D u (no gather-scatter)."""
    return kernels.ax_helmholtz_local(space.basis.dmat, space.geom, space.bm, u, 1.0, 0.0)


def helmholtz_local(space, u, lam_visc, lam_mass):
    """Element-local weak Helmholtz action lam_visc*D^T G D u + lam_mass*B u."""
    if lam_visc <= 0.0:
        raise ValueError(f"lam_visc must be positive, got {lam_visc}")
    if lam_mass < 0.0:
        raise ValueError(f"lam_mass must be non-negative, got {lam_mass}")
    return kernels.ax_helmholtz_local(
        space.basis.dmat, space.geom, space.bm, u, float(lam_visc), float(lam_mass)
    )


def make_global_op(space, lam_visc, lam_mass, mask=None):
    """Assembled operator closure: u -> mask*gs_add(ax(mask*u)) + (1-mask)*u.

    With mask rows acting as the identity the operator stays symmetric
    positive definite on the full vector space while decoupling
    Dirichlet-constrained points.
    """
    d = space.basis.dmat
    g = space.geom
    b = space.bm
    gs = space.gs
    lv = float(lam_visc)
    lm = float(lam_mass)
    if mask is None:
        def apply_a(u):
            return gs.add(kernels.ax_helmholtz_local(d, g, b, u, lv, lm))
    else:
        inv = 1.0 - mask

        def apply_a(u):
            um = mask * u
            w = mask * gs.add(kernels.ax_helmholtz_local(d, g, b, um, lv, lm))
            return w + inv * u

    return apply_a


def grad(space, u):
    """Physical gradient (3, E, n, n, n) of a scalar field."""
    ur, us, ut = kernels.grad_ref(space.basis.dmat, u)
    rx = space.rx
    out = np.empty((3,) + u.shape)
    for l in range(3):
        out[l] = rx[0, l] * ur + rx[1, l] * us + rx[2, l] * ut
    return out


def div(space, v):
    """Pointwise divergence of a vector field (3, E, n, n, n)."""
    rx = space.rx
    out = np.zeros(v.shape[1:])
    for l in range(3):
        ur, us, ut = kernels.grad_ref(space.basis.dmat, v[l])
        out += rx[0, l] * ur + rx[1, l] * us + rx[2, l] * ut
    return out


def curl(space, v):
    """Pointwise curl of a vector field."""
    g0 = grad(space, v[0])
    g1 = grad(space, v[1])
    g2 = grad(space, v[2])
    out = np.empty_like(v)
    out[0] = g2[1] - g1[2]
    out[1] = g0[2] - g2[0]
    out[2] = g1[0] - g0[1]
    return out


def weak_grad_dot(space, w):
    """Local weak integrals r_i = (grad phi_i, w) for a vector field w.

    Used to assemble the pressure right-hand side without differentiating w.
    """
    rx = space.rx
    bm = space.bm
    dt = space.basis.dmat.T
    f0 = bm * (rx[0, 0] * w[0] + rx[0, 1] * w[1] + rx[0, 2] * w[2])
    f1 = bm * (rx[1, 0] * w[0] + rx[1, 1] * w[1] + rx[1, 2] * w[2])
    f2 = bm * (rx[2, 0] * w[0] + rx[2, 1] * w[1] + rx[2, 2] * w[2])
    r = kernels.apply_r(dt, f0)
    r += kernels.apply_s(dt, f1)
    r += kernels.apply_t(dt, f2)
    return r


def advect(space, c, u, dealias=None):
    """Convective term (c . grad) u for a scalar u, pointwise at GLL nodes.

    With ``dealias`` (a Dealias instance) the products are formed on the
    finer Gauss-Legendre grid and L2-projected back; the returned field is
    pointwise-compatible (divide the weak integrals by the mass weights).
    """
    if dealias is None:
        g = grad(space, u)
        return c[0] * g[0] + c[1] * g[1] + c[2] * g[2]
    return dealias.advect(c, u)


def advect_vec(space, c, v, dealias=None):
    """Convective term applied to each component of a vector field."""
    out = np.empty_like(v)
    for l in range(3):
        out[l] = advect(space, c, v[l], dealias=dealias)
    return out


class Dealias:
    """Over-integration of the convective term on ceil(3(N+1)/2) GL points."""

    def __init__(self, space):
        self.space = space
        n = space.n
        m = int(np.ceil(1.5 * n))
        pts, wts = gauss_legendre(m)
        self.m = m
        self.interp = np.ascontiguousarray(interp_matrix(space.basis, pts))
        self.interp_t = np.ascontiguousarray(self.interp.T)
        jac_f = self._to_fine(space.jac)
        w3 = wts[:, None, None] * wts[None, :, None] * wts[None, None, :]
        self.wjac_f = w3[None] * jac_f

    def _to_fine(self, u):
        j = self.interp
        return kernels.apply_t(j, kernels.apply_s(j, kernels.apply_r(j, u)))

    def _project_back(self, f):
        jt = self.interp_t
        return kernels.apply_t(jt, kernels.apply_s(jt, kernels.apply_r(jt, f)))

    def advect(self, c, u):
        g = grad(self.space, u)
        fine = self._to_fine(c[0]) * self._to_fine(g[0])
        fine += self._to_fine(c[1]) * self._to_fine(g[1])
        fine += self._to_fine(c[2]) * self._to_fine(g[2])
        weak = self._project_back(self.wjac_f * fine)
        return weak / self.space.bm


def cfl(space, v, dt):
    """CFL number: max over points of dt * sum_s |v.grad(r_s)| / dxi_s.

    dxi_s is the distance to the nearest neighboring GLL node along
    reference direction s; v.grad(r_s) is the rate at which the flow
    crosses reference coordinate s (contravariant velocity).
    """
    xi = space.basis.points
    gaps = np.diff(xi)
    dxi = np.empty_like(xi)
    dxi[0] = gaps[0]
    dxi[-1] = gaps[-1]
    if xi.size > 2:
        dxi[1:-1] = np.minimum(gaps[:-1], gaps[1:])
    rx = space.rx
    n = space.n
    shapes = ((1, n, 1, 1), (1, 1, n, 1), (1, 1, 1, n))
    total = np.zeros(v.shape[1:])
    for s in range(3):
        uhat = rx[s, 0] * v[0] + rx[s, 1] * v[1] + rx[s, 2] * v[2]
        total += np.abs(uhat) / dxi.reshape(shapes[s])
    return float(dt) * float(total.max()) if total.size else 0.0
