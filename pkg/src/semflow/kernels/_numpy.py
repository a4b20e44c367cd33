"""Pure-numpy kernel lane: contractions as reshaped matrix products."""

import numpy as np


def apply_r(a, u):
    """Contract along the r (first nodal) axis: out[e,p,j,k] = sum_i a[p,i] u[e,i,j,k]."""
    e, n1, n2, n3 = u.shape
    m = a.shape[0]
    out = np.matmul(a, u.reshape(e, n1, n2 * n3))
    return out.reshape(e, m, n2, n3)


def apply_s(a, u):
    """Contract along the s (second nodal) axis: out[e,i,p,k] = sum_j a[p,j] u[e,i,j,k]."""
    e, n1, n2, n3 = u.shape
    m = a.shape[0]
    out = np.matmul(a, u.reshape(e * n1, n2, n3))
    return out.reshape(e, n1, m, n3)


def apply_t(a, u):
    """Contract along the t (third nodal) axis: out[e,i,j,p] = sum_k a[p,k] u[e,i,j,k]."""
    e, n1, n2, n3 = u.shape
    m = a.shape[0]
    out = np.matmul(u.reshape(e * n1 * n2, n3), a.T)
    return out.reshape(e, n1, n2, m)


def grad_ref(d, u):
    """Reference-space gradient: (du/dr, du/ds, du/dt), each shaped like u."""
    return apply_r(d, u), apply_s(d, u), apply_t(d, u)


def ax_helmholtz_local(d, g, b, u, lam_visc, lam_mass):
    """Element-local weak Helmholtz action.

    w^e = lam_visc * D^T G^e D u^e + lam_mass * B u^e

    with g holding the 6 packed symmetric components of G^e in the order
    (rr, rs, rt, ss, st, tt) with shape (6, E, n, n, n).
    """
    ur = apply_r(d, u)
    us = apply_s(d, u)
    ut = apply_t(d, u)
    f1 = g[0] * ur + g[1] * us + g[2] * ut
    f2 = g[1] * ur + g[3] * us + g[4] * ut
    f3 = g[2] * ur + g[4] * us + g[5] * ut
    dt = d.T
    w = apply_r(dt, f1)
    w += apply_s(dt, f2)
    w += apply_t(dt, f3)
    if lam_visc != 1.0:
        w *= lam_visc
    if lam_mass != 0.0:
        w += lam_mass * (b * u)
    return w


def gs_gather(vals, perm, offsets):
    """Sum coincident copies per global id.

    vals : flat array (E*n^3,)
    perm : flat indices sorted by (global id, local index ascending)
    offsets : (n_gid+1,) segment boundaries into perm

    Returns the per-global-id sums; summation order within a segment is
    ascending local index (np.add.reduceat accumulates sequentially).
    """
    return np.add.reduceat(vals[perm], offsets[:-1])


def gs_scatter(sums, perm, offsets, out):
    """Write per-global-id values back to every coincident copy in out."""
    counts = np.diff(offsets)
    out[perm] = np.repeat(sums, counts)
    return out
