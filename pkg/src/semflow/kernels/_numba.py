"""Numba kernel lane: JIT-compiled loops parallelized over elements.

Mirrors the _numpy lane function-for-function.  Each element (or global
id, for the gather-scatter kernels) is processed by exactly one thread
with a fixed inner loop order, so results do not depend on the thread
count.  Compiled artifacts are cached on disk.
"""

import numpy as np
from numba import njit, prange

_JIT = dict(parallel=True, cache=True, fastmath=False)


@njit(**_JIT)
def apply_r(a, u):
    e, n1, n2, n3 = u.shape
    m = a.shape[0]
    out = np.empty((e, m, n2, n3), dtype=np.float64)
    for el in prange(e):
        for p in range(m):
            for j in range(n2):
                for k in range(n3):
                    acc = 0.0
                    for i in range(n1):
                        acc += a[p, i] * u[el, i, j, k]
                    out[el, p, j, k] = acc
    return out


@njit(**_JIT)
def apply_s(a, u):
    e, n1, n2, n3 = u.shape
    m = a.shape[0]
    out = np.empty((e, n1, m, n3), dtype=np.float64)
    for el in prange(e):
        for i in range(n1):
            for p in range(m):
                for k in range(n3):
                    acc = 0.0
                    for j in range(n2):
                        acc += a[p, j] * u[el, i, j, k]
                    out[el, i, p, k] = acc
    return out


@njit(**_JIT)
def apply_t(a, u):
    e, n1, n2, n3 = u.shape
    m = a.shape[0]
    out = np.empty((e, n1, n2, m), dtype=np.float64)
    for el in prange(e):
        for i in range(n1):
            for j in range(n2):
                for p in range(m):
                    acc = 0.0
                    for k in range(n3):
                        acc += a[p, k] * u[el, i, j, k]
                    out[el, i, j, p] = acc
    return out


@njit(**_JIT)
def grad_ref(d, u):
    e, n1, n2, n3 = u.shape
    ur = np.empty_like(u)
    us = np.empty_like(u)
    ut = np.empty_like(u)
    for el in prange(e):
        for i in range(n1):
            for j in range(n2):
                for k in range(n3):
                    ar = 0.0
                    as_ = 0.0
                    at = 0.0
                    for q in range(n1):
                        ar += d[i, q] * u[el, q, j, k]
                        as_ += d[j, q] * u[el, i, q, k]
                        at += d[k, q] * u[el, i, j, q]
                    ur[el, i, j, k] = ar
                    us[el, i, j, k] = as_
                    ut[el, i, j, k] = at
    return ur, us, ut


@njit(**_JIT)
def ax_helmholtz_local(d, g, b, u, lam_visc, lam_mass):
    e, n1, n2, n3 = u.shape
    out = np.empty_like(u)
    for el in prange(e):
        ur = np.empty((n1, n2, n3), dtype=np.float64)
        us = np.empty((n1, n2, n3), dtype=np.float64)
        ut = np.empty((n1, n2, n3), dtype=np.float64)
        for i in range(n1):
            for j in range(n2):
                for k in range(n3):
                    ar = 0.0
                    as_ = 0.0
                    at = 0.0
                    for q in range(n1):
                        ar += d[i, q] * u[el, q, j, k]
                        as_ += d[j, q] * u[el, i, q, k]
                        at += d[k, q] * u[el, i, j, q]
                    ur[i, j, k] = ar
                    us[i, j, k] = as_
                    ut[i, j, k] = at
        f1 = np.empty((n1, n2, n3), dtype=np.float64)
        f2 = np.empty((n1, n2, n3), dtype=np.float64)
        f3 = np.empty((n1, n2, n3), dtype=np.float64)
        for i in range(n1):
            for j in range(n2):
                for k in range(n3):
                    gr = ur[i, j, k]
                    gs = us[i, j, k]
                    gt = ut[i, j, k]
                    f1[i, j, k] = g[0, el, i, j, k] * gr + g[1, el, i, j, k] * gs + g[2, el, i, j, k] * gt
                    f2[i, j, k] = g[1, el, i, j, k] * gr + g[3, el, i, j, k] * gs + g[4, el, i, j, k] * gt
                    f3[i, j, k] = g[2, el, i, j, k] * gr + g[4, el, i, j, k] * gs + g[5, el, i, j, k] * gt
        for i in range(n1):
            for j in range(n2):
                for k in range(n3):
                    acc = 0.0
                    for q in range(n1):
                        acc += d[q, i] * f1[q, j, k]
                        acc += d[q, j] * f2[i, q, k]
                        acc += d[q, k] * f3[i, j, q]
                    w = lam_visc * acc
                    if lam_mass != 0.0:
                        w += lam_mass * b[el, i, j, k] * u[el, i, j, k]
                    out[el, i, j, k] = w
    return out


@njit(**_JIT)
def gs_gather(vals, perm, offsets):
    n_gid = offsets.shape[0] - 1
    sums = np.empty(n_gid, dtype=np.float64)
    for g in prange(n_gid):
        acc = 0.0
        for o in range(offsets[g], offsets[g + 1]):
            acc += vals[perm[o]]
        sums[g] = acc
    return sums


@njit(**_JIT)
def gs_scatter(sums, perm, offsets, out):
    n_gid = offsets.shape[0] - 1
    for g in prange(n_gid):
        v = sums[g]
        for o in range(offsets[g], offsets[g + 1]):
            out[perm[o]] = v
    return out
