"""Preconditioners for the assembled Helmholtz/Poisson operators.

``BlockJacobi`` inverts the assembled operator diagonal, computed
analytically from the tensor-product structure (no operator probing).

``HybridSchwarz`` combines additive overlapping-subdomain solves with a
coarse correction on the trilinear (mesh-vertex) space.  Each subdomain is
one element's points extended by the first interior GLL layer of its face
neighbors; subdomain matrices are restrictions of the assembled global
operator and are LU-factored once.  Residuals and corrections are weighted
by the inverse square root of the subdomain overlap count on both sides so
the preconditioner stays symmetric.  The coarse problem is Galerkin
(T^T A_e T summed over elements) and is solved with a fixed small number of
Jacobi-preconditioned CG iterations from a zero initial guess.
"""

import numpy as np
import scipy.linalg
import scipy.sparse

from . import kernels
from .kernels import _numpy as _knp
from .errors import SolverBreakdownError
from .mesh import FACE_CORNERS


def _assembled_diagonal(space, lam_visc, lam_mass):
    """Analytic diagonal of the local weak Helmholtz operator, assembled."""
    d = space.basis.dmat
    g = space.geom
    d2 = d * d
    dd = np.ascontiguousarray(np.diag(d))
    diag = np.einsum("mi,emjk->eijk", d2, g[0])
    diag += np.einsum("mj,eimk->eijk", d2, g[3])
    diag += np.einsum("mk,eijm->eijk", d2, g[5])
    diag += 2.0 * g[1] * dd[None, :, None, None] * dd[None, None, :, None]
    diag += 2.0 * g[2] * dd[None, :, None, None] * dd[None, None, None, :]
    diag += 2.0 * g[4] * dd[None, None, :, None] * dd[None, None, None, :]
    diag = lam_visc * diag + lam_mass * space.bm
    return space.gs.add(diag)


class BlockJacobi:
    """Inverse of the assembled operator diagonal; masked rows are identity."""

    def __init__(self, space, lam_visc, lam_mass, mask=None):
        diag = _assembled_diagonal(space, float(lam_visc), float(lam_mass))
        if mask is not None:
            diag = np.where(mask == 0.0, 1.0, diag)
        if not np.all(diag > 0.0):
            bad = int(np.argmin(diag))
            raise SolverBreakdownError(
                f"non-positive operator diagonal {diag.ravel()[bad]:.3e} "
                f"at flat point {bad}"
            )
        self.inv_diag = 1.0 / diag

    def __call__(self, r):
        return self.inv_diag * r


# local (i, j, k) index grids of the first GLL layer inside each face,
# in the face numbering of mesh.FACE_CORNERS
def _face_layer_flat(n, face):
    base = np.arange(n * n * n).reshape(n, n, n)
    sl = [slice(None)] * 3
    axis, side = divmod(face, 2)
    sl[axis] = 1 if side == 0 else n - 2
    return base[tuple(sl)].ravel()


def _element_matrices(space, lam_visc, lam_mass):
    """Dense element stiffness matrices from the local weak-form kernel.

    Columns are produced by pushing the n^3 identity basis through the
    element kernel with that element's metric replicated, which reuses the
    exact same arithmetic as the matrix-free operator.
    """
    n = space.n
    nn = n * n * n
    ident = np.eye(nn).reshape(nn, n, n, n)
    mats = np.empty((space.n_elements, nn, nn))
    d = space.basis.dmat
    for e in range(space.n_elements):
        ge = np.ascontiguousarray(
            np.broadcast_to(space.geom[:, e : e + 1], (6, nn, n, n, n))
        )
        be = np.ascontiguousarray(np.broadcast_to(space.bm[e : e + 1], (nn, n, n, n)))
        cols = _knp.ax_helmholtz_local(d, ge, be, ident, lam_visc, lam_mass)
        mats[e] = cols.reshape(nn, nn).T
    return mats


class HybridSchwarz:
    """Overlapping-Schwarz subdomain solves plus a trilinear coarse solve."""

    def __init__(self, space, mask=None, lam_visc=1.0, lam_mass=0.0, coarse_iters=10):
        self.space = space
        self.coarse_iters = int(coarse_iters)
        gs = space.gs
        n = space.n
        nn = n * n * n
        ne = space.n_elements
        gid_e = gs.gid.reshape(ne, nn)

        constrained = np.zeros(gs.n_gid, dtype=bool)
        if mask is not None:
            constrained[gs.gid[mask.ravel() == 0.0]] = True

        mats = _element_matrices(space, float(lam_visc), float(lam_mass))

        # face adjacency from shared mesh-vertex sets
        mesh = space.mesh
        face_map = {}
        for e in range(ne):
            for f, corners in enumerate(FACE_CORNERS):
                key = frozenset(mesh.elements[e, c] for c in corners)
                face_map.setdefault(key, []).append((e, f))
        neighbors = [[] for _ in range(ne)]
        for pairs in face_map.values():
            if len(pairs) == 2:
                (e0, f0), (e1, f1) = pairs
                neighbors[e0].append((e1, f1))
                neighbors[e1].append((e0, f0))

        layer_flat = [_face_layer_flat(n, f) for f in range(6)]

        # elements touching each gid, for locating overlapping stiffness
        gid_elems = [[] for _ in range(gs.n_gid)]
        for e in range(ne):
            for g in np.unique(gid_e[e]):
                gid_elems[g].append(e)

        overlap = np.zeros(gs.n_gid)
        self.subdomains = []
        bmg = gs.gather_unique(gs.add(space.bm))
        for e in range(ne):
            parts = [gid_e[e]]
            for e2, f2 in neighbors[e]:
                parts.append(gid_e[e2][layer_flat[f2]])
            sub = np.unique(np.concatenate(parts))
            overlap[sub] += 1.0
            cand = sorted({e2 for g in sub for e2 in gid_elems[g]})
            a = np.zeros((sub.size, sub.size))
            for e2 in cand:
                pos = np.searchsorted(sub, gid_e[e2])
                inside = sub[np.minimum(pos, sub.size - 1)] == gid_e[e2]
                li = np.nonzero(inside)[0]
                bi = pos[li]
                a[np.ix_(bi, bi)] += mats[e2][np.ix_(li, li)]
            fixed = np.nonzero(constrained[sub])[0]
            if fixed.size:
                a[fixed, :] = 0.0
                a[:, fixed] = 0.0
                a[fixed, fixed] = 1.0
            elif sub.size == gs.n_gid:
                # a pure-Neumann problem restricted to the whole domain is
                # singular; shift by a small multiple of the mass diagonal
                a[np.arange(sub.size), np.arange(sub.size)] += 1e-8 * bmg[sub]
            self.subdomains.append((sub, scipy.linalg.lu_factor(a)))

        self.wsqrt = 1.0 / np.sqrt(overlap)
        self.constrained = constrained

        # coarse space: one dof per mesh vertex, trilinear embedding
        phi = np.stack([(1.0 - space.basis.points) / 2.0, (1.0 + space.basis.points) / 2.0])
        t = np.empty((nn, 8))
        for c in range(8):
            wr = phi[c & 1]
            ws = phi[(c >> 1) & 1]
            wt = phi[(c >> 2) & 1]
            t[:, c] = (
                wr[:, None, None] * ws[None, :, None] * wt[None, None, :]
            ).ravel()
        nv = mesh.vertices.shape[0]
        ac = np.zeros((nv, nv))
        rows = []
        cols = []
        vals = []
        for e in range(ne):
            verts = mesh.elements[e]
            ac[np.ix_(verts, verts)] += t.T @ mats[e] @ t
            rows.append(gid_e[e])
            cols.append(np.repeat(verts[None, :], nn, axis=0).ravel())
            vals.append(t.ravel())
        rows = np.repeat(np.concatenate([r for r in rows]), 8)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        key = rows.astype(np.int64) * np.int64(nv) + cols
        _, first = np.unique(key, return_index=True)
        self.p_coarse = scipy.sparse.csr_matrix(
            (vals[first], (rows[first], cols[first])), shape=(gs.n_gid, nv)
        )
        vfixed = np.zeros(nv, dtype=bool)
        for e in range(ne):
            for c in range(8):
                i = (c & 1) * (n - 1)
                j = ((c >> 1) & 1) * (n - 1)
                k = ((c >> 2) & 1) * (n - 1)
                g = gid_e[e, (i * n + j) * n + k]
                if constrained[g]:
                    vfixed[mesh.elements[e, c]] = True
        if vfixed.any():
            ac[vfixed, :] = 0.0
            ac[:, vfixed] = 0.0
            ac[vfixed, vfixed] = 1.0
        self.a_coarse = ac
        self.v_fixed = vfixed
        dc = np.diag(ac).copy()
        dc[dc <= 0.0] = 1.0
        self.coarse_inv_diag = 1.0 / dc

    def _coarse_solve(self, rc):
        """Fixed-iteration Jacobi-CG on the vertex problem, zero start."""
        x = np.zeros_like(rc)
        r = rc.copy()
        z = self.coarse_inv_diag * r
        p = z.copy()
        rz = float(r @ z)
        if rz <= 0.0:
            return x
        for _ in range(self.coarse_iters):
            ap = self.a_coarse @ p
            pap = float(p @ ap)
            if pap <= 0.0:
                break
            alpha = rz / pap
            x += alpha * p
            r -= alpha * ap
            z = self.coarse_inv_diag * r
            rz_new = float(r @ z)
            if rz_new <= 0.0:
                break
            p = z + (rz_new / rz) * p
            rz = rz_new
        return x

    def __call__(self, r):
        gs = self.space.gs
        rg = gs.gather_unique(r)
        rw = self.wsqrt * rg
        z = np.zeros_like(rg)
        for sub, lu in self.subdomains:
            z[sub] += scipy.linalg.lu_solve(lu, rw[sub])
        z *= self.wsqrt
        rc = self.p_coarse.T @ rg
        rc[self.v_fixed] = 0.0
        z += self.p_coarse @ self._coarse_solve(rc)
        z[self.constrained] = rg[self.constrained]
        return gs.scatter_unique(z, r.shape)
