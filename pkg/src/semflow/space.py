"""Discrete function space: geometry factors, facet data, gather-scatter.

Field layout convention: scalar fields are arrays of shape ``(E, n, n, n)``
with axes (element, r-node, s-node, t-node) and n = N+1; vector fields
stack three scalars along a leading axis, ``(3, E, n, n, n)``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .errors import ConfigError, GeometryError, TopologyError

#: sign making the natural-axis-order tangent cross product point outward
_FACE_NORMAL_SIGN = (-1.0, 1.0, 1.0, -1.0, -1.0, 1.0)


@dataclass
class GatherScatter:
    """Direct-stiffness connectivity built from coincident GLL coordinates.

    gid : (E*n^3,) int64 global id per local point (ids sorted by the
        coordinates of their first local copy, ascending lexicographically)
    perm : local point indices grouped by gid, ascending within each group
    offsets : (n_gid+1,) group boundaries into perm
    mult : (E, n, n, n) float64 copy count per local point
    """

    gid: np.ndarray
    perm: np.ndarray
    offsets: np.ndarray
    mult: np.ndarray
    invmult: np.ndarray
    n_gid: int

    def add(self, u):
        """QQ^T u: sum coincident copies, write the sum back to every copy.

        Vector fields (any leading axes before the local-point axes) are
        processed component by component.
        """
        flat = np.ascontiguousarray(u.reshape(-1, self.perm.size))
        out = np.empty_like(flat)
        for row in range(flat.shape[0]):
            sums = kernels.gs_gather(flat[row], self.perm, self.offsets)
            kernels.gs_scatter(sums, self.perm, self.offsets, out[row])
        return out.reshape(u.shape)

    def avg(self, u):
        """Multiplicity-weighted average: projects onto continuous fields."""
        flat = np.ascontiguousarray(u.reshape(-1, self.perm.size))
        out = np.empty_like(flat)
        inv_counts = 1.0 / np.diff(self.offsets)
        for row in range(flat.shape[0]):
            sums = kernels.gs_gather(flat[row], self.perm, self.offsets)
            sums *= inv_counts
            kernels.gs_scatter(sums, self.perm, self.offsets, out[row])
        return out.reshape(u.shape)

    def gather_unique(self, u):
        """One value per global id (the first local copy's value)."""
        return u.reshape(-1)[self.perm[self.offsets[:-1]]]

    def scatter_unique(self, vals, shape):
        """Spread per-global-id values to every local copy."""
        out = np.empty(int(np.prod(shape)), dtype=np.float64)
        kernels.gs_scatter(np.ascontiguousarray(vals, dtype=np.float64), self.perm, self.offsets, out)
        return out.reshape(shape)

    def dot(self, u, v):
        """Multiplicity-weighted inner product (each global dof counted once)."""
        a = u.reshape(-1)
        b = v.reshape(-1)
        return float(np.dot(a * self.invmult.reshape(-1), b))


def _union_find_groups(n_pts, pairs):
    parent = np.arange(n_pts, dtype=np.int64)

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    for p, q in pairs:
        rp, rq = find(p), find(q)
        if rp != rq:
            if rp < rq:
                parent[rq] = rp
            else:
                parent[rp] = rq
    for i in range(n_pts):
        parent[i] = find(i)
    return parent


@dataclass
class FunctionSpace:
    """Basis bound to a mesh with all per-point geometry precomputed."""

    basis: object
    mesh: object
    coords: np.ndarray      # (3, E, n, n, n) physical x, y, z
    xr: np.ndarray          # (3, 3, E, n, n, n): xr[l, s] = dx_l/dr_s
    rx: np.ndarray          # (3, 3, E, n, n, n): rx[s, l] = dr_s/dx_l
    jac: np.ndarray         # (E, n, n, n) det of dx/dr
    bm: np.ndarray          # (E, n, n, n) mass weights rho_i rho_j rho_k * J
    geom: np.ndarray        # (6, E, n, n, n) packed G: rr, rs, rt, ss, st, tt
    gs: GatherScatter
    facet_elem: np.ndarray  # (F,)
    facet_face: np.ndarray  # (F,)
    facet_tag: np.ndarray   # (F,)
    facet_flat: np.ndarray  # (F, n, n) flat indices into (E*n^3,)
    facet_normal: np.ndarray  # (F, n, n, 3) outward unit normals
    facet_warea: np.ndarray   # (F, n, n) surface quadrature weights
    volume: float = 0.0
    _fn_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self):
        return self.basis.n

    @property
    def n_elements(self):
        return self.coords.shape[1]

    @property
    def shape(self):
        n = self.n
        return (self.n_elements, n, n, n)

    @property
    def x(self):
        return self.coords[0]

    @property
    def y(self):
        return self.coords[1]

    @property
    def z(self):
        return self.coords[2]

    def zeros(self):
        return np.zeros(self.shape)

    def zeros_vec(self):
        return np.zeros((3,) + self.shape)

    def from_function(self, fn):
        """Evaluate fn(x, y, z) -> scalar array at every GLL point."""
        return np.asarray(fn(self.coords[0], self.coords[1], self.coords[2]), dtype=np.float64)

    def integral(self, u):
        """GLL quadrature of a scalar field over the domain."""
        return float(np.dot(self.bm.reshape(-1), u.reshape(-1)))

    def l2_norm(self, u):
        return float(np.sqrt(max(self.integral(u * u), 0.0)))

    def mean(self, u):
        return self.integral(u) / self.volume

    def facet_sel(self, tag):
        """Boolean selector over facets carrying the given tag."""
        if tag not in self.mesh.tag_names:
            raise KeyError(f"unknown boundary tag {tag!r}; have {self.mesh.tag_names}")
        return self.facet_tag == self.mesh.tag_names.index(tag)

    def surface_integral(self, tag, vals_flat):
        """Integrate a scalar (given as flat (E*n^3,) samples) over a tagged surface."""
        sel = self.facet_sel(tag)
        v = vals_flat[self.facet_flat[sel]]
        return float(np.sum(self.facet_warea[sel] * v))


def _trilinear_coords(mesh, basis):
    n = basis.n
    xi = basis.points
    phi = np.stack([(1.0 - xi) / 2.0, (1.0 + xi) / 2.0])  # (2, n)
    wc = np.empty((8, n, n, n))
    for c in range(8):
        cr, cs, ct = c & 1, (c >> 1) & 1, (c >> 2) & 1
        wc[c] = phi[cr][:, None, None] * phi[cs][None, :, None] * phi[ct][None, None, :]
    corners = mesh.vertices[mesh.elements]  # (E, 8, 3)
    coords = np.einsum("ecl,cijk->leijk", corners, wc)
    return np.ascontiguousarray(coords)


def build_space(mesh, basis):
    """Bind a basis to a mesh: coordinates, metrics, facets, gather-scatter.

    Raises GeometryError if any Jacobian determinant is non-positive, naming
    the element and reference coordinates of the first offending point.
    """
    mesh.validate()
    n = basis.n
    E = mesh.n_elements
    coords = _trilinear_coords(mesh, basis)
    if mesh.curved_elem.size:
        if mesh.geom_order != basis.order:
            raise ConfigError(
                f"mesh curved geometry order {mesh.geom_order} does not match "
                f"basis order {basis.order}; regenerate the mesh at the solver order"
            )
        for l in range(3):
            coords[l][mesh.curved_elem] = mesh.curved_coords[..., l]

    d = basis.dmat
    xr = np.empty((3, 3, E, n, n, n))
    for l in range(3):
        xr[l, 0] = kernels.apply_r(d, coords[l])
        xr[l, 1] = kernels.apply_s(d, coords[l])
        xr[l, 2] = kernels.apply_t(d, coords[l])

    # reference-gradient (reciprocal) vectors: rows of the inverse Jacobian
    a0 = xr[:, 0]
    a1 = xr[:, 1]
    a2 = xr[:, 2]
    c12 = np.cross(a1, a2, axis=0)
    c20 = np.cross(a2, a0, axis=0)
    c01 = np.cross(a0, a1, axis=0)
    jac = np.einsum("l...,l...->...", a0, c12)
    if not np.all(jac > 0.0):
        bad = np.argwhere(jac <= 0.0)[0]
        e, i, j, k = (int(v) for v in bad)
        raise GeometryError(
            f"non-positive Jacobian determinant {jac[e, i, j, k]:.3e}",
            element=e,
            ref_coords=(basis.points[i], basis.points[j], basis.points[k]),
        )
    rx = np.stack([c12, c20, c01]) / jac  # rx[s, l]

    w = basis.weights
    w3 = w[:, None, None] * w[None, :, None] * w[None, None, :]
    bm = w3[None, :, :, :] * jac
    pair_idx = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
    geom = np.empty((6, E, n, n, n))
    for m, (s, t) in enumerate(pair_idx):
        geom[m] = bm * np.einsum("l...,l...->...", rx[s], rx[t])

    gs = _build_gather_scatter(mesh, coords)
    facet = _build_facets(mesh, basis, coords)
    space = FunctionSpace(
        basis=basis,
        mesh=mesh,
        coords=coords,
        xr=xr,
        rx=np.ascontiguousarray(rx),
        jac=jac,
        bm=np.ascontiguousarray(bm),
        geom=np.ascontiguousarray(geom),
        gs=gs,
        **facet,
    )
    space.volume = space.integral(np.ones(space.shape))
    return space


def _build_gather_scatter(mesh, coords):
    E, n = coords.shape[1], coords.shape[2]
    pts = coords.reshape(3, -1).T.copy()
    n_pts = pts.shape[0]
    corner = mesh.vertices[mesh.elements]
    diam = np.linalg.norm(corner.max(axis=1) - corner.min(axis=1), axis=1)
    tol = 1e-8 * float(diam.max())
    tree = cKDTree(pts)
    pairs = tree.query_pairs(r=tol, output_type="ndarray")
    if pairs.size:
        elem_of = np.repeat(np.arange(E, dtype=np.int64), n**3)
        vert_sets = [frozenset(int(v) for v in mesh.elements[e]) for e in range(E)]
        ep = elem_of[pairs[:, 0]]
        eq = elem_of[pairs[:, 1]]
        same = ep == eq
        if np.any(same):
            p = pairs[same][0]
            raise TopologyError(
                f"two GLL points of element {int(ep[same][0])} coincide within "
                f"tolerance {tol:.3e} (degenerate element?): local points {p}"
            )
        for pe, qe in zip(ep, eq):
            if not (vert_sets[pe] & vert_sets[qe]):
                raise TopologyError(
                    f"coincident points in non-adjacent elements {int(pe)} and "
                    f"{int(qe)} (tolerance {tol:.3e})"
                )
    roots = _union_find_groups(n_pts, pairs)
    # canonical representative = lowest local index in the group; ids ordered
    # by the representative's coordinates so numbering is mesh-order-invariant
    uniq_roots, inv = np.unique(roots, return_inverse=True)
    rep = np.full(uniq_roots.size, n_pts, dtype=np.int64)
    np.minimum.at(rep, inv, np.arange(n_pts, dtype=np.int64))
    rc = pts[rep]
    order = np.lexsort((rc[:, 2], rc[:, 1], rc[:, 0]))
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    gid = rank[inv]
    counts = np.bincount(gid, minlength=order.size)
    offsets = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
    perm = np.lexsort((np.arange(n_pts), gid)).astype(np.int64)
    mult = counts[gid].astype(np.float64).reshape(E, n, n, n)
    return GatherScatter(
        gid=gid.astype(np.int64),
        perm=perm,
        offsets=offsets,
        mult=mult,
        invmult=1.0 / mult,
        n_gid=int(order.size),
    )


def _face_grids(n):
    base = np.arange(n**3, dtype=np.int64).reshape(n, n, n)
    return (
        base[0, :, :],
        base[-1, :, :],
        base[:, 0, :],
        base[:, -1, :],
        base[:, :, 0],
        base[:, :, -1],
    )


def _build_facets(mesh, basis, coords):
    n = basis.n
    d = basis.dmat
    w = basis.weights
    grids = _face_grids(n)
    F = mesh.facet_elem.size
    flat_all = coords.reshape(3, -1)
    facet_flat = np.empty((F, n, n), dtype=np.int64)
    facet_normal = np.empty((F, n, n, 3))
    facet_warea = np.empty((F, n, n))
    for i in range(F):
        e = int(mesh.facet_elem[i])
        f = int(mesh.facet_face[i])
        idx = e * n**3 + grids[f]
        facet_flat[i] = idx
        fx = flat_all[:, idx]  # (3, n, n)
        ta = np.einsum("ab,lbc->lac", d, fx)
        tb = np.einsum("ab,lcb->lca", d, fx)
        raw = _FACE_NORMAL_SIGN[f] * np.cross(ta, tb, axis=0)
        area = np.linalg.norm(raw, axis=0)
        if np.any(area <= 0.0):
            raise GeometryError("degenerate boundary facet", element=e)
        facet_normal[i] = np.moveaxis(raw / area, 0, -1)
        facet_warea[i] = area * (w[:, None] * w[None, :])
    return dict(
        facet_elem=mesh.facet_elem.copy(),
        facet_face=mesh.facet_face.copy(),
        facet_tag=mesh.facet_tag.copy(),
        facet_flat=facet_flat,
        facet_normal=facet_normal,
        facet_warea=facet_warea,
    )
