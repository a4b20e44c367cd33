"""Hexahedral meshes: connectivity, generators, and a binary file format.

Conventions
-----------
Corner ordering (fixed, lexicographic in reference coordinates, r fastest):
corner ``c`` in 0..7 sits at reference position

    (r, s, t) = (-1 + 2*(c & 1), -1 + 2*((c >> 1) & 1), -1 + 2*((c >> 2) & 1))

Local face numbering: 0: r=-1, 1: r=+1, 2: s=-1, 3: s=+1, 4: t=-1, 5: t=+1.

Curved elements carry explicit isoparametric geometry nodes on the full
(geom_order+1)^3 GLL lattice; all other elements are trilinear images of
their 8 corner vertices.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .basis import make_basis
from .errors import MeshFormatError, TopologyError

#: corner indices of each local face, in the face order documented above
FACE_CORNERS = (
    (0, 2, 4, 6),
    (1, 3, 5, 7),
    (0, 1, 4, 5),
    (2, 3, 6, 7),
    (0, 1, 2, 3),
    (4, 5, 6, 7),
)

_MAGIC = b"SEMFMESH"
_VERSION = 1


@dataclass
class Mesh:
    """Hexahedral mesh with tagged boundary facets and optional curved geometry.

    Attributes
    ----------
    vertices : ndarray (V, 3) float64
    elements : ndarray (E, 8) int64
        Vertex indices per element in the documented corner order.
    facet_elem, facet_face, facet_tag : ndarray (F,) int64
        Boundary facets as (element, local face, index into tag_names).
    tag_names : tuple of str
    curved_elem : ndarray (C,) int64
        Elements carrying explicit geometry nodes.
    curved_coords : ndarray (C, ng+1, ng+1, ng+1, 3) float64
        Geometry node coordinates on the GLL lattice of order geom_order,
        indexed (r, s, t, component).
    geom_order : int or None
        Geometry polynomial order of the curved records (None if none).
    """

    vertices: np.ndarray
    elements: np.ndarray
    facet_elem: np.ndarray
    facet_face: np.ndarray
    facet_tag: np.ndarray
    tag_names: tuple
    curved_elem: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    curved_coords: np.ndarray = field(default_factory=lambda: np.zeros((0, 2, 2, 2, 3)))
    geom_order: int | None = None

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_elements(self):
        return self.elements.shape[0]

    @property
    def n_facets(self):
        return self.facet_elem.shape[0]

    def facets(self, tag):
        """(elements, faces) arrays of all boundary facets carrying the tag."""
        if tag not in self.tag_names:
            raise KeyError(f"unknown boundary tag {tag!r}; have {self.tag_names}")
        idx = self.tag_names.index(tag)
        sel = self.facet_tag == idx
        return self.facet_elem[sel], self.facet_face[sel]

    def element_corners(self, e):
        """Coordinates (8, 3) of element e's corner vertices in corner order."""
        return self.vertices[self.elements[e]]

    def validate(self):
        """Check index ranges, conformity, and facet tagging; raise TopologyError."""
        if self.elements.size and (
            self.elements.min() < 0 or self.elements.max() >= self.n_vertices
        ):
            raise TopologyError("element vertex index out of range")
        if self.facet_elem.size:
            if self.facet_elem.min() < 0 or self.facet_elem.max() >= self.n_elements:
                raise TopologyError("facet element index out of range")
            if self.facet_face.min() < 0 or self.facet_face.max() > 5:
                raise TopologyError("facet local face index out of range")
            if self.facet_tag.min() < 0 or self.facet_tag.max() >= len(self.tag_names):
                raise TopologyError("facet tag index out of range")
        # face-sharing relation: every face appears in one element (exterior)
        # or exactly two (interior, identical vertex sets = conforming)
        owners = {}
        for e in range(self.n_elements):
            ev = self.elements[e]
            for f, corners in enumerate(FACE_CORNERS):
                key = frozenset(int(ev[c]) for c in corners)
                owners.setdefault(key, []).append((e, f))
        for key, lst in owners.items():
            if len(lst) > 2:
                raise TopologyError(
                    f"face shared by {len(lst)} elements (non-conforming): {sorted(lst)}"
                )
        tagged = {}
        for e, f, t in zip(self.facet_elem, self.facet_face, self.facet_tag):
            if (e, f) in tagged:
                raise TopologyError(f"facet ({e}, {f}) tagged more than once")
            tagged[(int(e), int(f))] = int(t)
        for key, lst in owners.items():
            if len(lst) == 1:  # exterior face
                if lst[0] not in tagged:
                    raise TopologyError(
                        f"exterior face {lst[0]} carries no boundary tag"
                    )
            else:
                for ef in lst:
                    if ef in tagged:
                        raise TopologyError(f"interior face {ef} carries a boundary tag")
        extra = set(tagged) - {lst[0] for lst in owners.values() if len(lst) == 1}
        if extra:
            raise TopologyError(f"tagged facets are not exterior faces: {sorted(extra)}")
        if self.curved_elem.size:
            if self.geom_order is None:
                raise TopologyError("curved records present but geom_order unset")
            ng1 = self.geom_order + 1
            if self.curved_coords.shape != (self.curved_elem.size, ng1, ng1, ng1, 3):
                raise TopologyError("curved_coords shape inconsistent with geom_order")
            if self.curved_elem.min() < 0 or self.curved_elem.max() >= self.n_elements:
                raise TopologyError("curved element index out of range")
        return self


def _default_box_tags():
    return ("xlo", "xhi", "ylo", "yhi", "zlo", "zhi")


def gen_box_mesh(extent, counts, tags=None):
    """Cartesian box mesh of affine hexahedra.

    Parameters
    ----------
    extent : ((x0,x1), (y0,y1), (z0,z1)) or flat (x0, x1, y0, y1, z0, z1)
    counts : (nx, ny, nz) elements per direction, each >= 1
    tags : 6 face tag strings in order (xlo, xhi, ylo, yhi, zlo, zhi);
        repeated names merge facets under one tag.
    """
    tags = tuple(tags) if tags is not None else _default_box_tags()
    if len(tags) != 6:
        raise ValueError("tags must name the 6 box sides")
    counts = tuple(int(c) for c in counts)
    if any(c < 1 for c in counts):
        raise ValueError(f"element counts must be >= 1, got {counts}")
    extent = list(extent)
    if len(extent) == 6:
        extent = [(extent[0], extent[1]), (extent[2], extent[3]), (extent[4], extent[5])]
    if len(extent) != 3:
        raise ValueError(f"extent must give 3 intervals, got {extent}")
    lo = [float(iv[0]) for iv in extent]
    hi = [float(iv[1]) for iv in extent]
    if any(h <= l for l, h in zip(lo, hi)):
        raise ValueError(f"degenerate extent {extent}")
    nx, ny, nz = counts
    xs = np.linspace(lo[0], hi[0], nx + 1)
    ys = np.linspace(lo[1], hi[1], ny + 1)
    zs = np.linspace(lo[2], hi[2], nz + 1)

    def vid(i, j, k):
        return i + (nx + 1) * (j + (ny + 1) * k)

    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    verts = np.stack(
        [gx.transpose(2, 1, 0).ravel(), gy.transpose(2, 1, 0).ravel(), gz.transpose(2, 1, 0).ravel()],
        axis=1,
    )
    elements = []
    facet = []
    tag_names = []
    for t in tags:
        if t not in tag_names:
            tag_names.append(t)
    tag_idx = [tag_names.index(t) for t in tags]
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                conn = [
                    vid(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))
                    for c in range(8)
                ]
                e = len(elements)
                elements.append(conn)
                if i == 0:
                    facet.append((e, 0, tag_idx[0]))
                if i == nx - 1:
                    facet.append((e, 1, tag_idx[1]))
                if j == 0:
                    facet.append((e, 2, tag_idx[2]))
                if j == ny - 1:
                    facet.append((e, 3, tag_idx[3]))
                if k == 0:
                    facet.append((e, 4, tag_idx[4]))
                if k == nz - 1:
                    facet.append((e, 5, tag_idx[5]))
    fa = np.array(facet, dtype=np.int64).reshape(-1, 3)
    return Mesh(
        vertices=verts.astype(np.float64),
        elements=np.asarray(elements, dtype=np.int64),
        facet_elem=fa[:, 0].copy(),
        facet_face=fa[:, 1].copy(),
        facet_tag=fa[:, 2].copy(),
        tag_names=tuple(tag_names),
    )


def gen_cylinder_box_mesh(
    diameter,
    xlim,
    zlim,
    height,
    n_azimuthal=8,
    n_radial=2,
    n_axial=2,
    n_upstream=None,
    n_downstream=None,
    n_front=None,
    n_back=None,
    collar=None,
    geom_order=7,
):
    """Block-structured O-grid around a vertical cylinder inside a box.

    The cylinder of the given diameter stands on y=0 with axis x=z=0 and
    spans the full height.  A square collar of half-width ``collar``
    (default: one diameter) around the cylinder is meshed as an O-grid;
    the rest of the box is filled with Cartesian frame blocks.  Elements
    touching the cylinder carry curved geometry records whose boundary
    nodes lie exactly on the circle of radius diameter/2.

    Boundary tags: "inflow" (x = xlim[0]), "outflow" (x = xlim[1]),
    "bottom" (y = 0), "top" (y = height), "span" (both z sides),
    "cylinder" (the curved wall).

    Total element count (documented formula, a = n_azimuthal/4)::

        E = n_axial * ( 4*a*n_radial
                        + a*(n_upstream + n_downstream + n_front + n_back)
                        + (n_upstream + n_downstream)*(n_front + n_back) )
    """
    if n_azimuthal % 4 != 0 or n_azimuthal < 4:
        raise ValueError("n_azimuthal must be a positive multiple of 4")
    if n_radial < 1 or n_axial < 1:
        raise ValueError("n_radial and n_axial must be >= 1")
    if geom_order < 1:
        raise ValueError("geom_order must be >= 1")
    radius = float(diameter) / 2.0
    if radius <= 0:
        raise ValueError("diameter must be positive")
    c = float(collar) if collar is not None else float(diameter)
    if c <= radius:
        raise ValueError(
            f"collar half-width {c} must exceed the cylinder radius {radius}"
        )
    x0, x1 = float(xlim[0]), float(xlim[1])
    z0, z1 = float(zlim[0]), float(zlim[1])
    height = float(height)
    if not (x0 < -c and c < x1 and z0 < -c and c < z1):
        raise ValueError(
            "box must strictly contain the collar square "
            f"[-{c}, {c}]^2: got x={xlim}, z={zlim}"
        )
    if height <= 0:
        raise ValueError("height must be positive")
    a = n_azimuthal // 4

    def _auto(dist):
        return max(1, int(round(dist / (2.0 * c))))

    n_up = int(n_upstream) if n_upstream is not None else _auto(-c - x0)
    n_down = int(n_downstream) if n_downstream is not None else _auto(x1 - c)
    n_fr = int(n_front) if n_front is not None else _auto(-c - z0)
    n_bk = int(n_back) if n_back is not None else _auto(z1 - c)
    if min(n_up, n_down, n_fr, n_bk) < 1:
        raise ValueError("frame element counts must be >= 1")

    u_side = np.linspace(-c, c, a + 1)
    xs_left = np.linspace(x0, -c, n_up + 1)
    xs_right = np.linspace(c, x1, n_down + 1)
    zs_front = np.linspace(z0, -c, n_fr + 1)
    zs_back = np.linspace(c, z1, n_bk + 1)
    ys = np.linspace(0.0, height, n_axial + 1)

    # square perimeter walked counterclockwise from the (+c, -c) corner;
    # 4*a points, one per azimuthal sector boundary
    sq = []
    for j in range(a):
        sq.append((c, u_side[j]))
    for j in range(a):
        sq.append((u_side[a - j], c))
    for j in range(a):
        sq.append((-c, u_side[a - j]))
    for j in range(a):
        sq.append((u_side[j], -c))
    sq = np.array(sq)  # (4a, 2) as (x, z)
    theta = np.arctan2(sq[:, 1], sq[:, 0])
    circ = np.stack([radius * np.cos(theta), radius * np.sin(theta)], axis=1)
    # ring_pts[j, k] blends circle (j=0) to square (j=n_radial)
    sigma = (np.arange(n_radial + 1) / n_radial)[:, None, None]
    ring_pts = (1.0 - sigma) * circ[None, :, :] + sigma * sq[None, :, :]

    verts = []
    vmap = {}

    def vid(x, y, z):
        key = (x, y, z)
        i = vmap.get(key)
        if i is None:
            i = len(verts)
            vmap[key] = i
            verts.append(key)
        return i

    tag_names = ("inflow", "outflow", "bottom", "top", "span", "cylinder")
    t_in, t_out, t_bot, t_top, t_span, t_cyl = range(6)
    elements = []
    facets = []
    curved_elem = []
    curved_coords = []
    gb = make_basis(geom_order)
    xi01 = (gb.points + 1.0) / 2.0  # reference coordinate mapped to [0, 1]
    naz = 4 * a

    # O-grid: reference axes (r, s, t) = (azimuthal, radial outward, vertical)
    for m in range(n_axial):
        for j in range(n_radial):
            for k in range(naz):
                k1 = (k + 1) % naz
                conn = []
                for cc in range(8):
                    cr, cs, ct = cc & 1, (cc >> 1) & 1, (cc >> 2) & 1
                    p = ring_pts[j + cs, k1 if cr else k]
                    conn.append(vid(p[0], ys[m + ct], p[1]))
                e = len(elements)
                elements.append(conn)
                if j == 0:
                    facets.append((e, 2, t_cyl))
                    th_lo = theta[k]
                    th_hi = theta[k1]
                    while th_hi <= th_lo:
                        th_hi += 2.0 * np.pi
                    th_i = th_lo + xi01 * (th_hi - th_lo)
                    arc = np.stack(
                        [radius * np.cos(th_i), radius * np.sin(th_i)], axis=1
                    )
                    outer = ring_pts[1, k][None, :] + xi01[:, None] * (
                        ring_pts[1, k1] - ring_pts[1, k]
                    )[None, :]
                    blend = (
                        (1.0 - xi01)[None, :, None] * arc[:, None, :]
                        + xi01[None, :, None] * outer[:, None, :]
                    )  # (r, s, 2)
                    yy = ys[m] + xi01 * (ys[m + 1] - ys[m])  # (t,)
                    ng1 = geom_order + 1
                    rec = np.empty((ng1, ng1, ng1, 3))
                    rec[:, :, :, 0] = blend[:, :, None, 0]
                    rec[:, :, :, 2] = blend[:, :, None, 1]
                    rec[:, :, :, 1] = yy[None, None, :]
                    curved_elem.append(e)
                    curved_coords.append(rec)
                if m == 0:
                    facets.append((e, 4, t_bot))
                if m == n_axial - 1:
                    facets.append((e, 5, t_top))

    # Cartesian frame blocks: reference axes (r, s, t) = (z, x, y)
    def add_block(xcoords, zcoords, xlo_tag=None, xhi_tag=None, zlo_tag=None, zhi_tag=None):
        nxb = len(xcoords) - 1
        nzb = len(zcoords) - 1
        for m in range(n_axial):
            for iz in range(nzb):
                for ix in range(nxb):
                    conn = []
                    for cc in range(8):
                        cr, cs, ct = cc & 1, (cc >> 1) & 1, (cc >> 2) & 1
                        conn.append(
                            vid(xcoords[ix + cs], ys[m + ct], zcoords[iz + cr])
                        )
                    e = len(elements)
                    elements.append(conn)
                    if iz == 0 and zlo_tag is not None:
                        facets.append((e, 0, zlo_tag))
                    if iz == nzb - 1 and zhi_tag is not None:
                        facets.append((e, 1, zhi_tag))
                    if ix == 0 and xlo_tag is not None:
                        facets.append((e, 2, xlo_tag))
                    if ix == nxb - 1 and xhi_tag is not None:
                        facets.append((e, 3, xhi_tag))
                    if m == 0:
                        facets.append((e, 4, t_bot))
                    if m == n_axial - 1:
                        facets.append((e, 5, t_top))

    add_block(xs_left, u_side, xlo_tag=t_in)
    add_block(xs_right, u_side, xhi_tag=t_out)
    add_block(u_side, zs_front, zlo_tag=t_span)
    add_block(u_side, zs_back, zhi_tag=t_span)
    add_block(xs_left, zs_front, xlo_tag=t_in, zlo_tag=t_span)
    add_block(xs_right, zs_front, xhi_tag=t_out, zlo_tag=t_span)
    add_block(xs_left, zs_back, xlo_tag=t_in, zhi_tag=t_span)
    add_block(xs_right, zs_back, xhi_tag=t_out, zhi_tag=t_span)

    fa = np.array(facets, dtype=np.int64)
    return Mesh(
        vertices=np.array(verts, dtype=np.float64),
        elements=np.asarray(elements, dtype=np.int64),
        facet_elem=fa[:, 0].copy(),
        facet_face=fa[:, 1].copy(),
        facet_tag=fa[:, 2].copy(),
        tag_names=tag_names,
        curved_elem=np.asarray(curved_elem, dtype=np.int64),
        curved_coords=np.asarray(curved_coords),
        geom_order=geom_order,
    )


# ---------------------------------------------------------------------------
# binary file format (see docs/mesh_format.md)
# ---------------------------------------------------------------------------

def write_mesh(mesh, path):
    """Write the mesh in the versioned little-endian binary format."""
    header = {
        "vertex_count": int(mesh.n_vertices),
        "element_count": int(mesh.n_elements),
        "facet_count": int(mesh.n_facets),
        "tag_names": list(mesh.tag_names),
        "curved_count": int(mesh.curved_elem.size),
        "geom_order": None if mesh.geom_order is None else int(mesh.geom_order),
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", _VERSION))
        f.write(struct.pack("<Q", len(hbytes)))
        f.write(hbytes)
        f.write(np.ascontiguousarray(mesh.vertices, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(mesh.elements, dtype="<i8").tobytes())
        f.write(np.ascontiguousarray(mesh.facet_elem, dtype="<i8").tobytes())
        f.write(np.ascontiguousarray(mesh.facet_face, dtype="<i8").tobytes())
        f.write(np.ascontiguousarray(mesh.facet_tag, dtype="<i8").tobytes())
        f.write(np.ascontiguousarray(mesh.curved_elem, dtype="<i8").tobytes())
        f.write(np.ascontiguousarray(mesh.curved_coords, dtype="<f8").tobytes())


def read_mesh(path):
    """Read a mesh file, raising MeshFormatError with byte offsets on damage."""
    with open(path, "rb") as f:
        data = f.read()
    pos = 0

    def take(nbytes, section):
        nonlocal pos
        if pos + nbytes > len(data):
            raise MeshFormatError(
                f"truncated file: need {nbytes} bytes, have {len(data) - pos}",
                offset=pos,
                section=section,
            )
        chunk = data[pos : pos + nbytes]
        pos += nbytes
        return chunk

    magic = take(len(_MAGIC), "magic")
    if magic != _MAGIC:
        raise MeshFormatError(
            f"bad magic {magic!r}, expected {_MAGIC!r}", offset=0, section="magic"
        )
    (version,) = struct.unpack("<I", take(4, "version"))
    if version != _VERSION:
        raise MeshFormatError(
            f"unsupported mesh format version {version}", offset=8, section="version"
        )
    (hlen,) = struct.unpack("<Q", take(8, "header"))
    hstart = pos
    try:
        header = json.loads(take(int(hlen), "header").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MeshFormatError(
            f"header is not valid JSON: {exc}", offset=hstart, section="header"
        ) from exc
    try:
        nv = int(header["vertex_count"])
        ne = int(header["element_count"])
        nf = int(header["facet_count"])
        tag_names = tuple(str(t) for t in header["tag_names"])
        nc = int(header["curved_count"])
        geom_order = header["geom_order"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MeshFormatError(
            f"header missing or malformed field: {exc}", offset=hstart, section="header"
        ) from exc
    if min(nv, ne, nf, nc) < 0:
        raise MeshFormatError("negative count in header", offset=hstart, section="header")
    if nc > 0 and geom_order is None:
        raise MeshFormatError(
            "curved records present but geom_order is null",
            offset=hstart,
            section="header",
        )

    def arr(count, width, dtype, section):
        raw = take(count * width * np.dtype(dtype).itemsize, section)
        return np.frombuffer(raw, dtype=dtype).reshape(count, width).copy()

    vertices = arr(nv, 3, "<f8", "vertices").astype(np.float64)
    elements = arr(ne, 8, "<i8", "elements").astype(np.int64)
    facet_elem = arr(nf, 1, "<i8", "facet_elem").ravel().astype(np.int64)
    facet_face = arr(nf, 1, "<i8", "facet_face").ravel().astype(np.int64)
    facet_tag = arr(nf, 1, "<i8", "facet_tag").ravel().astype(np.int64)
    curved_elem = arr(nc, 1, "<i8", "curved_elem").ravel().astype(np.int64)
    if nc > 0:
        ng1 = int(geom_order) + 1
        raw = take(nc * ng1 * ng1 * ng1 * 3 * 8, "curved_coords")
        curved_coords = (
            np.frombuffer(raw, dtype="<f8").reshape(nc, ng1, ng1, ng1, 3).copy()
        ).astype(np.float64)
    else:
        curved_coords = np.zeros((0, 2, 2, 2, 3))
    if pos != len(data):
        raise MeshFormatError(
            f"{len(data) - pos} trailing bytes after final section",
            offset=pos,
            section="end",
        )
    return Mesh(
        vertices=vertices,
        elements=elements,
        facet_elem=facet_elem,
        facet_face=facet_face,
        facet_tag=facet_tag,
        tag_names=tag_names,
        curved_elem=curved_elem,
        curved_coords=curved_coords,
        geom_order=None if geom_order is None else int(geom_order),
    )
