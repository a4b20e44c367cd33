"""Field snapshots (legacy-VTK unstructured) and binary checkpoints.

VTK snapshots subdivide every element into N^3 hexahedral cells at the GLL
lattice so high-order fields can be inspected in standard viewers.

Checkpoints are a versioned binary container: magic, version, a JSON header
listing named float64 arrays (name, shape) plus arbitrary JSON metadata,
followed by the raw little-endian array payloads in header order.  The
format is documented bit-exactly in docs/checkpoint_format.md; round-trips
are bit-exact.
"""

import json

import numpy as np

from .errors import CheckpointError

_CKPT_MAGIC = b"SEMFCKPT"
_CKPT_VERSION = 1


def write_vtk(path, space, scalars=None, vectors=None, title="semflow fields"):
    """Write point coordinates and fields as legacy ASCII VTK.

    scalars: dict name -> (E, n, n, n); vectors: dict name -> (3, E, n, n, n).
    """
    scalars = scalars or {}
    vectors = vectors or {}
    n = space.n
    ne = space.n_elements
    npts = ne * n**3
    pts = space.coords.reshape(3, -1)
    with open(path, "w", encoding="ascii") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(title.replace("\n", " ")[:255] + "\n")
        f.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {npts} double\n")
        for i in range(npts):
            f.write(f"{pts[0, i]:.16e} {pts[1, i]:.16e} {pts[2, i]:.16e}\n")
        ncell = ne * (n - 1) ** 3
        f.write(f"CELLS {ncell} {ncell * 9}\n")
        for e in range(ne):
            base = e * n**3
            for i in range(n - 1):
                for j in range(n - 1):
                    for k in range(n - 1):
                        p = base + (i * n + j) * n + k
                        c = (
                            p, p + n * n, p + n * n + n, p + n,
                            p + 1, p + n * n + 1, p + n * n + n + 1, p + n + 1,
                        )
                        f.write("8 " + " ".join(str(v) for v in c) + "\n")
        f.write(f"CELL_TYPES {ncell}\n")
        f.write("12\n" * ncell)
        if scalars or vectors:
            f.write(f"POINT_DATA {npts}\n")
        for name, fld in scalars.items():
            f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in fld.reshape(-1):
                f.write(f"{v:.16e}\n")
        for name, fld in vectors.items():
            f.write(f"VECTORS {name} double\n")
            flat = fld.reshape(3, -1)
            for i in range(npts):
                f.write(f"{flat[0, i]:.16e} {flat[1, i]:.16e} {flat[2, i]:.16e}\n")


def write_checkpoint(path, arrays, meta):
    """Write named float64 arrays plus JSON metadata to a checkpoint file."""
    specs = []
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        if arr.dtype != np.float64:
            raise CheckpointError(f"checkpoint arrays must be float64, {name} is {arr.dtype}")
        specs.append({"name": name, "shape": list(arr.shape)})
    header = json.dumps({"arrays": specs, "meta": meta}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_CKPT_MAGIC)
        f.write(np.uint32(_CKPT_VERSION).tobytes())
        f.write(np.uint64(len(header)).tobytes())
        f.write(header)
        for name, arr in arrays.items():
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_checkpoint(path):
    """Read a checkpoint; returns (arrays dict, meta dict)."""
    with open(path, "rb") as f:
        blob = f.read()
    pos = 0

    def take(count, section):
        nonlocal pos
        if pos + count > len(blob):
            raise CheckpointError(
                f"truncated checkpoint: wanted {count} bytes, have {len(blob) - pos}",
                offset=pos, section=section,
            )
        out = blob[pos : pos + count]
        pos += count
        return out

    magic = take(8, "magic")
    if magic != _CKPT_MAGIC:
        raise CheckpointError(f"bad magic {magic!r}, expected {_CKPT_MAGIC!r}",
                              offset=0, section="magic")
    version = int(np.frombuffer(take(4, "version"), dtype="<u4")[0])
    if version != _CKPT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}, "
                              f"this build reads {_CKPT_VERSION}",
                              offset=8, section="version")
    header_len = int(np.frombuffer(take(8, "header_len"), dtype="<u8")[0])
    try:
        header = json.loads(take(header_len, "header").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt JSON header: {exc}",
                              offset=20, section="header") from exc
    arrays = {}
    for spec in header["arrays"]:
        shape = tuple(int(s) for s in spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        raw = take(count * 8, spec["name"])
        arrays[spec["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    if pos != len(blob):
        raise CheckpointError(f"{len(blob) - pos} trailing bytes after the last array",
                              offset=pos, section="trailer")
    return arrays, header["meta"]
