"""Independent dense reference constructions used by several test modules.

Everything here is built from numpy primitives only (kron, det, inv), so it
shares no code with the tensor-contraction kernels it is used to check.
"""

import numpy as np

from semflow.mesh import Mesh


def dense_stiffness(coords, dmat, weights):
    """Quadrature-assembled stiffness matrix of one element.

    coords: (3, n, n, n) physical GLL nodes.  Returns the (n^3, n^3) matrix
    K_ij = sum_q w_q J_q  grad(phi_i)(x_q) . grad(phi_j)(x_q).
    """
    n = dmat.shape[0]
    eye = np.eye(n)
    grad_hat = np.stack([
        np.kron(np.kron(dmat, eye), eye),
        np.kron(np.kron(eye, dmat), eye),
        np.kron(np.kron(eye, eye), dmat),
    ])                                            # (3, nn, nn)
    x = coords.reshape(3, -1)
    # xr[q, a, b] = d x_a / d r_b at node q
    xr = np.einsum("bqp,ap->qab", grad_hat, x)
    jac = np.linalg.det(xr)
    assert np.all(jac > 0.0)
    rx = np.linalg.inv(xr)                        # rx[q, b, a] = d r_b / d x_a
    w3 = np.einsum("i,j,k->ijk", weights, weights, weights).ravel()
    gphys = np.einsum("qba,bqj->aqj", rx, grad_hat)
    return np.einsum("q,q,aqi,aqj->ij", w3, jac, gphys, gphys)


def single_element_mesh(vertices, curved_coords=None, geom_order=None):
    """One-element mesh with every face tagged "wall"."""
    vertices = np.asarray(vertices, dtype=np.float64)
    if curved_coords is None:
        curved_elem = np.zeros(0, dtype=np.int64)
        curved = np.zeros((0, 1, 1, 1, 3))
    else:
        curved_elem = np.array([0], dtype=np.int64)
        curved = np.asarray(curved_coords, dtype=np.float64)[None]
    return Mesh(
        vertices=vertices,
        elements=np.arange(8, dtype=np.int64)[None, :],
        facet_elem=np.zeros(6, dtype=np.int64),
        facet_face=np.arange(6, dtype=np.int64),
        facet_tag=np.zeros(6, dtype=np.int64),
        tag_names=("wall",),
        curved_elem=curved_elem,
        curved_coords=curved,
        geom_order=geom_order,
    )


def unit_corners():
    """Corners of [-1, 1]^3 in the element corner ordering."""
    out = np.empty((8, 3))
    for c in range(8):
        out[c] = (-1.0 + 2.0 * (c & 1),
                  -1.0 + 2.0 * ((c >> 1) & 1),
                  -1.0 + 2.0 * ((c >> 2) & 1))
    return out


def sheared_corners():
    """A non-axis-aligned parallelepiped (affine image of [-1, 1]^3)."""
    amat = np.array([[1.0, 0.3, 0.1],
                     [0.0, 0.9, 0.2],
                     [0.1, 0.0, 1.1]])
    return unit_corners() @ amat.T


def curved_lattice(points, amp=0.06):
    """Smooth non-affine deformation of [-1, 1]^3 sampled on a GLL lattice.

    Chained shears x = r + amp sin(pi s) sin(pi t), y = s + amp sin(pi t),
    z = t give a triangular Jacobian, so det J == 1 identically and the
    corner vertices stay on the reference cube.
    """
    r, s, t = np.meshgrid(points, points, points, indexing="ij")
    x = r + amp * np.sin(np.pi * s) * np.sin(np.pi * t)
    y = s + amp * np.sin(np.pi * t)
    z = t.copy()
    return np.stack([x, y, z], axis=-1)


def dense_global_operator(op, shape):
    """Materialize a matrix-free operator by probing with unit vectors."""
    nn = int(np.prod(shape))
    cols = np.empty((nn, nn))
    e = np.zeros(nn)
    for j in range(nn):
        e[j] = 1.0
        cols[:, j] = op(e.reshape(shape)).ravel()
        e[j] = 0.0
    return cols
