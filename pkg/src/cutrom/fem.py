"""P1 kernels shared by the Darcy and Stokes assemblers.

Everything here works on batches: quadrature points carry the index of
their background cell, local matrices are ``(batch, 3, 3)`` or, for
face jumps, ``(batch, 6, 6)``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError


@dataclass
class PointBasis:
    """P1 shape data at a batch of points: values, gradients, local dofs."""

    values: np.ndarray  # (P, 3)
    grads: np.ndarray  # (P, 3, 2)
    dofs: np.ndarray  # (P, 3) active numbering
    cells: np.ndarray  # (P,)


def point_basis(active, points, cells):
    mesh = active.mesh
    return PointBasis(
        values=mesh.barycentric(cells, points),
        grads=mesh.grads[cells],
        dofs=active.dof_map[mesh.cells[cells]],
        cells=cells,
    )


def evaluate(data, points, mu, mesh=None, cells=None, bary=None):
    """Evaluate problem data at points.

    ``data`` may be ``None`` (zero), a number, a callable ``(points, mu)``
    or a nodal background field whose P1 interpolant is used (requires
    ``cells`` and ``bary``).
    """
    n = len(points)
    if data is None:
        return np.zeros(n)
    if callable(data):
        return np.broadcast_to(np.asarray(data(points, mu), dtype=float), (n,)).copy()
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if mesh is None or arr.shape[0] != mesh.n_vertices:
        raise InvalidArgumentError("nodal data must have one value per background vertex")
    return np.einsum("pi,pi->p", bary, arr[mesh.cells[cells]])


def cell_measures(active, order=2):
    """Physical area of every background cell (zero outside the domain)."""
    _, wts, cells = active.bulk_quadrature(order)
    return np.bincount(cells, weights=wts, minlength=active.mesh.n_cells)


def stiffness_blocks(active, order=2):
    """``(dofs, K)`` with ``K[c] = |K_c cap D| G_c G_c^T`` over active cells."""
    cells = active.active_cells
    meas = cell_measures(active, order)[cells]
    G = active.mesh.grads[cells]
    K = meas[:, None, None] * np.einsum("cik,cjk->cij", G, G)
    return active.dof_map[active.mesh.cells[cells]], K


def outer(w, a, b):
    """Per-point weighted outer products ``w a_i b_j``."""
    return w[:, None, None] * a[:, :, None] * b[:, None, :]


@dataclass
class FaceJumps:
    """Normal-derivative jump data on a set of interior faces.

    ``coef[f] @ U[dofs[f]]`` is the jump of ``n_F . grad u`` across face
    ``f`` for a nodal field ``U``; the normal points from the lower to the
    higher indexed neighbour.
    """

    faces: np.ndarray
    dofs: np.ndarray  # (F, 6)
    coef: np.ndarray  # (F, 6)
    length: np.ndarray
    h: np.ndarray  # max of the neighbouring cell diameters
    normals: np.ndarray


def face_jumps(active, faces):
    mesh = active.mesh
    faces = np.asarray(faces, dtype=np.int64)
    c0, c1 = mesh.face_cells[faces, 0], mesh.face_cells[faces, 1]
    if (c1 < 0).any():
        raise InvalidArgumentError("jump terms need interior faces")
    a, b = mesh.vertices[mesh.faces[faces, 0]], mesh.vertices[mesh.faces[faces, 1]]
    d = b - a
    length = np.linalg.norm(d, axis=1)
    n = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
    towards = mesh.vertices[mesh.cells[c1]].mean(axis=1) - a
    n[np.einsum("fk,fk->f", towards, n) < 0] *= -1.0
    g0 = np.einsum("fik,fk->fi", mesh.grads[c0], n)
    g1 = np.einsum("fik,fk->fi", mesh.grads[c1], n)
    dofs = active.dof_map[np.concatenate([mesh.cells[c0], mesh.cells[c1]], axis=1)]
    return FaceJumps(
        faces=faces,
        dofs=dofs,
        coef=np.concatenate([g0, -g1], axis=1),
        length=length,
        h=np.maximum(mesh.h_cells[c0], mesh.h_cells[c1]),
        normals=n,
    )


def jump_blocks(jumps, scale):
    """Local matrices ``scale_f |F| jump_i jump_j`` (gradients are constant per cell)."""
    w = scale * jumps.length
    return outer(w, jumps.coef, jumps.coef)
