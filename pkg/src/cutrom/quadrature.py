"""Quadrature on cut cells, on the embedded interface and on mesh faces.

The interface inside a cell is the zero segment of the linear interpolant
of the level set, so the physical part of a cut cell is a triangle or a
quadrilateral (split into two triangles).  All batch routines work on
``(C, 3, 2)`` vertex arrays and ``(C, 3)`` level-set values.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError, NoInterfaceError

_a, _b = 0.445948490915965, 0.091576213509771
TRIANGLE_RULES = {
    1: (np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0])),
    2: (
        np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]),
        np.full(3, 1 / 3),
    ),
    # 6-point degree-4 rule, positive weights
    3: (
        np.array(
            [
                [1 - 2 * _a, _a, _a],
                [_a, 1 - 2 * _a, _a],
                [_a, _a, 1 - 2 * _a],
                [1 - 2 * _b, _b, _b],
                [_b, 1 - 2 * _b, _b],
                [_b, _b, 1 - 2 * _b],
            ]
        ),
        np.array([0.223381589678011] * 3 + [0.109951743655322] * 3),
    ),
}


def segment_rule(order):
    """Gauss-Legendre abscissae on [0, 1] and weights summing to one."""
    _check_order(order)
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def _check_order(order):
    if order not in (1, 2, 3):
        raise InvalidArgumentError(f"quadrature order must be 1, 2 or 3, got {order}")


@dataclass
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    normals: Optional[np.ndarray] = None

    @property
    def measure(self):
        return float(self.weights.sum())


@dataclass
class CutPieces:
    """Polygonal decomposition of a batch of cells.

    ``tris`` are the sub-triangles where the level set interpolant is
    negative; ``segments`` the interface chords with unit normals pointing
    towards positive values.  ``*_parent`` index into the input batch.
    """

    tris: np.ndarray
    tri_parent: np.ndarray
    segments: np.ndarray
    seg_parent: np.ndarray
    normals: np.ndarray


def _linear_gradient(xy, vals):
    e1 = xy[:, 1] - xy[:, 0]
    e2 = xy[:, 2] - xy[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    g1 = np.column_stack([e2[:, 1], -e2[:, 0]]) / det[:, None]
    g2 = np.column_stack([-e1[:, 1], e1[:, 0]]) / det[:, None]
    return (vals[:, 1] - vals[:, 0])[:, None] * g1 + (vals[:, 2] - vals[:, 0])[:, None] * g2


def _zero_on_edge(pa, pb, va, vb):
    t = va / (va - vb)
    return pa + t[:, None] * (pb - pa)


def clip_cells(xy, vals):
    xy = np.asarray(xy, dtype=float)
    vals = np.asarray(vals, dtype=float)
    neg = vals < 0
    nneg = neg.sum(axis=1)
    tris, tparent, segs, sparent, normals = [], [], [], [], []

    full = np.flatnonzero(nneg == 3)
    tris.append(xy[full])
    tparent.append(full)

    for count in (1, 2):
        idx = np.flatnonzero(nneg == count)
        if len(idx) == 0:
            continue
        if count == 1:
            k = np.argmax(neg[idx], axis=1)
            order = np.column_stack([k, (k + 1) % 3, (k + 2) % 3])
        else:
            k = np.argmin(neg[idx], axis=1)
            order = np.column_stack([(k + 1) % 3, (k + 2) % 3, k])
        p = np.take_along_axis(xy[idx], order[:, :, None], axis=1)
        v = np.take_along_axis(vals[idx], order, axis=1)
        a, b, c = p[:, 0], p[:, 1], p[:, 2]
        if count == 1:
            pab = _zero_on_edge(a, b, v[:, 0], v[:, 1])
            pac = _zero_on_edge(a, c, v[:, 0], v[:, 2])
            tris.append(np.stack([a, pab, pac], axis=1))
            tparent.append(idx)
            segs.append(np.stack([pab, pac], axis=1))
        else:
            pbc = _zero_on_edge(b, c, v[:, 1], v[:, 2])
            pac = _zero_on_edge(a, c, v[:, 0], v[:, 2])
            tris.append(np.stack([a, b, pbc], axis=1))
            tris.append(np.stack([a, pbc, pac], axis=1))
            tparent.extend([idx, idx])
            segs.append(np.stack([pbc, pac], axis=1))
        sparent.append(idx)
        g = _linear_gradient(xy[idx], vals[idx])
        normals.append(g / np.linalg.norm(g, axis=1)[:, None])

    def cat(parts, shape):
        return np.concatenate(parts) if parts else np.zeros(shape)

    return CutPieces(
        tris=cat(tris, (0, 3, 2)),
        tri_parent=cat(tparent, (0,)).astype(np.int64),
        segments=cat(segs, (0, 2, 2)),
        seg_parent=cat(sparent, (0,)).astype(np.int64),
        normals=cat(normals, (0, 2)),
    )


def reference_subdivision(level):
    """Uniform split of the reference triangle into ``4**level`` triangles.

    Returns barycentric coordinates of the sub-vertices and the
    counterclockwise vertex triples of the sub-triangles.
    """
    n = 2**level
    index = {}
    bary = []
    for j in range(n + 1):
        for i in range(n + 1 - j):
            index[i, j] = len(bary)
            bary.append((1.0 - (i + j) / n, i / n, j / n))
    tris = []
    for j in range(n):
        for i in range(n - j):
            tris.append((index[i, j], index[i + 1, j], index[i, j + 1]))
            if i + j < n - 1:
                tris.append((index[i + 1, j], index[i + 1, j + 1], index[i, j + 1]))
    return np.array(bary), np.array(tris, dtype=np.int64)


def triangle_points(tris, order=2):
    """Map the symmetric rule onto each triangle: ``(points, weights)`` flattened."""
    _check_order(order)
    bary, w = TRIANGLE_RULES[order]
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    pts = np.einsum("qi,tik->tqk", bary, tris)
    wts = area[:, None] * w[None, :]
    return pts.reshape(-1, 2), wts.ravel()


def segment_points(segs, order=2):
    s, w = segment_rule(order)
    length = np.linalg.norm(segs[:, 1] - segs[:, 0], axis=1)
    pts = segs[:, None, 0] + s[None, :, None] * (segs[:, None, 1] - segs[:, None, 0])
    wts = length[:, None] * w[None, :]
    return pts.reshape(-1, 2), wts.ravel()


def _snap(cell, phi):
    cell = np.asarray(cell, dtype=float).reshape(1, 3, 2)
    phi = np.asarray(phi, dtype=float).reshape(1, 3).copy()
    h = np.linalg.norm(cell[0] - np.roll(cell[0], 1, axis=0), axis=1).max()
    phi[np.abs(phi) <= 1e-12 * h] = -1e-14
    return cell, phi


def cut_bulk_rule(cell, phi_at_vertices, order=2):
    """Rule on the part of a triangle where the level-set interpolant is negative."""
    _check_order(order)
    xy, vals = _snap(cell, phi_at_vertices)
    pieces = clip_cells(xy, vals)
    pts, wts = triangle_points(pieces.tris, order)
    return QuadratureRule(pts, wts)


def interface_rule(cell, phi_at_vertices, order=2):
    """Gauss rule on the interface chord of a cut triangle."""
    _check_order(order)
    xy, vals = _snap(cell, phi_at_vertices)
    pieces = clip_cells(xy, vals)
    if len(pieces.segments) == 0:
        raise NoInterfaceError("the level set does not change sign on this cell")
    pts, wts = segment_points(pieces.segments, order)
    normals = np.repeat(pieces.normals, order, axis=0)
    return QuadratureRule(pts, wts, normals)


def face_rule(face, order=2, toward=None):
    """Gauss rule on a straight face.

    The normal is the face direction rotated clockwise, flipped if needed
    so that it points towards ``toward`` (e.g. the centroid of the higher
    indexed neighbour).
    """
    face = np.asarray(face, dtype=float)
    d = face[1] - face[0]
    length = np.linalg.norm(d)
    if not length > 0:
        raise InvalidArgumentError("degenerate face")
    n = np.array([d[1], -d[0]]) / length
    if toward is not None and np.dot(np.asarray(toward) - face[0], n) < 0:
        n = -n
    pts, wts = segment_points(face[None], order)
    return QuadratureRule(pts, wts, np.tile(n, (len(wts), 1)))
