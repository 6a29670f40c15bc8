"""Fixed background triangulation of an axis-aligned box.

The mesh never depends on the geometric parameter; every parametrized
quantity (active cells, cut geometry, snapshots) is expressed on top of it.
"""
from dataclasses import dataclass, field
import math

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgumentError

LEFT, RIGHT, BOTTOM, TOP = 1, 2, 4, 8
BOUNDARY_LABELS = {"left": LEFT, "right": RIGHT, "bottom": BOTTOM, "top": TOP}

LOCATE_TOL = 1e-12


@dataclass(eq=False)
class BackgroundMesh:
    """P1 triangulation with face connectivity and boundary markers.

    ``faces`` holds sorted vertex pairs; ``face_cells[:, 0]`` is the lower
    adjacent cell index and ``face_cells[:, 1]`` the higher one, or -1 on
    the box boundary.  ``boundary_flags`` is a bitmask of LEFT/RIGHT/
    BOTTOM/TOP per vertex (corners carry two bits).
    """

    box: tuple
    vertices: np.ndarray
    cells: np.ndarray
    faces: np.ndarray
    face_cells: np.ndarray
    boundary_flags: np.ndarray
    shape: tuple = None
    areas: np.ndarray = field(init=False, repr=False)
    h_cells: np.ndarray = field(init=False, repr=False)
    grads: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        xy = self.vertices[self.cells]
        e1 = xy[:, 1] - xy[:, 0]
        e2 = xy[:, 2] - xy[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        self.areas = 0.5 * det
        edges = np.stack([xy[:, 1] - xy[:, 0], xy[:, 2] - xy[:, 1], xy[:, 0] - xy[:, 2]], axis=1)
        self.h_cells = np.linalg.norm(edges, axis=2).max(axis=1)
        # gradient of barycentric coordinate i is rot(edge opposite i) / (2 area)
        opp = np.stack([xy[:, 2] - xy[:, 1], xy[:, 0] - xy[:, 2], xy[:, 1] - xy[:, 0]], axis=1)
        self.grads = np.stack([-opp[..., 1], opp[..., 0]], axis=2) / det[:, None, None]
        self._buckets = None

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def h(self):
        return float(self.h_cells.max())

    @property
    def interior_faces(self):
        return np.flatnonzero(self.face_cells[:, 1] >= 0)

    def boundary_vertices(self, labels):
        """Indices of vertices lying on any of the named box edges."""
        mask = 0
        for name in labels:
            mask |= BOUNDARY_LABELS[name]
        return np.flatnonzero(self.boundary_flags & mask)

    def barycentric(self, cells, points):
        """Barycentric coordinates of ``points[k]`` with respect to ``cells[k]``."""
        cells = np.asarray(cells)
        points = np.asarray(points, dtype=float)
        x0 = self.vertices[self.cells[cells, 0]]
        g = self.grads[cells]
        l1 = np.einsum("ij,ij->i", g[:, 1], points - x0)
        l2 = np.einsum("ij,ij->i", g[:, 2], points - x0)
        return np.stack([1.0 - l1 - l2, l1, l2], axis=1)


def build_structured_mesh(box, target_h, pattern="right", even=False):
    """Split ``box = (x0, x1, y0, y1)`` into squares of side at most ``target_h``.

    Each square is cut along its bottom-left to top-right diagonal.  With
    ``pattern="alternating"`` the diagonal flips with the parity of the
    square (union-jack layout), which makes the mesh mirror symmetric about
    the box midlines when ``even`` forces even square counts.
    """
    x0, x1, y0, y1 = map(float, box)
    if not target_h > 0:
        raise InvalidArgumentError(f"target_h must be positive, got {target_h}")
    if not (x1 > x0 and y1 > y0):
        raise InvalidArgumentError(f"degenerate box {box}")
    if pattern not in ("right", "alternating"):
        raise InvalidArgumentError(f"unknown diagonal pattern {pattern!r}")
    # guard against ceil(2.0000000000000004)
    nx = max(1, math.ceil((x1 - x0) / target_h - 1e-9))
    ny = max(1, math.ceil((y1 - y0) / target_h - 1e-9))
    if even:
        nx += nx % 2
        ny += ny % 2
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    v0 = j * (nx + 1) + i
    v1 = v0 + 1
    v2 = v1 + nx + 1
    v3 = v0 + nx + 1
    if pattern == "right":
        flip = np.zeros(len(v0), dtype=bool)
    else:
        flip = (i + j) % 2 == 1
    lower = np.where(flip[:, None], np.column_stack([v0, v1, v3]), np.column_stack([v0, v1, v2]))
    upper = np.where(flip[:, None], np.column_stack([v1, v2, v3]), np.column_stack([v0, v2, v3]))
    cells = np.empty((2 * len(v0), 3), dtype=np.int64)
    cells[0::2] = lower
    cells[1::2] = upper

    faces, face_cells = _connectivity(cells)
    flags = np.zeros(len(vertices), dtype=np.uint8)
    ii = np.arange(len(vertices)) % (nx + 1)
    jj = np.arange(len(vertices)) // (nx + 1)
    flags[ii == 0] |= LEFT
    flags[ii == nx] |= RIGHT
    flags[jj == 0] |= BOTTOM
    flags[jj == ny] |= TOP
    return BackgroundMesh((x0, x1, y0, y1), vertices, cells, faces, face_cells, flags, shape=(nx, ny))


def _connectivity(cells):
    nc = len(cells)
    pairs = np.concatenate([cells[:, [0, 1]], cells[:, [1, 2]], cells[:, [2, 0]]])
    owner = np.tile(np.arange(nc), 3)
    pairs.sort(axis=1)
    faces, inverse = np.unique(pairs, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    face_cells = np.full((len(faces), 2), -1, dtype=np.int64)
    order = np.lexsort((owner, inverse))
    inv_sorted = inverse[order]
    own_sorted = owner[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = inv_sorted[1:] != inv_sorted[:-1]
    face_cells[inv_sorted[first], 0] = own_sorted[first]
    face_cells[inv_sorted[~first], 1] = own_sorted[~first]
    return faces, face_cells


def _bucket_index(mesh):
    if mesh._buckets is not None:
        return mesh._buckets
    x0, x1, y0, y1 = mesh.box
    nb = max(1, int(math.sqrt(mesh.n_cells / 2)))
    dx, dy = (x1 - x0) / nb, (y1 - y0) / nb
    xy = mesh.vertices[mesh.cells]
    lo = xy.min(axis=1) - LOCATE_TOL
    hi = xy.max(axis=1) + LOCATE_TOL
    bx0 = np.clip(np.floor((lo[:, 0] - x0) / dx).astype(int), 0, nb - 1)
    bx1 = np.clip(np.floor((hi[:, 0] - x0) / dx).astype(int), 0, nb - 1)
    by0 = np.clip(np.floor((lo[:, 1] - y0) / dy).astype(int), 0, nb - 1)
    by1 = np.clip(np.floor((hi[:, 1] - y0) / dy).astype(int), 0, nb - 1)
    spanx = bx1 - bx0 + 1
    count = spanx * (by1 - by0 + 1)
    cell_ids = np.repeat(np.arange(mesh.n_cells), count)
    local = np.arange(count.sum()) - np.repeat(np.cumsum(count) - count, count)
    sx = np.repeat(spanx, count)
    bucket = (np.repeat(by0, count) + local // sx) * nb + np.repeat(bx0, count) + local % sx
    order = np.lexsort((cell_ids, bucket))
    bucket, cell_ids = bucket[order], cell_ids[order]
    per = np.bincount(bucket, minlength=nb * nb)
    slot = np.arange(len(bucket)) - np.repeat(np.cumsum(per) - per, per)
    table = np.full((nb * nb, per.max()), -1, dtype=np.int64)
    table[bucket, slot] = cell_ids  # ascending cell index within each bucket
    mesh._buckets = (nb, dx, dy, table)
    return mesh._buckets


def locate_points(mesh, points):
    """Find a containing cell for every point.

    Returns ``(cells, bary)``; ``cells`` is -1 for points outside the box.
    When several cells contain a point (shared edges and vertices) the
    lowest cell index wins.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    nb, dx, dy, table = _bucket_index(mesh)
    x0, x1, y0, y1 = mesh.box
    n = len(points)
    out_cells = np.full(n, -1, dtype=np.int64)
    out_bary = np.zeros((n, 3))
    inside = (
        (points[:, 0] >= x0 - LOCATE_TOL)
        & (points[:, 0] <= x1 + LOCATE_TOL)
        & (points[:, 1] >= y0 - LOCATE_TOL)
        & (points[:, 1] <= y1 + LOCATE_TOL)
    )
    idx = np.flatnonzero(inside)
    if len(idx) == 0:
        return out_cells, out_bary
    p = points[idx]
    bx = np.clip(np.floor((p[:, 0] - x0) / dx).astype(int), 0, nb - 1)
    by = np.clip(np.floor((p[:, 1] - y0) / dy).astype(int), 0, nb - 1)
    cand = table[by * nb + bx]  # (P, W)
    valid = cand >= 0
    cc = np.where(valid, cand, 0)
    x0v = mesh.vertices[mesh.cells[cc, 0]]
    g = mesh.grads[cc]
    d = p[:, None, :] - x0v
    l1 = np.einsum("pwk,pwk->pw", g[:, :, 1], d)
    l2 = np.einsum("pwk,pwk->pw", g[:, :, 2], d)
    l0 = 1.0 - l1 - l2
    ok = valid & (l0 >= -LOCATE_TOL) & (l1 >= -LOCATE_TOL) & (l2 >= -LOCATE_TOL)
    found = ok.any(axis=1)
    first = ok.argmax(axis=1)
    rows = np.arange(len(p))
    sel = np.flatnonzero(found)
    out_cells[idx[sel]] = cand[rows[sel], first[sel]]
    out_bary[idx[sel]] = np.column_stack(
        [l0[rows[sel], first[sel]], l1[rows[sel], first[sel]], l2[rows[sel], first[sel]]]
    )
    return out_cells, out_bary


def locate_point(mesh, point):
    """Single-point variant of :func:`locate_points`; returns ``None`` outside the box."""
    cells, bary = locate_points(mesh, np.asarray(point, dtype=float)[None, :])
    if cells[0] < 0:
        return None
    return int(cells[0]), bary[0]


def interpolate(mesh, values, points):
    """Evaluate the P1 interpolant of nodal ``values`` at ``points``.

    ``values`` may be ``(V,)`` or ``(V, k)``.  Points outside the box get 0.
    """
    cells, bary = locate_points(mesh, points)
    values = np.asarray(values)
    return evaluate_located(mesh, values, cells, bary)


def evaluate_located(mesh, values, cells, bary):
    found = cells >= 0
    cc = np.where(found, cells, 0)
    nodal = values[mesh.cells[cc]]  # (P, 3) or (P, 3, k)
    if nodal.ndim == 2:
        out = np.einsum("pi,pi->p", bary, nodal)
        out[~found] = 0.0
    else:
        out = np.einsum("pi,pik->pk", bary, nodal)
        out[~found] = 0.0
    return out


def mass_matrix(mesh):
    """Consistent P1 mass matrix over the whole background mesh."""
    local = (np.ones((3, 3)) + np.eye(3)) / 12.0
    data = (mesh.areas[:, None, None] * local[None]).ravel()
    rows = np.repeat(mesh.cells, 3, axis=1).ravel()
    cols = np.tile(mesh.cells, (1, 3)).ravel()
    n = mesh.n_vertices
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))
