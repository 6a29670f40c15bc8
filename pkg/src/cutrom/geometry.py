"""Level-set domains, active-mesh classification and transport maps."""
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import EmptyDomainError, InvalidArgumentError, ParameterRangeError
from .quadrature import clip_cells, reference_subdivision, segment_points, triangle_points

INSIDE, CUT, OUTSIDE = 0, 1, 2
SNAP_VALUE = -1e-14


@dataclass(frozen=True)
class LevelSetDomain:
    """Parametrized domain ``{x : side * phi(x, mu) < 0}``.

    ``phi`` maps ``(points (n, 2), mu)`` to ``(n,)`` values.  ``side`` is +1
    when the physical domain is where ``phi`` is negative and -1 when it is
    where ``phi`` is positive (flow around an obstacle).  ``dirichlet``
    optionally marks interface points as Dirichlet (True) or Neumann
    (False); ``None`` means the whole interface is Dirichlet.
    """

    phi: Callable
    parameter_box: tuple
    reference: tuple
    side: int = 1
    dirichlet: Optional[Callable] = None
    name: str = "domain"

    def value(self, points, mu):
        return self.side * np.asarray(self.phi(np.asarray(points, dtype=float), np.asarray(mu, dtype=float)))

    def complement(self):
        return replace(self, side=-self.side, name=self.name + "-complement")

    def check_parameter(self, mu):
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        if len(mu) != len(self.parameter_box):
            raise ParameterRangeError(
                f"{self.name}: expected {len(self.parameter_box)} parameters, got {len(mu)}"
            )
        for k, (lo, hi) in enumerate(self.parameter_box):
            if not lo - 1e-12 <= mu[k] <= hi + 1e-12:
                raise ParameterRangeError(f"{self.name}: mu[{k}]={mu[k]} outside [{lo}, {hi}]")
        return mu


@dataclass(eq=False)
class ActiveMesh:
    """Parameter-dependent view of the background mesh.

    ``vertex_values`` holds the level-set value at every background vertex.
    Inside cut cells the level set is replaced by its piecewise-linear
    interpolant on a uniform ``4**subdivision`` split of the cell; the
    resulting polygonal geometry is stored as ``tris`` (physical
    sub-triangles, parent cell in ``tri_cell``) and ``segments`` (interface
    chords, parent in ``seg_cell``, outward unit ``normals``).  Uncut
    inside cells appear in ``tris`` as themselves.
    """

    mesh: object
    domain: LevelSetDomain
    mu: np.ndarray
    classification: np.ndarray
    vertex_values: np.ndarray
    active_cells: np.ndarray
    cut_cells: np.ndarray
    ghost_faces: np.ndarray
    interior_faces: np.ndarray
    active_dofs: np.ndarray
    dof_map: np.ndarray
    subdivision: int
    tris: np.ndarray
    tri_cell: np.ndarray
    segments: np.ndarray
    seg_cell: np.ndarray
    normals: np.ndarray

    @property
    def n_dofs(self):
        return len(self.active_dofs)

    @property
    def inside_cells(self):
        return np.flatnonzero(self.classification == INSIDE)

    def bulk_quadrature(self, order=2):
        """``(points, weights, cells)`` covering the physical domain."""
        pts, wts = triangle_points(self.tris, order)
        nq = len(wts) // max(len(self.tris), 1)
        return pts, wts, np.repeat(self.tri_cell, nq)

    def interface_quadrature(self, order=2):
        """``(points, weights, normals, cells)`` on the embedded boundary."""
        pts, wts = segment_points(self.segments, order)
        return pts, wts, np.repeat(self.normals, order, axis=0), np.repeat(self.seg_cell, order)


def classify(mesh, domain, mu, subdivision=3, check=True):
    """Classify background cells as inside / cut / outside of ``domain`` at ``mu``.

    A cell is cut when the level-set interpolant on its sub-triangulation
    takes values within the snap tolerance ``1e-12 h`` of zero or of both
    signs.  ``subdivision=0`` uses the three vertex values only.
    """
    mu = domain.check_parameter(mu) if check else np.atleast_1d(np.asarray(mu, dtype=float))
    tol = 1e-12 * mesh.h
    values = domain.value(mesh.vertices, mu).astype(float)
    if subdivision == 0:
        cell_values = values[mesh.cells]
        bary, subtris = np.eye(3), np.array([[0, 1, 2]])
    else:
        bary, subtris = reference_subdivision(subdivision)
        xy = mesh.vertices[mesh.cells]
        sub_xy = np.einsum("sj,cjk->csk", bary, xy)
        cell_values = domain.value(sub_xy.reshape(-1, 2), mu).reshape(mesh.n_cells, len(bary))
    cls = np.full(mesh.n_cells, CUT, dtype=np.int8)
    cls[(cell_values < -tol).all(axis=1)] = INSIDE
    cls[(cell_values > tol).all(axis=1)] = OUTSIDE
    active = np.flatnonzero(cls != OUTSIDE)
    if len(active) == 0:
        raise EmptyDomainError(f"{domain.name}: no active cell at mu={mu.tolist()}")
    snapped = values.copy()
    snapped[np.abs(values) <= tol] = SNAP_VALUE

    cut = np.flatnonzero(cls == CUT)
    inside = np.flatnonzero(cls == INSIDE)
    cv = cell_values[cut]
    cv = np.where(np.abs(cv) <= tol, SNAP_VALUE, cv)
    sub_xy = np.einsum("sj,cjk->csk", bary, mesh.vertices[mesh.cells[cut]])
    nsub = len(subtris)
    pieces = clip_cells(
        sub_xy[:, subtris].reshape(-1, 3, 2),
        cv[:, subtris].reshape(-1, 3),
    )
    owner = np.repeat(cut, nsub)
    tris = np.concatenate([mesh.vertices[mesh.cells[inside]], pieces.tris])
    tri_cell = np.concatenate([inside, owner[pieces.tri_parent]])

    fc = mesh.face_cells
    other = np.maximum(fc[:, 1], 0)
    both = (fc[:, 1] >= 0) & (cls[fc[:, 0]] != OUTSIDE) & (cls[other] != OUTSIDE)
    touches_cut = (cls[fc[:, 0]] == CUT) | (cls[other] == CUT)

    dofs = np.unique(mesh.cells[active])
    dof_map = np.full(mesh.n_vertices, -1, dtype=np.int64)
    dof_map[dofs] = np.arange(len(dofs))
    return ActiveMesh(
        mesh=mesh,
        domain=domain,
        mu=mu,
        classification=cls,
        vertex_values=snapped,
        active_cells=active,
        cut_cells=cut,
        ghost_faces=np.flatnonzero(both & touches_cut),
        interior_faces=np.flatnonzero(both),
        active_dofs=dofs,
        dof_map=dof_map,
        subdivision=subdivision,
        tris=tris,
        tri_cell=tri_cell,
        segments=pieces.segments,
        seg_cell=owner[pieces.seg_parent],
        normals=pieces.normals,
    )


def ellipse_levelset(R=0.05):
    """Ellipse with semi-axes ``(mu1 R, mu2 R)`` centred at ``(mu3, mu4)``."""
    if not R > 0:
        raise InvalidArgumentError(f"R must be positive, got {R}")

    def phi(p, mu):
        m1, m2, m3, m4 = mu
        return m2**2 * (p[:, 0] - m3) ** 2 + m1**2 * (p[:, 1] - m4) ** 2 - m1**2 * m2**2 * R**2

    box = ((0.3, 1.8), (0.3, 1.8), (-0.85, 0.85), (-0.85, 0.85))
    return LevelSetDomain(phi, box, (1.0, 1.0, 0.0, 0.0), side=1, name="ellipse")


def cylinder_levelset(R=0.2, center_x=1.5):
    """Fluid region outside a disk of radius ``R`` centred at ``(center_x, mu)``.

    ``phi`` is the usual disk level set (negative inside the cylinder); the
    physical domain is its positive side.
    """

    def phi(p, mu):
        return (p[:, 0] - center_x) ** 2 + (p[:, 1] - mu[0]) ** 2 - R**2

    return LevelSetDomain(phi, ((-0.5, 0.5),), (0.0,), side=-1, name="cylinder")


@dataclass(frozen=True)
class TransportMap:
    forward: Callable
    inverse: Callable
    reference: tuple


def _ellipse_forward(p, mu):
    p = np.asarray(p, dtype=float)
    return np.column_stack([mu[0] * p[:, 0] + mu[2], mu[1] * p[:, 1] + mu[3]])


def _ellipse_inverse(p, mu):
    p = np.asarray(p, dtype=float)
    return np.column_stack([(p[:, 0] - mu[2]) / mu[0], (p[:, 1] - mu[3]) / mu[1]])


def ellipse_transport():
    """Affine map sending the reference circle onto the ellipse of ``mu``.

    Composing a snapshot with the forward map pulls the ellipse back onto
    the reference circle.
    """
    return TransportMap(_ellipse_forward, _ellipse_inverse, (1.0, 1.0, 0.0, 0.0))


def _cylinder_forward(p, mu):
    p = np.asarray(p, dtype=float)
    m = float(np.atleast_1d(mu)[0])
    y = p[:, 1]
    return np.column_stack([p[:, 0], y + m * (1.0 - y**2)])


def _cylinder_inverse(p, mu):
    p = np.asarray(p, dtype=float)
    m = float(np.atleast_1d(mu)[0])
    y = p[:, 1]
    if abs(m) < 1e-8:
        return np.column_stack([p[:, 0], y.copy()])
    disc = np.sqrt(np.maximum(4 * m * m - 4 * m * y + 1.0, 0.0))
    # (1 - sqrt(disc)) / (2 m) rewritten without cancellation
    return np.column_stack([p[:, 0], 2.0 * (y - m) / (1.0 + disc)])


def cylinder_transport():
    """Vertical shear keeping ``y = +-1`` fixed and sending ``y = 0`` to ``y = mu``."""
    return TransportMap(_cylinder_forward, _cylinder_inverse, (0.0,))
