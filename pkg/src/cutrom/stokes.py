"""Equal-order P1/P1 CutFEM for Stokes flow around an embedded obstacle.

Unknowns are ordered ``(u1, u2, p)`` over the active dofs.  The obstacle
boundary carries Nitsche conditions, the box edges strong conditions by
row replacement.  Velocity ghost penalties act on the ghost faces and the
pressure jump penalty on every interior face of the active mesh, or on
the ghost faces only with ``paper_faces``.
"""
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import darcy, fem
from .errors import InvalidArgumentError
from .linalg import Factorization, SparseSystem

# applied in order, so walls overwrite the inlet at the corners
DEFAULT_BOX_BCS = (("left", (1.0, 0.0)), ("bottom", (0.0, 0.0)), ("top", (0.0, 0.0)))


@dataclass
class StokesProblem:
    """Viscosity, data, box conditions and penalties.

    ``g`` and ``g_D`` are ``None``, a 2-vector or a callable returning
    ``(n, 2)``.  ``box_bcs`` lists ``(edge, value)`` pairs imposed
    strongly; edges not listed are do-nothing outflow boundaries.
    """

    domain: Any
    nu: float = 1.0
    g: Any = None
    g_D: Any = None
    box_bcs: tuple = DEFAULT_BOX_BCS
    gamma_D: float = 10.0
    gamma_1u: float = 0.1
    gamma_1p: float = 0.1
    paper_faces: bool = False
    order: int = 2

    def __post_init__(self):
        if not self.nu > 0:
            raise InvalidArgumentError(f"viscosity must be positive, got {self.nu}")
        if not (self.gamma_D > 0 and self.gamma_1u > 0 and self.gamma_1p > 0):
            raise InvalidArgumentError("Stokes penalties must be positive")

    @property
    def dirichlet_edges(self):
        return tuple(edge for edge, _ in self.box_bcs)


@dataclass
class StokesField:
    velocity: np.ndarray  # (n, 2)
    pressure: np.ndarray  # (n,)
    active: Any
    mu: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.mu is None:
            self.mu = self.active.mu

    @classmethod
    def from_vector(cls, x, active):
        n = active.n_dofs
        return cls(np.column_stack([x[:n], x[n : 2 * n]]), x[2 * n :].copy(), active)

    def to_vector(self):
        return np.concatenate([self.velocity[:, 0], self.velocity[:, 1], self.pressure])

    def velocity_field(self):
        return darcy.FieldVector(self.velocity, self.active)

    def pressure_field(self):
        return darcy.FieldVector(self.pressure, self.active)


def _vector_data(data, points, mu):
    n = len(points)
    if data is None:
        return np.zeros((n, 2))
    if callable(data):
        return np.broadcast_to(np.asarray(data(points, mu), dtype=float), (n, 2)).copy()
    return np.broadcast_to(np.asarray(data, dtype=float), (n, 2)).copy()


def _add_block(system, rows, cols, local, row_off, col_off):
    k = rows.shape[1]
    system.add(
        np.repeat(rows, cols.shape[1], axis=1) + row_off,
        np.tile(cols, (1, k)) + col_off,
        local,
    )


def pressure_faces(problem, active):
    return active.ghost_faces if problem.paper_faces else active.interior_faces


def assemble_stokes(problem, active, pin=True):
    """Block system for ``(u1, u2, p)``; ``pin=False`` skips the strong box rows."""
    mesh, mu, order, nu = active.mesh, active.mu, problem.order, problem.nu
    n = active.n_dofs
    system = SparseSystem(3 * n)
    off = (0, n, 2 * n)

    dofs, K = fem.stiffness_blocks(active, order)
    for c in range(2):
        _add_block(system, dofs, dofs, nu * K, off[c], off[c])

    pts, wts, cells = active.bulk_quadrature(order)
    pb = fem.point_basis(active, pts, cells)
    B, G = pb.values, pb.grads
    for c in range(2):
        # -(p, d_c psi) and +(d_c u, xi)
        _add_block(system, pb.dofs, pb.dofs, -fem.outer(wts, G[:, :, c], B), off[c], off[2])
        _add_block(system, pb.dofs, pb.dofs, fem.outer(wts, B, G[:, :, c]), off[2], off[c])
    g = _vector_data(problem.g, pts, mu)
    for c in range(2):
        system.add_rhs(pb.dofs + off[c], (wts * g[:, c])[:, None] * B)

    pts, wts, normals, cells = active.interface_quadrature(order)
    if len(pts):
        pb = fem.point_basis(active, pts, cells)
        B = pb.values
        dn = np.einsum("pik,pk->pi", pb.grads, normals)
        hK = mesh.h_cells[cells]
        pen = nu * problem.gamma_D / hK
        vel = -nu * fem.outer(wts, B, dn) - nu * fem.outer(wts, dn, B) + fem.outer(wts * pen, B, B)
        gD = _vector_data(problem.g_D, pts, mu)
        for c in range(2):
            _add_block(system, pb.dofs, pb.dofs, vel, off[c], off[c])
            # +(p n, psi) and -(u.n, xi)
            _add_block(system, pb.dofs, pb.dofs, fem.outer(wts * normals[:, c], B, B), off[c], off[2])
            _add_block(system, pb.dofs, pb.dofs, -fem.outer(wts * normals[:, c], B, B), off[2], off[c])
            rhs = (wts * gD[:, c])[:, None] * (pen[:, None] * B - nu * dn)
            system.add_rhs(pb.dofs + off[c], rhs)
        flux = wts * np.einsum("pk,pk->p", gD, normals)
        system.add_rhs(pb.dofs + off[2], -flux[:, None] * B)

    if len(active.ghost_faces):
        ju = fem.face_jumps(active, active.ghost_faces)
        local = fem.jump_blocks(ju, problem.gamma_1u * ju.h)
        for c in range(2):
            _add_block(system, ju.dofs, ju.dofs, local, off[c], off[c])
    faces = pressure_faces(problem, active)
    if len(faces):
        jp = fem.face_jumps(active, faces)
        _add_block(system, jp.dofs, jp.dofs, fem.jump_blocks(jp, problem.gamma_1p * jp.h**3), off[2], off[2])

    if pin:
        dofs, values = box_dirichlet(problem, active)
        system.pin(dofs, values)
    return system


def box_dirichlet(problem, active):
    """Global unknown indices and values of the strong box conditions."""
    mesh, n = active.mesh, active.n_dofs
    value = {}
    for edge, v in problem.box_bcs:
        for vert in mesh.boundary_vertices([edge]):
            if active.dof_map[vert] >= 0:
                value[int(vert)] = v
    verts = np.array(sorted(value), dtype=np.int64)
    if len(verts) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    vals = np.array([value[v] for v in verts], dtype=float)
    local = active.dof_map[verts]
    return np.concatenate([local, local + n]), np.concatenate([vals[:, 0], vals[:, 1]])


def solve_stokes(problem, active):
    return StokesField.from_vector(darcy.solve_system(assemble_stokes(problem, active)), active)


def solve_supremizer(pressure, active, edges=("left", "bottom", "top"), gamma_D=10.0, gamma_1=0.1):
    """Velocity-like field ``s`` with ``-lap s = grad p``, ``s = 0`` on the Dirichlet parts.

    Both components share one factorization; the right-hand side is the
    cellwise-constant gradient of the P1 pressure tested against P1 shape
    functions on the physical domain.
    """
    p = pressure.values if isinstance(pressure, darcy.FieldVector) else np.asarray(pressure)
    if p.shape != (active.n_dofs,):
        raise InvalidArgumentError("pressure must live on the active dofs")
    problem = darcy.DarcyProblem(
        active.domain, g=0.0, g_D=0.0, gamma_D=gamma_D, gamma_1=gamma_1,
        strong_outer_bc=0.0, strong_edges=tuple(edges),
    )
    system = darcy.assemble(problem, active)
    rhs = supremizer_rhs(p, active, problem.order)
    rhs[system.pinned] = 0.0
    s = Factorization(system.matrix).solve(rhs)
    s[system.pinned] = 0.0
    return darcy.FieldVector(s, active)


def supremizer_rhs(p, active, order=2):
    pts, wts, cells = active.bulk_quadrature(order)
    pb = fem.point_basis(active, pts, cells)
    grad = np.einsum("pik,pi->pk", pb.grads, p[pb.dofs])
    rhs = np.zeros((active.n_dofs, 2))
    for c in range(2):
        np.add.at(rhs[:, c], pb.dofs.ravel(), ((wts * grad[:, c])[:, None] * pb.values).ravel())
    return rhs
