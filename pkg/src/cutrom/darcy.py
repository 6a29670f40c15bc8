"""CutFEM discretization of the Poisson/Darcy pressure problem.

The bilinear form on the active mesh is

    a(u, v) = (grad u, grad v)_D
              - (n.grad u, v)_GD - (u, n.grad v)_GD + (gD/h u, v)_GD
              + (gN h n.grad u, n.grad v)_GN
              + sum_F (g1 h [n_F.grad u], [n_F.grad v])_F

with F running over the ghost faces.  The same machinery solves the
harmonic extension problem on the complement of the domain.
"""
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import fem
from .errors import InvalidArgumentError
from .linalg import Factorization, SparseSystem


@dataclass
class DarcyProblem:
    """Data and penalties of a Darcy/Poisson problem.

    ``g``, ``g_D``, ``g_N`` and ``strong_outer_bc`` accept anything
    :func:`cutrom.fem.evaluate` understands: ``None``, a number, a callable
    ``(points, mu)`` or a nodal background field.  ``strong_outer_bc``
    pins the active vertices on the box edges named in ``strong_edges``.
    """

    domain: Any
    g: Any = 0.0
    g_D: Any = 0.0
    g_N: Any = 0.0
    gamma_D: float = 10.0
    gamma_N: float = 0.0
    gamma_1: float = 0.1
    strong_outer_bc: Optional[Any] = None
    strong_edges: tuple = ("left", "right", "bottom", "top")
    order: int = 2

    def __post_init__(self):
        if not self.gamma_D > 0:
            raise InvalidArgumentError(f"gamma_D must be positive, got {self.gamma_D}")
        if self.gamma_N < 0 or self.gamma_1 < 0:
            raise InvalidArgumentError("gamma_N and gamma_1 must be non-negative")


@dataclass
class FieldVector:
    """Nodal values on the active dofs (``tag="active"``) or on all background vertices."""

    values: np.ndarray
    active: Any
    tag: str = "active"
    mu: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.mu is None:
            self.mu = self.active.mu
        expected = self.active.n_dofs if self.tag == "active" else self.active.mesh.n_vertices
        if self.values.shape[0] != expected:
            raise InvalidArgumentError(
                f"{self.tag} field needs {expected} rows, got {self.values.shape[0]}"
            )

    def to_background(self):
        """Background field equal to the values on active vertices and 0 elsewhere."""
        if self.tag == "background":
            return self.values.copy()
        out = np.zeros((self.active.mesh.n_vertices,) + self.values.shape[1:])
        out[self.active.active_dofs] = self.values
        return out


def _interface_split(problem, active, pts):
    if problem.domain.dirichlet is None:
        return np.ones(len(pts), dtype=bool)
    return np.asarray(problem.domain.dirichlet(pts, active.mu), dtype=bool)


def assemble(problem, active):
    """Matrix and right-hand side of the stabilized Nitsche formulation on ``active``."""
    mesh, mu, order = active.mesh, active.mu, problem.order
    system = SparseSystem(active.n_dofs)

    dofs, K = fem.stiffness_blocks(active, order)
    system.add_local(dofs, K)

    pts, wts, cells = active.bulk_quadrature(order)
    pb = fem.point_basis(active, pts, cells)
    g = fem.evaluate(problem.g, pts, mu, mesh, cells, pb.values)
    system.add_rhs(pb.dofs, (wts * g)[:, None] * pb.values)

    pts, wts, normals, cells = active.interface_quadrature(order)
    if len(pts):
        pb = fem.point_basis(active, pts, cells)
        dn = np.einsum("pik,pk->pi", pb.grads, normals)
        hK = mesh.h_cells[cells]
        dirichlet = _interface_split(problem, active, pts)
        w = np.where(dirichlet, wts, 0.0)
        B = pb.values
        local = -fem.outer(w, B, dn) - fem.outer(w, dn, B) + fem.outer(w * problem.gamma_D / hK, B, B)
        gD = fem.evaluate(problem.g_D, pts, mu, mesh, cells, B)
        rhs = (w * gD)[:, None] * (problem.gamma_D / hK[:, None] * B - dn)
        wn = np.where(dirichlet, 0.0, wts)
        if problem.gamma_N > 0:
            local += fem.outer(wn * problem.gamma_N * hK, dn, dn)
        if (~dirichlet).any():
            gN = fem.evaluate(problem.g_N, pts, mu, mesh, cells, B)
            rhs += (wn * gN)[:, None] * (B + problem.gamma_N * hK[:, None] * dn)
        system.add_local(pb.dofs, local)
        system.add_rhs(pb.dofs, rhs)

    if problem.gamma_1 > 0 and len(active.ghost_faces):
        jumps = fem.face_jumps(active, active.ghost_faces)
        system.add_local(jumps.dofs, fem.jump_blocks(jumps, problem.gamma_1 * jumps.h))

    if problem.strong_outer_bc is not None:
        _pin_box(system, problem.strong_outer_bc, active, problem.strong_edges)
    return system


def _pin_box(system, data, active, edges):
    mesh = active.mesh
    verts = mesh.boundary_vertices(edges)
    verts = verts[active.dof_map[verts] >= 0]
    if len(verts) == 0:
        return
    arr = None if callable(data) else np.asarray(data, dtype=float)
    if arr is not None and arr.ndim == 1:
        values = arr[verts]
    else:
        values = fem.evaluate(data, mesh.vertices[verts], active.mu)
    system.pin(active.dof_map[verts], values)


def solve_system(system):
    """Sparse LU solve with one step of iterative refinement if needed."""
    A, b = system.matrix, system.rhs
    lu = Factorization(A)
    x = lu.solve(b)
    r = b - A @ x
    if np.linalg.norm(r) > 1e-12 * max(np.linalg.norm(b), 1e-300):
        x = x + lu.solve(r)
    # pinned rows are unit rows, so their values are known exactly
    x[system.pinned] = b[system.pinned]
    return x


def solve(problem, active):
    """High-fidelity solution on the active dofs."""
    return FieldVector(solve_system(assemble(problem, active)), active)


def solve_harmonic_extension(trace_source, active_complement, gamma_D=10.0, gamma_1=0.1):
    """Extend a solved field harmonically into the complement of its domain.

    The complement problem has Nitsche data equal to the P1 interpolant of
    the naturally extended field on the interface and a strong zero on the
    box boundary.  The returned background field keeps the original value
    at nodes where the level set is non-positive and the complement
    solution elsewhere.  Vector fields are extended componentwise.
    """
    primal = trace_source.active
    natural = trace_source.to_background()
    values = natural.reshape(len(natural), -1)
    out = np.zeros_like(values)
    base = DarcyProblem(
        active_complement.domain, g=0.0, gamma_D=gamma_D, gamma_N=0.0, gamma_1=gamma_1,
        strong_outer_bc=0.0,
    )
    systems = []
    for k in range(values.shape[1]):
        base.g_D = values[:, k]
        systems.append(assemble(base, active_complement))
    A = systems[0].matrix
    lu = Factorization(A)
    rhs = np.column_stack([s.rhs for s in systems])
    sol = lu.solve(rhs).reshape(active_complement.n_dofs, -1)
    sol[systems[0].pinned] = rhs.reshape(sol.shape)[systems[0].pinned]
    out[active_complement.active_dofs] = sol
    physical = primal.vertex_values <= 0
    out[physical] = values[physical]
    return FieldVector(out.reshape(natural.shape), primal, tag="background")
