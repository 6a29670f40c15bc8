"""Online stage: Galerkin projection of the parameter-dependent CutFEM forms.

For a query ``mu`` the full system ``A(mu) x = b(mu)`` is assembled on the
active mesh and projected onto the basis restricted to the active dofs.
Transported bases are first composed with the inverse transport map so
that the reference geometry is carried onto ``D(mu)``.  The reduced
operators are built once for the largest basis; every smaller basis
uses a leading block, which makes error sweeps over ``N`` cheap.
"""
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from . import darcy, stokes
from .errors import InvalidArgumentError, SingularMatrixError
from .geometry import classify
from .linalg import dense_solve
from .snapshot import locate_transport
from .mesh import evaluate_located


@dataclass
class RomSolution:
    """Reduced coefficients and the reconstructed background field(s)."""

    alpha: np.ndarray
    mu: np.ndarray
    active: Any
    field: Optional[np.ndarray] = None  # scalar problems
    velocity: Optional[np.ndarray] = None  # (V, 2)
    pressure: Optional[np.ndarray] = None  # (V,)


def transported_modes(mesh, modes, transport, mu):
    """Compose ``(k, V[, d])`` modes with the inverse transport at ``mu``."""
    if transport is None:
        raise InvalidArgumentError("a transported basis needs its transport map online")
    k = len(modes)
    stacked = np.moveaxis(modes, 0, -1).reshape(mesh.n_vertices, -1)
    located = locate_transport(mesh, transport, mu, "inverse")
    out = evaluate_located(mesh, stacked, *located)
    return np.moveaxis(out.reshape((mesh.n_vertices,) + modes.shape[2:] + (k,)), -1, 0)


def _reduced_solve(A, b, Z, label):
    try:
        return dense_solve(A, b)
    except SingularMatrixError:
        pass
    # retry without columns that vanish on the active mesh
    keep = np.flatnonzero(np.linalg.norm(Z, axis=0) >= 1e-12)
    alpha = np.zeros(len(b))
    if len(keep) == 0:
        raise SingularMatrixError(f"reduced {label} system of size {len(b)}: basis vanishes on the active mesh")
    try:
        alpha[keep] = dense_solve(A[np.ix_(keep, keep)], b[keep])
        return alpha
    except SingularMatrixError:
        pass
    # more modes than the active space can hold: Galerkin on the range of Z
    U, s, Wt = np.linalg.svd(Z, full_matrices=False)
    r = int(np.sum(s > 1e-10 * s[0]))
    T = Wt[:r].T / s[:r]  # alpha = T beta gives Z alpha = U_r beta
    try:
        beta = dense_solve(T.T @ A @ T, T.T @ b)
    except SingularMatrixError as exc:
        raise SingularMatrixError(
            f"reduced {label} system of size {len(b)} is singular (rank {r} on the active mesh)"
        ) from exc
    return T @ beta


class DarcyOnline:
    """Reduced Darcy operators at one parameter."""

    def __init__(self, basis, problem, mesh, mu, transport=None, active=None):
        mu = problem.domain.check_parameter(mu)
        self.mu = mu
        self.active = classify(mesh, problem.domain, mu) if active is None else active
        system = darcy.assemble(problem, self.active)
        modes = basis.modes
        if basis.transported:
            modes = transported_modes(mesh, modes, transport, mu)
        self.modes = modes  # (N, V)
        self.Z = modes[:, self.active.active_dofs].T
        self.A = self.Z.T @ (system.matrix @ self.Z)
        self.b = self.Z.T @ system.rhs
        self.system = system

    @property
    def N(self):
        return self.Z.shape[1]

    def solve(self, N=None):
        N = self.N if N is None else int(N)
        if not 1 <= N <= self.N:
            raise InvalidArgumentError(f"N must lie in [1, {self.N}], got {N}")
        alpha = _reduced_solve(self.A[:N, :N], self.b[:N], self.Z[:, :N], "Darcy")
        return RomSolution(alpha, self.mu, self.active, field=alpha @ self.modes[:N])


def online_solve_darcy(basis, problem, mesh, mu, transport=None, N=None):
    return DarcyOnline(basis, problem, mesh, mu, transport).solve(N)


class StokesOnline:
    """Reduced Stokes operators at one parameter.

    Columns are ordered velocity modes, supremizer modes, pressure modes.
    With a ``lift`` (``(V, 2)`` velocity, ``(V,)`` pressure on the
    background, in the basis frame) the reduced unknowns describe the
    fluctuation around it.
    """

    def __init__(self, spaces, problem, mesh, mu, transport=None, lift=None, active=None):
        mu = problem.domain.check_parameter(mu)
        self.mu, self.spaces = mu, spaces
        self.active = classify(mesh, problem.domain, mu) if active is None else active
        system = stokes.assemble_stokes(problem, self.active)
        vel, pr = spaces.velocity, spaces.pressure
        if spaces.transported:
            vel = transported_modes(mesh, vel, transport, mu)
            pr = transported_modes(mesh, pr, transport, mu)
        self.velocity_modes, self.pressure_modes = vel, pr
        dofs = self.active.active_dofs
        n, nv, npr = len(dofs), len(vel), len(pr)
        Z = np.zeros((3 * n, nv + npr))
        Z[:n, :nv] = vel[:, dofs, 0].T
        Z[n : 2 * n, :nv] = vel[:, dofs, 1].T
        Z[2 * n :, nv:] = pr[:, dofs].T
        self.Z = Z
        rhs = system.rhs
        self.lift = None
        if lift is not None:
            lv, lp = lift
            if spaces.transported:
                lv = transported_modes(mesh, lv[None], transport, mu)[0]
                lp = transported_modes(mesh, lp[None], transport, mu)[0]
            self.lift = (lv, lp)
            x0 = np.concatenate([lv[dofs, 0], lv[dofs, 1], lp[dofs]])
            rhs = rhs - system.matrix @ x0
        self.A = Z.T @ (system.matrix @ Z)
        self.b = Z.T @ rhs
        self.system = system

    def columns(self, N):
        Nmax = self.spaces.N
        if not 1 <= N <= Nmax:
            raise InvalidArgumentError(f"N must lie in [1, {Nmax}], got {N}")
        return np.concatenate([np.arange(N), Nmax + np.arange(N), 2 * Nmax + np.arange(N)])

    def solve(self, N=None):
        N = self.spaces.N if N is None else int(N)
        cols = self.columns(N)
        alpha = _reduced_solve(self.A[np.ix_(cols, cols)], self.b[cols], self.Z[:, cols], "Stokes")
        nv = 2 * N
        vel_idx = cols[:nv]
        pr_idx = cols[nv:] - len(self.velocity_modes)
        velocity = np.einsum("k,kvd->vd", alpha[:nv], self.velocity_modes[vel_idx])
        pressure = alpha[nv:] @ self.pressure_modes[pr_idx]
        if self.lift is not None:
            velocity = velocity + self.lift[0]
            pressure = pressure + self.lift[1]
        return RomSolution(alpha, self.mu, self.active, velocity=velocity, pressure=pressure)


def online_solve_stokes(spaces, problem, mesh, mu, transport=None, lift=None, N=None):
    return StokesOnline(spaces, problem, mesh, mu, transport, lift).solve(N)


def relative_error(hf, rom, active, order=2):
    """``||hf - rom|| / ||hf||`` in L2 over the physical domain of ``active``.

    Both arguments are background nodal fields, ``(V,)`` or ``(V, d)``.
    """
    hf, rom = np.asarray(hf, dtype=float), np.asarray(rom, dtype=float)
    if hf.shape != rom.shape or hf.shape[0] != active.mesh.n_vertices:
        raise InvalidArgumentError("fields must both live on the background vertices")
    mesh = active.mesh
    pts, wts, cells = active.bulk_quadrature(order)
    bary = mesh.barycentric(cells, pts)
    diff = evaluate_located(mesh, hf - rom, cells, bary)
    ref = evaluate_located(mesh, hf, cells, bary)
    den = np.sum(wts * np.sum(ref.reshape(len(wts), -1) ** 2, axis=1))
    if not den > 0:
        raise InvalidArgumentError("reference field has zero norm on the physical domain")
    num = np.sum(wts * np.sum(diff.reshape(len(wts), -1) ** 2, axis=1))
    return float(np.sqrt(num / den))
