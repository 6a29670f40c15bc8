"""Proper orthogonal decomposition via the snapshot correlation matrix.

The inner product is the L2 product of P1 fields on the whole background
mesh; vector fields add their componentwise products.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import snapshot
from .errors import InvalidArgumentError
from .linalg import sym_eig

RANK_CUTOFF = 1e-14


def _apply_mass(mass, fields):
    """Mass matrix applied to ``(k, V)`` or ``(k, V, d)`` fields."""
    if fields.ndim == 2:
        return (mass @ fields.T).T
    k, V, d = fields.shape
    return (mass @ fields.transpose(1, 0, 2).reshape(V, k * d)).reshape(V, k, d).transpose(1, 0, 2)


def inner(mass, a, b):
    """Gram matrix ``<a_i, b_j>`` between two stacks of fields."""
    Mb = _apply_mass(mass, b)
    return a.reshape(len(a), -1) @ Mb.reshape(len(b), -1).T


def correlation(snapshots, mass):
    """``C_ij = <s_i, s_j>`` in the background L2 product."""
    if snapshots.M == 0:
        raise InvalidArgumentError("correlation of an empty snapshot set")
    C = inner(mass, snapshots.fields, snapshots.fields)
    return 0.5 * (C + C.T)


@dataclass
class ReducedBasis:
    """L2-orthonormal modes on the background mesh plus the full POD spectrum."""

    modes: np.ndarray  # (N, V) or (N, V, d)
    eigenvalues: np.ndarray
    field_kind: str = "scalar"
    extension_mode: str = "natural"
    transported: bool = False
    transport_reference: Optional[tuple] = None
    extra: dict = field(default_factory=dict)

    @property
    def N(self):
        return len(self.modes)

    @property
    def normalized_eigenvalues(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        return lam / lam[0] if len(lam) and lam[0] > 0 else lam

    def truncate(self, N):
        if not 1 <= N <= self.N:
            raise InvalidArgumentError(f"cannot take {N} of {self.N} modes")
        return ReducedBasis(
            self.modes[:N], self.eigenvalues, self.field_kind, self.extension_mode,
            self.transported, self.transport_reference, dict(self.extra),
        )


def _orthonormalize(mass, modes):
    """Two passes of classical Gram-Schmidt in the mass inner product."""
    out = modes.copy()
    flat = out.reshape(len(out), -1)
    for i in range(len(out)):
        for _ in range(2):
            if i:
                coef = inner(mass, out[:i], out[i : i + 1])[:, 0]
                flat[i] -= coef @ flat[:i]
        nrm = np.sqrt(max(inner(mass, out[i : i + 1], out[i : i + 1])[0, 0], 0.0))
        if nrm == 0.0:
            raise InvalidArgumentError(f"mode {i} vanished during orthonormalization")
        flat[i] /= nrm
    return out


def compress(snapshots, N, mass, method="jacobi"):
    """First ``N`` POD modes of a snapshot set.

    Modes whose eigenvalue falls below ``1e-14 * lambda_1`` are dropped,
    so the returned basis may hold fewer than ``N`` modes.  The stored
    eigenvalue list always covers the whole spectrum.
    """
    if not 1 <= N <= snapshots.M:
        raise InvalidArgumentError(f"N must lie in [1, {snapshots.M}], got {N}")
    C = correlation(snapshots, mass)
    lam, Q = sym_eig(C, method=method)
    lam1 = lam[0]
    if not lam1 > 0:
        raise InvalidArgumentError("all snapshots vanish")
    keep = int(np.sum(lam[:N] / lam1 >= RANK_CUTOFF))
    S = snapshots.matrix()
    modes = (Q[:, :keep].T @ S) / np.sqrt(lam[:keep])[:, None]
    modes = _orthonormalize(mass, modes.reshape((keep,) + snapshots.fields.shape[1:]))
    return ReducedBasis(
        modes=modes,
        eigenvalues=lam,
        field_kind=snapshots.kind,
        extension_mode=snapshots.extension_mode,
        transported=snapshots.transported,
        transport_reference=snapshots.transport_reference,
        extra=dict(snapshots.extra),
    )


def projection_error(snapshots, basis, N, mass):
    """Sum over the set of squared L2 distances to the span of the first ``N`` modes."""
    Phi = basis.modes[:N]
    coef = inner(mass, snapshots.fields, Phi)
    total = np.trace(correlation(snapshots, mass))
    return float(total - np.sum(coef**2))


@dataclass
class StokesSpaces:
    """Reduced velocity space (velocity then supremizer modes) and pressure space."""

    velocity: np.ndarray  # (2N, V, 2)
    pressure: np.ndarray  # (N, V)
    N: int
    transported: bool = False
    transport_reference: Optional[tuple] = None

    @property
    def size(self):
        return len(self.velocity) + len(self.pressure)


def build_stokes_spaces(vel, sup, pr, N):
    """Combine the first ``N`` velocity, supremizer and pressure modes."""
    for name, basis in (("velocity", vel), ("supremizer", sup), ("pressure", pr)):
        if basis.N < N:
            raise InvalidArgumentError(f"{name} basis has {basis.N} modes, {N} requested")
    if not np.any(sup.modes[:N]):
        raise InvalidArgumentError("supremizer basis is identically zero")
    return StokesSpaces(
        velocity=np.concatenate([vel.modes[:N], sup.modes[:N]]),
        pressure=pr.modes[:N].copy(),
        N=N,
        transported=vel.transported,
        transport_reference=vel.transport_reference,
    )


def save_basis(basis, path):
    snapshot.write_arrays(
        path,
        basis.modes,
        {
            "kind": "basis",
            "field_kind": basis.field_kind,
            "extension_mode": basis.extension_mode,
            "transported": bool(basis.transported),
            "transport_reference": None
            if basis.transport_reference is None
            else [float(x) for x in basis.transport_reference],
            "eigenvalues": [float(x) for x in basis.eigenvalues],
            "extra": basis.extra,
        },
    )


def load_basis(path):
    modes, manifest = snapshot.read_arrays(path)
    if manifest.get("kind") != "basis":
        raise InvalidArgumentError(f"{path} does not hold a reduced basis")
    ref = manifest.get("transport_reference")
    return ReducedBasis(
        modes=modes,
        eigenvalues=np.array(manifest["eigenvalues"]),
        field_kind=manifest["field_kind"],
        extension_mode=manifest["extension_mode"],
        transported=manifest["transported"],
        transport_reference=None if ref is None else tuple(ref),
        extra=manifest.get("extra", {}),
    )

