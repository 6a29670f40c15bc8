"""Background-mesh snapshots: extension, transport and on-disk persistence.

A snapshot set is stored as a directory holding ``manifest.json`` and one
little-endian float64 file ``snap_%04d.f64`` per field.
"""
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import darcy
from .errors import InvalidArgumentError, ManifestVersionError, SnapshotIOError
from .geometry import classify
from .mesh import evaluate_located, locate_points

EXTENSION_MODES = ("zero", "natural", "harmonic")
FIELD_KINDS = ("scalar", "velocity", "pressure", "supremizer", "basis")
FORMAT_NAME = "cutrom-snapshots"
FORMAT_VERSION = 1


@dataclass
class SnapshotSet:
    """``M`` nodal background fields and the parameters they came from.

    ``fields`` has shape ``(M, V)`` for scalar kinds and ``(M, V, 2)`` for
    velocity and supremizer sets.
    """

    kind: str
    fields: np.ndarray
    parameters: np.ndarray
    extension_mode: str = "natural"
    transported: bool = False
    transport_reference: Optional[tuple] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise InvalidArgumentError(f"unknown snapshot kind {self.kind!r}")
        if self.extension_mode not in EXTENSION_MODES:
            raise InvalidArgumentError(f"unknown extension mode {self.extension_mode!r}")
        self.fields = np.asarray(self.fields, dtype=float)
        self.parameters = np.atleast_2d(np.asarray(self.parameters, dtype=float))
        if self.fields.ndim not in (2, 3):
            raise InvalidArgumentError("fields must be (M, V) or (M, V, d)")
        if len(self.parameters) != len(self.fields):
            raise InvalidArgumentError(
                f"{len(self.fields)} fields but {len(self.parameters)} parameter vectors"
            )

    @property
    def M(self):
        return len(self.fields)

    @property
    def n_vertices(self):
        return self.fields.shape[1]

    @property
    def components(self):
        return 1 if self.fields.ndim == 2 else self.fields.shape[2]

    def matrix(self):
        """Snapshots as rows of an ``(M, V * d)`` matrix, components blocked per vertex."""
        return self.fields.reshape(self.M, -1)


def extend(field_vector, mode, complement=None, gamma_D=10.0, gamma_1=0.1):
    """Background values of a field known on the active dofs.

    ``zero`` keeps nodes where the level set is non-positive, ``natural``
    every active node, ``harmonic`` solves a Laplace problem on the
    complement (built on demand unless ``complement`` is given).
    """
    if mode not in EXTENSION_MODES:
        raise InvalidArgumentError(f"unknown extension mode {mode!r}")
    active = field_vector.active
    if field_vector.tag != "active":
        raise InvalidArgumentError("extension expects a field on the active dofs")
    if mode == "natural":
        return field_vector.to_background()
    if mode == "zero":
        out = field_vector.to_background()
        out[active.vertex_values > 0] = 0.0
        return out
    if complement is None:
        complement = classify(active.mesh, active.domain.complement(), active.mu, active.subdivision, check=False)
    return darcy.solve_harmonic_extension(field_vector, complement, gamma_D, gamma_1).values


def transport_compose(mesh, values, transport, mu, direction="forward"):
    """Compose a nodal field with ``tau(mu)`` (``forward``) or its inverse.

    Every vertex ``x`` receives the P1 interpolant of ``values`` at
    ``tau(x)``; images outside the box give 0.  ``values`` may carry
    trailing dimensions, e.g. ``(V, 2)`` or ``(V, N)`` for many fields.
    """
    located = locate_transport(mesh, transport, mu, direction)
    return evaluate_located(mesh, np.asarray(values, dtype=float), *located)


def locate_transport(mesh, transport, mu, direction="forward", vertices=None):
    """Cells and barycentrics of the mapped vertices, reusable across fields."""
    if direction not in ("forward", "inverse"):
        raise InvalidArgumentError(f"direction must be forward or inverse, got {direction!r}")
    mapping = transport.forward if direction == "forward" else transport.inverse
    pts = mesh.vertices if vertices is None else vertices
    return locate_points(mesh, mapping(pts, np.atleast_1d(np.asarray(mu, dtype=float))))


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_arrays(path, arrays, meta):
    """Write ``arrays`` as ``snap_%04d.f64`` files plus a manifest carrying ``meta``."""
    path = Path(path)
    arrays = np.asarray(arrays, dtype="<f8")
    if len(arrays) == 0:
        raise InvalidArgumentError("refusing to save an empty set")
    try:
        path.mkdir(parents=True, exist_ok=True)
        files = []
        for i, a in enumerate(arrays):
            name = f"snap_{i:04d}.f64"
            (path / name).write_bytes(np.ascontiguousarray(a).tobytes())
            files.append({"name": name, "sha256": _sha256(path / name)})
        manifest = {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "M": int(len(arrays)),
            "dims": list(arrays.shape[1:]),
            **meta,
            "files": files,
        }
        tmp = path / "manifest.json.tmp"
        tmp.write_text(json.dumps(manifest, indent=1) + "\n")
        os.replace(tmp, path / "manifest.json")
    except OSError as exc:
        raise SnapshotIOError(f"cannot write snapshot directory {path}: {exc}") from exc


def read_arrays(path):
    """Inverse of :func:`write_arrays`; returns ``(arrays, manifest)``."""
    path = Path(path)
    try:
        manifest = json.loads((path / "manifest.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SnapshotIOError(f"cannot read manifest in {path}: {exc}") from exc
    if manifest.get("format") != FORMAT_NAME or manifest.get("version") != FORMAT_VERSION:
        raise ManifestVersionError(
            f"{path}: unsupported format {manifest.get('format')!r} version {manifest.get('version')!r}"
        )
    dims = tuple(manifest["dims"])
    arrays = np.empty((manifest["M"],) + dims)
    for i, entry in enumerate(manifest["files"]):
        file = path / entry["name"]
        try:
            raw = file.read_bytes()
        except OSError as exc:
            raise SnapshotIOError(f"cannot read {file}: {exc}") from exc
        if hashlib.sha256(raw).hexdigest() != entry["sha256"]:
            raise ManifestVersionError(f"checksum mismatch for {file}")
        data = np.frombuffer(raw, dtype="<f8")
        if data.size != int(np.prod(dims)):
            raise SnapshotIOError(f"{file} holds {data.size} values, expected {int(np.prod(dims))}")
        arrays[i] = data.reshape(dims)
    return arrays, manifest


def _reference_list(ref):
    return None if ref is None else [float(x) for x in ref]


def save(snapshots, path):
    write_arrays(
        path,
        snapshots.fields,
        {
            "kind": snapshots.kind,
            "extension_mode": snapshots.extension_mode,
            "transported": bool(snapshots.transported),
            "transport_reference": _reference_list(snapshots.transport_reference),
            "parameters": snapshots.parameters.tolist(),
            "extra": snapshots.extra,
        },
    )


def load(path):
    arrays, manifest = read_arrays(path)
    if manifest.get("kind") == "basis":
        raise ManifestVersionError(f"{path} holds a reduced basis, not a snapshot set")
    ref = manifest.get("transport_reference")
    return SnapshotSet(
        kind=manifest["kind"],
        fields=arrays,
        parameters=np.array(manifest["parameters"], dtype=float),
        extension_mode=manifest["extension_mode"],
        transported=manifest["transported"],
        transport_reference=None if ref is None else tuple(ref),
        extra=manifest.get("extra", {}),
    )
