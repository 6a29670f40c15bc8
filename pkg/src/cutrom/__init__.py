"""Cut finite elements on a fixed background mesh and POD-Galerkin reduced order models."""
from .errors import (
    CutromError,
    EmptyDomainError,
    InvalidArgumentError,
    ManifestVersionError,
    NoInterfaceError,
    ParameterRangeError,
    SingularMatrixError,
    SnapshotIOError,
)

__version__ = "0.1.0"

__all__ = [
    "CutromError",
    "EmptyDomainError",
    "InvalidArgumentError",
    "ManifestVersionError",
    "NoInterfaceError",
    "ParameterRangeError",
    "SingularMatrixError",
    "SnapshotIOError",
]
