"""Exception types raised across the package."""


class CutromError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(CutromError, ValueError):
    pass


class EmptyDomainError(CutromError):
    """The level set leaves no active cell on the background mesh."""


class NoInterfaceError(CutromError):
    """An interface rule was requested on a cell the interface does not cross."""


class SingularMatrixError(CutromError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class SnapshotIOError(CutromError, OSError):
    pass


class ManifestVersionError(CutromError):
    """Manifest format, version or checksum does not match what was expected."""


class ParameterRangeError(CutromError, ValueError):
    pass
