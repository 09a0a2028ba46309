"""Exception hierarchy shared by all voxedge modules."""


class VoxedgeError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(VoxedgeError, ValueError):
    """Invalid parameters, degenerate grid geometry or mismatched inputs."""


class BoundsError(VoxedgeError, IndexError):
    """A voxel index falls outside the grid."""


class EvaluationError(VoxedgeError):
    """A metric cannot be computed, e.g. against an empty point cloud."""


class FormatError(VoxedgeError, IOError):
    """Base class for malformed or unreadable files."""


class BadMagicError(FormatError):
    pass


class VersionMismatchError(FormatError):
    pass


class TruncatedPayloadError(FormatError):
    pass


class PLYFormatError(FormatError):
    pass
