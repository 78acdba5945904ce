"""Exception taxonomy.

The CLI maps these onto process exit codes: usage problems exit 1, bad or
inconsistent input data exits 2, and internal invariant violations exit 3.
Plain ``ValueError`` is reserved for programmer-level API misuse (invalid
parameter ranges passed directly to library functions).
"""


class VoxelAugError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(VoxelAugError):
    """Command line invoked with unknown/invalid flags or arguments (exit 1)."""


class DataError(VoxelAugError):
    """Input data is unreadable, malformed, or inconsistent (exit 2)."""


class NiftiError(DataError):
    """A NIfTI file could not be parsed or written."""


class UnsupportedFormatError(NiftiError):
    """The file is recognisably NIfTI but uses an unsupported variant/datatype."""


class DimensionalityError(NiftiError):
    """The image is not a 3D volume (time axes of length 1 are tolerated)."""


class ConfigError(DataError):
    """A pipeline configuration document violates the schema."""


class GeometryError(DataError):
    """Volume geometry is degenerate or two grids that must match do not."""


class MappingError(DataError):
    """A label value has no entry in a strict label mapping."""


class DegenerateDataError(DataError):
    """Statistical input carries no usable signal (e.g. all paired differences zero)."""


class InternalError(VoxelAugError):
    """An internal invariant was violated; indicates a bug, not bad input (exit 3)."""
