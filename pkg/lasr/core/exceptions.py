"""Exception hierarchy shared by services and the command line."""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class LasrError(Exception):
    """Base class for every error raised on purpose by this package."""

    exit_code = EXIT_DATA


class ConfigurationError(LasrError, ValueError):
    """Invalid dimensions, cutoffs, flags or configuration values."""

    exit_code = EXIT_USAGE


class ContractViolation(LasrError, ValueError):
    """An operation was called with its preconditions violated."""

    exit_code = EXIT_USAGE


class GuardError(ConfigurationError):
    """Exhaustive search requested on an instance that is too large."""


class DataError(LasrError):
    """Malformed, empty or inconsistent input data."""

    exit_code = EXIT_DATA


class ModelFileError(DataError):
    """A model file could not be loaded."""


class NotAModelFileError(ModelFileError):
    """The file does not start with the model magic bytes."""


class VersionMismatchError(ModelFileError):
    """The model file was written by an unsupported format version."""


class TruncatedModelError(ModelFileError):
    """The model file ends before all matrices were read."""


class DimensionMismatchError(ModelFileError):
    """Header dimensions disagree with the payload or with the vocabularies."""


class NumericalError(LasrError):
    """Non-finite parameters were detected."""

    exit_code = EXIT_NUMERICAL
