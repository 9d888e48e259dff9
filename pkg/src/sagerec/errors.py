"""Exception hierarchy shared across the package.

Exit-code contract for the CLI: 0 success, 1 validation/argument,
2 data/format, 3 numerical divergence or failed self-check.
"""


class SageRecError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SageRecError):
    """Bad values or arguments supplied by the caller (exit code 1)."""


class ShapeError(ValidationError):
    """Matrix dimensions do not satisfy an operation's precondition."""


class ConfigError(ValidationError):
    """Model or training configuration is inconsistent."""


class UnknownIdError(ValidationError):
    """An external user/anime id is not present in the graph."""


class DataError(SageRecError):
    """Problems with input files or on-disk formats (exit code 2)."""


class SchemaError(DataError):
    """A required CSV column is absent."""


class ParseError(DataError):
    """A cell failed to parse as its expected type."""


class FormatError(DataError):
    """A serialized artifact (model file, embedding CSV, data dir) is malformed."""


class NumericError(SageRecError):
    """Numerical failure: divergence or a failed self-check (exit code 3)."""


class DivergenceError(NumericError):
    """Training produced a non-finite loss."""


class GradCheckError(NumericError):
    """Analytic gradients disagree with finite differences."""


class ConsistencyError(SageRecError):
    """Internal invariant violation, e.g. a stale forward cache."""


def exit_code(exc: BaseException) -> int:
    """Map an exception to the CLI exit-code contract."""
    if isinstance(exc, ValidationError):
        return 1
    if isinstance(exc, DataError):
        return 2
    if isinstance(exc, (NumericError, ConsistencyError)):
        return 3
    return 1
