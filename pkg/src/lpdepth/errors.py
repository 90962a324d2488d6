"""Exception hierarchy. Each family maps onto one CLI exit code."""


class LpDepthError(Exception):
    exit_code = 1


class ConfigError(LpDepthError, ValueError):
    """Bad arguments, malformed config or model files."""

    exit_code = 2


class DataError(LpDepthError, ValueError):
    """Input data that cannot be used (parse failures, too few rows, ...)."""

    exit_code = 3


class NumericError(LpDepthError, ArithmeticError):
    """Degenerate geometry or a numerically singular fit."""

    exit_code = 4


class DomainError(NumericError, ValueError):
    pass


class DegenerateSampleError(NumericError):
    pass


class DegenerateGeometryError(NumericError):
    pass


class InsufficientDataError(DataError):
    pass


class TrimError(NumericError):
    """Trimming left fewer points than the likelihood needs."""


class SingularityError(NumericError):
    pass


class UndefinedRegretError(NumericError):
    pass
