"""Exception types shared across the package."""


class DAACError(Exception):
    """Base class for all package errors."""


class DimensionError(DAACError, ValueError):
    """Operands have incompatible shapes."""


class DomainError(DAACError, ValueError):
    """A value lies outside the admissible domain (e.g. a negative weight)."""


class ConsistencyError(DAACError, ValueError):
    """Inputs disagree with each other (mismatched patterns, conflicting records)."""


class ConfigurationError(DAACError, ValueError):
    """A configuration or problem setup cannot be solved as stated."""


class ParseError(DAACError, ValueError):
    """A malformed input file. Carries the offending path and 1-based line number."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


class DegenerateVarianceError(DAACError, ArithmeticError):
    """Both samples of a t-test have zero variance."""
