"""Exception hierarchy shared by all modules."""


class ModelError(Exception):
    """Base class for every error raised by gravdengue."""


class StructuralError(ModelError, ValueError):
    """Shapes, lengths or patch counts do not line up."""


class DomainError(ModelError, ValueError):
    """A value lies outside its admissible range."""


class DegenerateDistanceError(DomainError):
    pass


class NumericalBlowupError(ModelError, ArithmeticError):
    """Integration produced a non-finite or strongly negative state."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class InsufficientDataError(ModelError, ValueError):
    pass


class ConfigurationError(ModelError, ValueError):
    pass


class AllIterationsFailedError(ModelError, RuntimeError):
    def __init__(self, message, failure_log=()):
        super().__init__(message)
        self.failure_log = list(failure_log)


class DataFormatError(ModelError, ValueError):
    """Malformed input file; carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IllConditionedError(ModelError, ValueError):
    pass


class BoundsError(ModelError, IndexError):
    """A requested window lies outside the available data."""


class UnmappedDataError(StructuralError):
    """Cases were recorded in a province that belongs to no patch."""
