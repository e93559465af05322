"""Exception types raised by the library."""


class HmmError(ValueError):
    """Base class for data and model errors."""


class ValidationError(HmmError):
    """A model or observation violates an invariant."""


class ImpossibleObservationError(HmmError):
    """The observations have zero probability under the model."""

    def __init__(self, message: str, t: int | None = None):
        super().__init__(message)
        self.t = t


class SequenceError(HmmError):
    """An error raised while processing one of several sequences."""

    def __init__(self, index: int, cause: Exception):
        super().__init__(f"sequence {index}: {cause}")
        self.index = index
        self.cause = cause


class FitError(HmmError):
    """Training stopped on an error; ``trace`` holds the log-likelihoods so far."""

    def __init__(self, cause: Exception, trace: list[float]):
        super().__init__(f"{cause} (after {len(trace)} iterations)")
        self.cause = cause
        self.trace = list(trace)


class EnumerationTooLarge(HmmError):
    """Brute-force enumeration would visit too many paths."""


class ParseError(HmmError):
    """A model or sequence file could not be parsed."""
