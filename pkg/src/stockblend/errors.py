"""Exception types shared across the toolkit.

Everything raised for bad data or a failed pipeline stage derives from
:class:`StockblendError`, so callers (and the CLI exit-code mapping) can
distinguish data problems from programming errors.
"""


class StockblendError(Exception):
    """Base class for all data/validation/pipeline errors."""


class CsvParseError(StockblendError):
    """A CSV document could not be parsed; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ValidationError(StockblendError):
    """An input value violates a documented invariant."""


class AlignmentError(StockblendError):
    """Series in a panel share no common dates."""


class InsufficientHistoryError(StockblendError):
    """Not enough trailing history to compute an indicator or feature."""


class TrainingDivergedError(StockblendError):
    """Network training produced a non-finite loss."""


class GprFitError(StockblendError):
    """Covariance factorization failed even after jitter escalation."""


class OptimizationError(StockblendError):
    """The objective returned a non-finite value during search."""


class PipelineError(StockblendError):
    """A training-pipeline stage failed; carries the stage label."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause
