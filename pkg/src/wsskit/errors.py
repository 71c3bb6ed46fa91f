"""Exception hierarchy shared across the toolkit."""


class WsskitError(Exception):
    """Base class for all toolkit errors."""


class UsageError(WsskitError):
    """Bad arguments or configuration supplied by the caller."""


class DataError(WsskitError):
    """Input data violates a precondition (missing, malformed, degenerate)."""


class InsufficientDataError(DataError):
    """Fewer records than the operation needs (e.g. < 2 events for intervals)."""


class DegenerateColumnError(DataError):
    """A column to be scaled has max == min."""

    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column!r} is constant (max == min); cannot scale")


class OverAggressiveFilterError(DataError):
    """Outlier elimination would drop more rows than the policy allows."""


class EmptyJoinError(DataError):
    """Label join produced zero matched rows."""


class CorruptModelError(DataError):
    """Model file is truncated or structurally invalid."""


class ModelVersionError(DataError):
    """Model file carries an unsupported format version."""


class ProcessGoneError(WsskitError):
    """Target process exited mid-measurement."""


class UnsupportedKernelError(WsskitError):
    """Running kernel lacks the probe support this operation needs."""


class InternalError(WsskitError):
    """Invariant violation inside the toolkit itself."""
