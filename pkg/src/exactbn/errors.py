"""Exception types shared across the package."""


class DataError(ValueError):
    """Malformed input data (ragged rows, empty tables, bad codes)."""


class CorruptionError(RuntimeError):
    """An on-disk structure is missing, truncated or out of order."""


class CycleError(ValueError):
    """A network that must be acyclic contains a directed cycle."""


class SearchError(RuntimeError):
    """An internal search invariant was violated."""
