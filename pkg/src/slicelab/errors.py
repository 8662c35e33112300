"""Shared exception types for slicelab."""


class DomainError(ValueError):
    """An argument violates an operation's domain contract."""


class PreconditionError(ValueError):
    """A stated precondition (e.g. a claim hypothesis) does not hold."""


class StructureError(ValueError):
    """A decision tree is malformed (repeated query on a path, bad node)."""


class ResourceLimitError(RuntimeError):
    """A computation exceeded its state/enumeration budget.

    ``attempted`` records how many states/items the computation would
    have needed (or had expanded when it aborted).
    """

    def __init__(self, message: str, attempted: int | None = None):
        super().__init__(message)
        self.attempted = attempted


class InternalCheckError(RuntimeError):
    """An internal consistency check failed; signals a transcription bug,
    never a caller error."""
