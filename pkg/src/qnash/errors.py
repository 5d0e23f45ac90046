"""Exception types shared across the library."""


class QnashError(Exception):
    """Base class for all library errors."""


class DimensionMismatchError(QnashError):
    """Operands have incompatible dimensions or factor shapes."""


class FormatError(QnashError):
    """A file or JSON document does not match its schema."""


class BudgetExceededError(QnashError):
    """An enumeration would exceed the configured resource budget."""


class ConvergenceError(QnashError):
    """An iterative routine exhausted its budget without reaching tolerance."""
