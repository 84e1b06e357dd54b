"""Exception hierarchy shared across the toolkit.

The CLI maps these onto its exit-code contract: format errors exit 1,
precondition violations exit 2, training/root-finding failures exit 3.
"""


class BordersError(Exception):
    """Base class for all toolkit errors."""


class FormatError(BordersError):
    """Malformed input file (data, model, or report)."""


class PreconditionError(BordersError, ValueError):
    """An operation was called with arguments that violate its contract."""


class TrainingError(BordersError):
    """Training could not complete (e.g. attempt budget exhausted)."""


class RootFindingError(BordersError):
    """A bracketed root does not exist or could not be isolated."""
