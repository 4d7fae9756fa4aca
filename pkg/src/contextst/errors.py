"""Shared exception types."""


class ContexTSTError(Exception):
    """Base class for all library errors."""


class DataFormatError(ContexTSTError):
    """Malformed input file or dataset (carries row/column context in message)."""


class ShapeError(ContexTSTError):
    """Array shape inconsistent with the configured model."""


class DegenerateSignalError(ContexTSTError):
    """Operation undefined for a constant / zero-energy signal."""


class NonFiniteError(ContexTSTError):
    """A non-finite value appeared in a computation; message names the array."""
