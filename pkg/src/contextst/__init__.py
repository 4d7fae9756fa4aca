"""Cross-domain time-series forecasting with spectral decomposition,
context-anchored attention, and context-informed expert routing."""

__version__ = "0.1.0"

from contextst.errors import (
    ContexTSTError,
    DataFormatError,
    DegenerateSignalError,
    NonFiniteError,
    ShapeError,
)

__all__ = [
    "ContexTSTError",
    "DataFormatError",
    "DegenerateSignalError",
    "NonFiniteError",
    "ShapeError",
    "__version__",
]
