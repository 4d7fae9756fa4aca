"""Per-variable training statistics for the description suffix sentence."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# slope magnitudes below this fraction of the series' std count as flat
TREND_DEAD_BAND = 1e-6


@dataclass(frozen=True)
class VarStats:
    minimum: float
    maximum: float
    mean: float
    median: float
    trend: str  # "up", "down", or "flat"

    def __post_init__(self):
        if not self.minimum <= self.median <= self.maximum:
            raise ValueError("median must lie between min and max")
        if not self.minimum <= self.mean <= self.maximum:
            raise ValueError("mean must lie between min and max")
        if self.trend not in ("up", "down", "flat"):
            raise ValueError(f"unknown trend {self.trend!r}")


def compute_stats(series) -> VarStats:
    """Exact order statistics plus the sign of the least-squares slope."""
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("series must be a non-empty 1-D array")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    n = x.size
    if n == 1:
        slope = 0.0
    else:
        t = np.arange(n, dtype=np.float64)
        slope = float(np.polyfit(t, x, 1)[0])
    scale = float(x.std())
    if scale == 0.0 or abs(slope) < TREND_DEAD_BAND * scale:
        trend = "flat"
    else:
        trend = "up" if slope > 0 else "down"
    return VarStats(
        minimum=float(x.min()),
        maximum=float(x.max()),
        mean=float(x.mean()),
        median=float(np.median(x)),
        trend=trend,
    )
