"""Context description rendering, series statistics, and anchor file emission."""

__version__ = "0.1.0"

from anchorgen.stats import VarStats, compute_stats
from anchorgen.render import DatasetMeta, render_global, render_variable, stats_sentence

__all__ = [
    "DatasetMeta",
    "VarStats",
    "compute_stats",
    "render_global",
    "render_variable",
    "stats_sentence",
    "__version__",
]
