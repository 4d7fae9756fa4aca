"""Kernel backend selection.

The compiled extension is preferred; set CONTEXTST_KERNELS=numpy to force the
pure-Python fallback (used by the benchmark for a fair comparison).
"""

import os

if os.environ.get("CONTEXTST_KERNELS", "").lower() == "numpy":
    from contextst.kernels import _numpy as _impl

    BACKEND = "numpy"
else:
    try:
        from contextst.kernels import _fast as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from contextst.kernels import _numpy as _impl

        BACKEND = "numpy"

moving_average = _impl.moving_average
gaf_from_normalized = _impl.gaf_from_normalized

__all__ = ["BACKEND", "moving_average", "gaf_from_normalized"]
