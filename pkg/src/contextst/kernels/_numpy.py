"""Pure-numpy implementations of the hot kernels."""

import numpy as np


def moving_average(x, kappa):
    """Centered (2*kappa+1)-point mean with replicate padding at both edges."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    w = 2 * kappa + 1
    if w > n:
        raise ValueError("window exceeds series length")
    if kappa == 0:
        return x.copy()
    padded = np.concatenate([np.full(kappa, x[0]), x, np.full(kappa, x[-1])])
    csum = np.concatenate([[0.0], np.cumsum(padded)])
    return (csum[w:] - csum[:-w]) / w


def gaf_from_normalized(xt):
    """GAF(i, j) = xt_i * xt_j - sqrt(1 - xt_i^2) * sqrt(1 - xt_j^2)."""
    xt = np.asarray(xt, dtype=np.float64)
    comp = np.sqrt(np.clip(1.0 - xt * xt, 0.0, None))
    return np.outer(xt, xt) - np.outer(comp, comp)
