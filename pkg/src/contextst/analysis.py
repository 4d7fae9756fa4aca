"""Diagnostics: Gramian Angular Field imaging and the forecastability score."""

from __future__ import annotations

import numpy as np

from contextst.errors import DegenerateSignalError
from contextst.kernels import gaf_from_normalized
from contextst import coordinator


def gaf_normalize(series):
    """Rescale to [-1, 1] by the series' own min/max."""
    x = np.asarray(series, dtype=np.float64)
    lo, hi = x.min(), x.max()
    if hi <= lo:
        raise DegenerateSignalError("GAF normalization undefined for a constant series")
    return 2.0 * (x - lo) / (hi - lo) - 1.0


def gaf(series):
    """n x n self-correlation image cos(phi_i + phi_j) of the normalized series."""
    xt = gaf_normalize(series)
    if xt.shape[0] < 2:
        raise DegenerateSignalError("GAF needs at least 2 samples")
    return gaf_from_normalized(np.ascontiguousarray(xt))


def gaf_trigonometric(series):
    """Reference form via arccos angles; cross-checks the algebraic kernel."""
    phi = np.arccos(np.clip(gaf_normalize(series), -1.0, 1.0))
    return np.cos(phi[:, None] + phi[None, :])


def forecastability(series):
    """1 - normalized spectral entropy of the non-DC PSD bins, in [0, 1]."""
    spec = coordinator.spectrum(np.asarray(series, dtype=np.float64))
    if spec.degenerate:
        raise DegenerateSignalError("forecastability undefined for a zero-energy series")
    power = spec.psd[1:]
    total = power.sum()
    if total <= 0:
        raise DegenerateSignalError("no energy outside the DC bin")
    q = power / total
    nz = q[q > 0]
    entropy = -np.sum(nz * np.log(nz))
    return float(1.0 - entropy / np.log(q.shape[0]))


def gaf_to_pgm(matrix, path):
    """Write a GAF matrix as a binary PGM image, mapping [-1, 1] to [0, 255]."""
    m = np.asarray(matrix, dtype=np.float64)
    pixels = np.clip((m + 1.0) * 127.5, 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{m.shape[1]} {m.shape[0]}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
