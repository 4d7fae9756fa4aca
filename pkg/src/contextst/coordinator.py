"""Spectral coordinator: detrend, one-sided spectrum, energy-balanced band
selection, masked reconstruction, and patching.

DFT convention: unnormalized forward, inverse scaled by 1/L (numpy's default),
under which the one-sided PSD with halved endpoint bins satisfies Parseval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from contextst.errors import DataFormatError, DegenerateSignalError
from contextst.kernels import moving_average

DEGENERATE_ENERGY = 1e-12


@dataclass(frozen=True)
class Spectrum:
    coeffs: np.ndarray
    psd: np.ndarray
    cpsd: np.ndarray
    degenerate: bool

    @property
    def n_bins(self):
        return self.psd.shape[0]


@dataclass(frozen=True)
class Decomposition:
    original: np.ndarray
    trend: np.ndarray
    detrended: np.ndarray
    boundaries: np.ndarray
    components: np.ndarray  # (K, L)


@dataclass(frozen=True)
class PatchGrid:
    """(K+1, N, P) patches; row 0 is the raw window, rows 1..K the bands."""

    patches: np.ndarray

    @property
    def n_components(self):
        return self.patches.shape[0] - 1

    @property
    def n_patches(self):
        return self.patches.shape[1]

    @property
    def patch_len(self):
        return self.patches.shape[2]


def detrend(series, kappa):
    """Split into moving-average trend and residual; replicate edge padding."""
    series = np.asarray(series, dtype=np.float64)
    if kappa < 0:
        raise DataFormatError("kappa must be >= 0")
    if 2 * kappa + 1 > series.shape[0]:
        raise DataFormatError(
            f"moving-average window {2 * kappa + 1} exceeds length {series.shape[0]}"
        )
    trend = moving_average(np.ascontiguousarray(series), int(kappa))
    return trend, series - trend


def spectrum(detrended) -> Spectrum:
    """One-sided DFT with the halved-endpoint PSD and its cumulative curve."""
    x = np.asarray(detrended, dtype=np.float64)
    length = x.shape[0]
    if length % 2 != 0 or length < 4:
        raise DataFormatError(f"spectrum requires even length >= 4, got {length}")
    coeffs = np.fft.rfft(x)
    psd = np.abs(coeffs) ** 2 / (length / 2)
    psd[0] *= 0.5
    psd[-1] *= 0.5
    total = psd.sum()
    if total < DEGENERATE_ENERGY:
        cpsd = np.full_like(psd, np.nan)
        return Spectrum(coeffs=coeffs, psd=psd, cpsd=cpsd, degenerate=True)
    cpsd = np.cumsum(psd) / total
    return Spectrum(coeffs=coeffs, psd=psd, cpsd=cpsd, degenerate=False)


def _resolve_duplicates(bounds, n_bins):
    """Advance any later boundary stuck at an earlier one; clamp at n_bins."""
    out = list(bounds)
    for i in range(1, len(out) - 1):
        if out[i] <= out[i - 1]:
            out[i] = min(out[i - 1] + 1, n_bins)
    return np.asarray(out, dtype=np.int64)


def select_boundaries(spec: Spectrum, n_bands) -> np.ndarray:
    """Energy-balanced band edges: interior edge k is the first bin whose
    cumulative energy reaches k / n_bands."""
    n_bins = spec.n_bins
    if not 1 <= n_bands <= n_bins - 1:
        raise DataFormatError(f"band count {n_bands} out of range for {n_bins} bins")
    if spec.degenerate:
        edges = [round(k * n_bins / n_bands) for k in range(n_bands + 1)]
        return _resolve_duplicates(edges, n_bins)
    edges = [0]
    for k in range(1, n_bands):
        edges.append(int(np.argmax(spec.cpsd >= k / n_bands)))
    edges.append(n_bins)
    return _resolve_duplicates(edges, n_bins)


def decompose(detrended, boundaries) -> np.ndarray:
    """Reconstruct one time-domain series per band via masked inverse DFT."""
    x = np.asarray(detrended, dtype=np.float64)
    length = x.shape[0]
    coeffs = np.fft.rfft(x)
    boundaries = np.asarray(boundaries, dtype=np.int64)
    components = np.empty((len(boundaries) - 1, length), dtype=np.float64)
    for k in range(len(boundaries) - 1):
        masked = np.zeros_like(coeffs)
        masked[boundaries[k]:boundaries[k + 1]] = coeffs[boundaries[k]:boundaries[k + 1]]
        components[k] = np.fft.irfft(masked, n=length)
    return components


def patch(components, patch_len) -> PatchGrid:
    """Segment each row into ceil(L / P) patches, padding with the last value."""
    components = np.atleast_2d(np.asarray(components, dtype=np.float64))
    if patch_len < 1:
        raise DataFormatError("patch length must be >= 1")
    length = components.shape[1]
    n_patches = -(-length // patch_len)
    padded_len = n_patches * patch_len
    if padded_len > length:
        pad = np.repeat(components[:, -1:], padded_len - length, axis=1)
        components = np.concatenate([components, pad], axis=1)
    patches = components.reshape(components.shape[0], n_patches, patch_len)
    return PatchGrid(patches=patches)


def coordinate(lookback, n_bands, kappa, patch_len):
    """Full pipeline for one window; grid row 0 carries the raw lookback.

    n_bands = 0 is the decomposition-free ablation: the grid holds only the
    raw row and the Decomposition carries zero components.
    """
    lookback = np.asarray(lookback, dtype=np.float64)
    if n_bands == 0:
        length = lookback.shape[0]
        decomp = Decomposition(
            original=lookback,
            trend=np.zeros(length),
            detrended=lookback.copy(),
            boundaries=np.array([0, length // 2 + 1], dtype=np.int64),
            components=np.empty((0, length)),
        )
        return decomp, patch(lookback[None, :], patch_len)
    trend, residual = detrend(lookback, kappa)
    spec = spectrum(residual)
    boundaries = select_boundaries(spec, n_bands)
    components = decompose(residual, boundaries)
    decomp = Decomposition(
        original=lookback,
        trend=trend,
        detrended=residual,
        boundaries=boundaries,
        components=components,
    )
    rows = np.concatenate([lookback[None, :], components], axis=0)
    return decomp, patch(rows, patch_len)


def band_energy_fractions(spec: Spectrum, boundaries) -> np.ndarray:
    """Share of total energy inside each band (uniform split when degenerate)."""
    boundaries = np.asarray(boundaries)
    total = spec.psd.sum()
    if total < DEGENERATE_ENERGY:
        raise DegenerateSignalError("zero-energy spectrum has no energy fractions")
    return np.array([
        spec.psd[boundaries[k]:boundaries[k + 1]].sum() / total
        for k in range(len(boundaries) - 1)
    ])
