"""Benchmark CSV loading, chronological splits, normalization, windowing, metrics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from contextst.errors import DataFormatError, ShapeError


@dataclass(frozen=True)
class Dataset:
    """A named multivariate series: values has shape (length, n_variables)."""

    name: str
    timestamps: tuple
    values: np.ndarray
    var_names: tuple
    frequency: str = ""

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ShapeError("values must be 2-D (length, variables)")
        if len(self.timestamps) != self.values.shape[0]:
            raise DataFormatError(
                f"{len(self.timestamps)} timestamps for {self.values.shape[0]} rows"
            )
        if len(self.var_names) != self.values.shape[1]:
            raise DataFormatError("variable name count does not match columns")

    def __len__(self):
        return self.values.shape[0]

    @property
    def n_vars(self):
        return self.values.shape[1]

    def slice(self, start, stop):
        return Dataset(
            name=self.name,
            timestamps=self.timestamps[start:stop],
            values=self.values[start:stop],
            var_names=self.var_names,
            frequency=self.frequency,
        )


@dataclass(frozen=True)
class SplitSpec:
    """Chronological train/val/test split.

    ratio mode: fractions over the full length. fixed mode: explicit end indices
    (train_end, val_end, test_end); eval_overlap extends the val/test segments
    backward so their window counts match the benchmark convention.
    """

    mode: str = "ratio"
    ratios: tuple = (0.7, 0.1, 0.2)
    borders: tuple | None = None
    eval_overlap: int = 0

    def validate(self, length=None):
        if self.mode == "ratio":
            r = self.ratios
            if len(r) != 3 or any(x < 0 for x in r) or r[0] <= 0:
                raise DataFormatError(f"bad split ratios {r}")
            if abs(sum(r) - 1.0) > 1e-9:
                raise DataFormatError(f"split ratios {r} do not sum to 1")
        elif self.mode == "fixed":
            if self.borders is None or len(self.borders) != 3:
                raise DataFormatError("fixed mode needs (train_end, val_end, test_end)")
            t, v, e = self.borders
            if not (0 <= t <= v <= e):
                raise DataFormatError(f"borders {self.borders} not nondecreasing")
            if length is not None and e > length:
                raise DataFormatError(f"border {e} exceeds length {length}")
        else:
            raise DataFormatError(f"unknown split mode {self.mode!r}")


@dataclass(frozen=True)
class SeriesWindow:
    """One univariate lookback/target pair plus its normalization metadata."""

    lookback: np.ndarray
    target: np.ndarray
    variable_index: int
    origin_index: int
    norm: tuple = (0.0, 1.0)
    degenerate: bool = False


@dataclass
class Normalizer:
    """Per-variable z-scoring with statistics from the train segment only."""

    mean: np.ndarray
    std: np.ndarray
    degenerate: np.ndarray = field(default=None)

    def transform(self, dataset: Dataset) -> Dataset:
        values = (dataset.values - self.mean) / self.std
        return Dataset(dataset.name, dataset.timestamps, values,
                       dataset.var_names, dataset.frequency)

    def inverse(self, dataset: Dataset) -> Dataset:
        values = dataset.values * self.std + self.mean
        return Dataset(dataset.name, dataset.timestamps, values,
                       dataset.var_names, dataset.frequency)

    def inverse_array(self, values, variable_index):
        return np.asarray(values) * self.std[variable_index] + self.mean[variable_index]


def load_csv(path, name=None, frequency="") -> Dataset:
    """Load a benchmark-style CSV: header with a leading "date" column."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        if not header or header[0].strip().lower() != "date":
            raise DataFormatError(f"{path}: first column must be 'date', got {header[:1]}")
        var_names = tuple(h.strip() for h in header[1:])
        if not var_names:
            raise DataFormatError(f"{path}: no value columns")
        timestamps = []
        rows = []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
            timestamps.append(row[0].strip())
            parsed = []
            for j, cell in enumerate(row[1:], start=2):
                try:
                    value = float(cell)
                except ValueError:
                    raise DataFormatError(
                        f"{path}: row {i}, column {j} ({header[j - 1]!r}): "
                        f"cannot parse {cell!r}"
                    ) from None
                if not math.isfinite(value):
                    raise DataFormatError(
                        f"{path}: row {i}, column {j} ({header[j - 1]!r}): non-finite value"
                    )
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    for i in range(1, len(timestamps)):
        if timestamps[i] <= timestamps[i - 1]:
            raise DataFormatError(
                f"{path}: row {i + 2}: timestamp {timestamps[i]!r} not increasing"
            )
    values = np.asarray(rows, dtype=np.float64)
    import os

    return Dataset(
        name=name or os.path.splitext(os.path.basename(str(path)))[0],
        timestamps=tuple(timestamps),
        values=values,
        var_names=var_names,
        frequency=frequency,
    )


def split(dataset: Dataset, spec: SplitSpec):
    """Chronological (train, val, test) segments."""
    spec.validate(len(dataset))
    n = len(dataset)
    if spec.mode == "ratio":
        train_end = int(n * spec.ratios[0])
        val_end = train_end + int(n * spec.ratios[1])
        test_end = n
    else:
        train_end, val_end, test_end = spec.borders
    overlap = spec.eval_overlap
    train = dataset.slice(0, train_end)
    val = dataset.slice(max(train_end - overlap, 0), val_end)
    test = dataset.slice(max(val_end - overlap, 0), test_end)
    for seg_name, seg in (("train", train), ("val", val), ("test", test)):
        if len(seg) == 0:
            raise DataFormatError(f"empty {seg_name} segment")
    return train, val, test


def standardize(train: Dataset, *others: Dataset):
    """Z-score using train statistics; constant variables get std 1 + a flag."""
    if len(train) == 0:
        raise DataFormatError("train segment is empty")
    mean = train.values.mean(axis=0)
    std = train.values.std(axis=0)
    degenerate = std <= 0.0
    std = np.where(degenerate, 1.0, std)
    norm = Normalizer(mean=mean, std=std, degenerate=degenerate)
    transformed = [norm.transform(train)] + [norm.transform(d) for d in others]
    return transformed, norm


def make_windows(dataset: Dataset, lookback, horizon, stride=1, norm: Normalizer = None):
    """All (variable, origin) windows, ordered by variable then origin."""
    n = len(dataset)
    if stride < 1:
        raise DataFormatError(f"stride must be positive, got {stride}")
    if lookback + horizon > n:
        raise DataFormatError(
            f"lookback {lookback} + horizon {horizon} exceeds segment length {n}"
        )
    windows = []
    n_origins = (n - lookback - horizon) // stride + 1
    for var in range(dataset.n_vars):
        series = dataset.values[:, var]
        stats = (0.0, 1.0)
        flag = False
        if norm is not None:
            stats = (float(norm.mean[var]), float(norm.std[var]))
            flag = bool(norm.degenerate[var])
        for k in range(n_origins):
            start = k * stride
            windows.append(
                SeriesWindow(
                    lookback=series[start:start + lookback],
                    target=series[start + lookback:start + lookback + horizon],
                    variable_index=var,
                    origin_index=start,
                    norm=stats,
                    degenerate=flag,
                )
            )
    return windows


def _check_pair(pred, truth):
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ShapeError(f"prediction shape {pred.shape} != truth shape {truth.shape}")
    return pred, truth


def mse(pred, truth):
    pred, truth = _check_pair(pred, truth)
    return float(np.mean((pred - truth) ** 2))


def mae(pred, truth):
    pred, truth = _check_pair(pred, truth)
    return float(np.mean(np.abs(pred - truth)))


# Fixed-border presets for the four ETT subsets (hourly: 14400 usable rows,
# 15-minute: 57600), with the benchmark lookback overlap on eval segments.
def ett_split_spec(name, lookback=96) -> SplitSpec:
    key = name.lower()
    if key in ("etth1", "etth2"):
        borders = (8640, 11520, 14400)
    elif key in ("ettm1", "ettm2"):
        borders = (34560, 46080, 57600)
    else:
        raise DataFormatError(f"no ETT preset named {name!r}")
    return SplitSpec(mode="fixed", borders=borders, eval_overlap=lookback)
