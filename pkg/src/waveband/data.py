"""Dataset ingestion, chronological splits, train-only standardization,
and sliding-window sampling.

CSV inputs follow the common long-horizon benchmark layout: a header
row, a leading timestamp column, then one numeric column per variate.
Splits are chronological and contiguous; windows never cross split
boundaries.
"""

import csv
from dataclasses import dataclass
import logging

import numpy as np

from .errors import MissingValue, ParseError, SpecMismatch, SplitTooShort

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    variates: int
    splits: tuple          # (train, validation, test) lengths in time points
    frequency: str = ""


# pinned benchmark sizes
KNOWN_DATASETS = {
    "ETTh1": DatasetSpec("ETTh1", 7, (8545, 2881, 2881), "1 hour"),
    "ETTh2": DatasetSpec("ETTh2", 7, (8545, 2881, 2881), "1 hour"),
    "ETTm1": DatasetSpec("ETTm1", 7, (34465, 11521, 11521), "15 min"),
    "ETTm2": DatasetSpec("ETTm2", 7, (34465, 11521, 11521), "15 min"),
    "Weather": DatasetSpec("Weather", 21, (36792, 5271, 10540), "10 min"),
    "Traffic": DatasetSpec("Traffic", 862, (12185, 1757, 3509), "1 hour"),
    "ECL": DatasetSpec("ECL", 321, (18317, 2633, 5261), "1 hour"),
}


def load_csv(path, spec: DatasetSpec | None = None) -> np.ndarray:
    """Read a timestamped CSV into a [variates, time] float array."""
    columns = None
    rows = []
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    with handle as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        names = header[1:]
        for i, row in enumerate(reader, start=2):
            if columns is None:
                columns = len(row)
            if len(row) != columns:
                raise ParseError(f"{path}:{i}: expected {columns} cells, "
                                 f"got {len(row)}")
            vals = []
            for name, cell in zip(names, row[1:]):
                cell = cell.strip()
                if not cell:
                    raise MissingValue(
                        f"{path}:{i}: empty cell in column {name!r}")
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}:{i}: non-numeric cell {cell!r} in column "
                        f"{name!r}") from None
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=np.float64).T   # [N, time]
    if spec is not None:
        if data.shape[0] != spec.variates:
            raise SpecMismatch(
                f"{path}: {data.shape[0]} variates, {spec.name} pins "
                f"{spec.variates}")
        need = sum(spec.splits)
        if data.shape[1] < need:
            raise SpecMismatch(
                f"{path}: {data.shape[1]} time points, {spec.name} needs "
                f"at least {need}")
        data = data[:, :need]
    return data


def standardize(raw: np.ndarray, splits: tuple):
    """Scale every variate by train-split mean/std; returns (data, mean, std).

    Variates with zero train variance pass through centered only.
    """
    n_train = splits[0]
    train = raw[:, :n_train]
    mean = train.mean(axis=1, keepdims=True)
    std = train.std(axis=1, keepdims=True)
    degenerate = std[:, 0] < 1e-12
    if degenerate.any():
        log.warning("standardize: %d degenerate variate(s) pass through "
                    "centered only", int(degenerate.sum()))
        std = np.where(degenerate[:, None], 1.0, std)
    return (raw - mean) / std, mean, std


@dataclass(frozen=True)
class WindowSample:
    x: np.ndarray        # [N, T]
    y: np.ndarray        # [N, K]
    origin: int


class WindowSet:
    """Stride-s lookback/horizon windows over one chronological split."""

    def __init__(self, series: np.ndarray, lookback: int, horizon: int,
                 stride: int = 1):
        if series.shape[1] < lookback + horizon:
            raise SplitTooShort(
                f"split length {series.shape[1]} < lookback {lookback} + "
                f"horizon {horizon}")
        self.series = series
        self.lookback = lookback
        self.horizon = horizon
        self.stride = stride
        span = series.shape[1] - lookback - horizon
        self.origins = np.arange(0, span + 1, stride)

    def __len__(self):
        return len(self.origins)

    def __getitem__(self, i) -> WindowSample:
        o = int(self.origins[i])
        T, K = self.lookback, self.horizon
        return WindowSample(x=self.series[:, o:o + T],
                            y=self.series[:, o + T:o + T + K], origin=o)

    def batch(self, indices):
        """Gather (x [B,N,T], y [B,N,K]) for a list of window indices."""
        T, K = self.lookback, self.horizon
        xs = np.stack([self.series[:, o:o + T]
                       for o in self.origins[indices]])
        ys = np.stack([self.series[:, o + T:o + T + K]
                       for o in self.origins[indices]])
        return xs, ys


@dataclass
class Dataset:
    """Standardized splits plus the statistics that produced them."""

    name: str
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    mean: np.ndarray
    std: np.ndarray

    @property
    def variates(self):
        return self.train.shape[0]

    def windows(self, split: str, lookback: int, horizon: int,
                stride: int = 1) -> WindowSet:
        series = {"train": self.train, "validation": self.validation,
                  "test": self.test}[split]
        return WindowSet(series, lookback, horizon, stride)


def split_series(raw: np.ndarray, splits: tuple) -> tuple:
    n_tr, n_va, n_te = splits
    return (raw[:, :n_tr], raw[:, n_tr:n_tr + n_va],
            raw[:, n_tr + n_va:n_tr + n_va + n_te])


def dataset_from_csv(path, name: str | None = None) -> Dataset:
    spec = KNOWN_DATASETS.get(name) if name else None
    raw = load_csv(path, spec)
    if spec is not None:
        splits = spec.splits
    else:
        n = raw.shape[1]
        n_tr = int(n * 0.7)
        n_va = int(n * 0.1)
        splits = (n_tr, n_va, n - n_tr - n_va)
    std_data, mean, std = standardize(raw, splits)
    tr, va, te = split_series(std_data, splits)
    return Dataset(name=name or "csv", train=tr, validation=va, test=te,
                   mean=mean, std=std)


def synthetic_multitone(tones, noise_sigma: float, length: int, seed: int,
                        variates: int = 1) -> np.ndarray:
    """Sum of sinusoids plus seeded Gaussian noise, [variates, length].

    ``tones`` is a list of (amplitude, period, phase) triples; periods
    must be >= 2 samples.
    """
    for amp, period, phase in tones:
        if period < 2:
            raise ValueError(f"tone period must be >= 2, got {period}")
    t = np.arange(length, dtype=np.float64)
    clean = np.zeros(length)
    for amp, period, phase in tones:
        clean += amp * np.sin(2.0 * np.pi * t / period + phase)
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, noise_sigma, size=(variates, length))
    return clean[None, :] + noise


def dataset_from_synthetic(tones, noise_sigma, length, seed,
                           variates: int = 1,
                           fractions=(0.7, 0.15, 0.15)) -> Dataset:
    raw = synthetic_multitone(tones, noise_sigma, length, seed, variates)
    n = raw.shape[1]
    n_tr = int(n * fractions[0])
    n_va = int(n * fractions[1])
    splits = (n_tr, n_va, n - n_tr - n_va)
    std_data, mean, std = standardize(raw, splits)
    tr, va, te = split_series(std_data, splits)
    return Dataset(name="synthetic", train=tr, validation=va, test=te,
                   mean=mean, std=std)
