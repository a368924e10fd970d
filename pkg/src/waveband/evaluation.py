"""Test-set metrics and the four-horizon report table."""

import csv
from dataclasses import dataclass, asdict

import numpy as np

from .errors import MissingHorizon, ShapeMismatch

HORIZONS = (96, 192, 336, 720)


def mse(y, y_hat) -> float:
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise ShapeMismatch(f"mse: {y.shape} vs {y_hat.shape}")
    d = y - y_hat
    return float(np.mean(d * d))


def mae(y, y_hat) -> float:
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise ShapeMismatch(f"mae: {y.shape} vs {y_hat.shape}")
    return float(np.mean(np.abs(y - y_hat)))


@dataclass
class MetricsRow:
    dataset: str
    horizon: int
    mse: float
    mae: float
    seed: int = 0
    config_hash: str = ""


def evaluate(model, dataset, split: str = "test", batch_size: int = 64,
             denormalized: bool = False, seed: int = 0,
             config_hash: str = "") -> MetricsRow:
    """Average MSE/MAE over all stride-1 windows of a split.

    Metrics are computed in standardized space by default, matching the
    benchmark convention; ``denormalized`` rescales by the train-split
    statistics first.
    """
    windows = dataset.windows(split, model.lookback, model.horizon)
    sq_sum = 0.0
    abs_sum = 0.0
    count = 0
    for start in range(0, len(windows), batch_size):
        idx = np.arange(start, min(start + batch_size, len(windows)))
        x, y = windows.batch(idx)
        pred = model.predict(x)
        if denormalized:
            pred = pred * dataset.std[None] + dataset.mean[None]
            y = y * dataset.std[None] + dataset.mean[None]
        d = pred - y
        sq_sum += float((d * d).sum())
        abs_sum += float(np.abs(d).sum())
        count += d.size
    return MetricsRow(dataset=dataset.name, horizon=model.horizon,
                      mse=sq_sum / count, mae=abs_sum / count,
                      seed=seed, config_hash=config_hash)


def report_table(rows) -> dict:
    """Per-horizon rows plus their arithmetic-mean "Avg" row.

    Returns {"rows": [...], "avg": {...}}; raises MissingHorizon unless
    all four benchmark horizons are present exactly once.
    """
    by_horizon = {r.horizon: r for r in rows}
    missing = [k for k in HORIZONS if k not in by_horizon]
    if missing or len(rows) != len(HORIZONS):
        raise MissingHorizon(
            f"need exactly horizons {HORIZONS}, got "
            f"{sorted(r.horizon for r in rows)}")
    ordered = [by_horizon[k] for k in HORIZONS]
    avg = {
        "dataset": ordered[0].dataset,
        "horizon": "Avg",
        "mse": sum(r.mse for r in ordered) / len(ordered),
        "mae": sum(r.mae for r in ordered) / len(ordered),
    }
    return {"rows": [asdict(r) for r in ordered], "avg": avg}


def format_table(table: dict) -> str:
    lines = [f"{'horizon':>8}  {'MSE':>10}  {'MAE':>10}"]
    for rec in table["rows"] + [table["avg"]]:
        lines.append(f"{rec['horizon']:>8}  {rec['mse']:>10.3f}  "
                     f"{rec['mae']:>10.3f}")
    return "\n".join(lines)


def write_table_csv(table: dict, path):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["dataset", "horizon", "mse", "mae"])
        for rec in table["rows"] + [table["avg"]]:
            writer.writerow([rec["dataset"], rec["horizon"],
                             repr(rec["mse"]), repr(rec["mae"])])


def write_metrics_csv(rows, path):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["dataset", "horizon", "mse", "mae", "seed",
                         "config_hash"])
        for r in rows:
            writer.writerow([r.dataset, r.horizon, repr(r.mse), repr(r.mae),
                             r.seed, r.config_hash])
