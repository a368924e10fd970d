"""Reversible instance normalization over the lookback window.

Statistics-only variant: per (batch item, variate) mean and population
variance of the lookback window, inverted exactly on the prediction.
"""

from dataclasses import dataclass
import logging

import numpy as np

from .errors import StatsMismatch

log = logging.getLogger(__name__)

EPSILON = 1e-5
DEGENERATE_VARIANCE = 1e-12


@dataclass
class InstanceStats:
    mean: np.ndarray          # [B, N, 1]
    variance: np.ndarray      # [B, N, 1], population (1/T) convention
    epsilon: float = EPSILON

    @property
    def scale(self):
        return np.sqrt(self.variance + self.epsilon)


def normalize(x):
    """Standardize each (item, variate) series; returns (output, stats).

    Near-constant windows are flagged in the log; epsilon keeps the
    transform finite either way.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape[-1] < 2:
        raise StatsMismatch(
            f"expected [batch, variate, time>=2] input, got {x.shape}")
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    degenerate = int((var < DEGENERATE_VARIANCE).sum())
    if degenerate:
        log.warning("revin: %d degenerate lookback window(s)", degenerate)
    stats = InstanceStats(mean=mean, variance=var)
    return (x - mean) / stats.scale, stats


def denormalize(y, stats: InstanceStats):
    """Invert :func:`normalize` on a horizon tensor with the same (B, N)."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 3 or y.shape[:2] != stats.mean.shape[:2]:
        raise StatsMismatch(
            f"prediction {y.shape} does not match stats "
            f"{stats.mean.shape[:2]}")
    return y * stats.scale + stats.mean


def normalize_with(y, stats: InstanceStats):
    """Apply the lookback statistics to another tensor (e.g. the target)."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 3 or y.shape[:2] != stats.mean.shape[:2]:
        raise StatsMismatch(
            f"tensor {y.shape} does not match stats {stats.mean.shape[:2]}")
    return (y - stats.mean) / stats.scale
