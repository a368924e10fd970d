"""Per-band learning-pace monitor and gradient balancer.

Each batch, the horizon target is decomposed into the same wavelet bands
as the prediction; per-band discrepancies are normalized by the mean
detail discrepancy into ratios, which map through a two-branch coefficient
function that is applied multiplicatively to each branch's gradients.
"""

from dataclasses import dataclass, field
import logging
import math

import numpy as np

from .errors import BranchCountMismatch, NonPositiveRatio, ShapeMismatch
from .wavelets import CoefficientSet, WaveletSpec, dwt_multilevel

log = logging.getLogger(__name__)

DEGENERATE_MU = 1e-12
COEFFICIENT_MAX = 10.0
DISCREPANCY_METRICS = ("mse", "mae", "rmse", "rsquared")


@dataclass
class BalanceReport:
    """Per-batch monitor output, in branch order (details 1..f, approx)."""

    delta_details: list = field(default_factory=list)
    delta_approx: float = 0.0
    mu: float = 0.0
    ratios: list = field(default_factory=list)      # f+1 entries
    coefficients: list = field(default_factory=list)
    batch_index: int = 0
    degenerate: bool = False

    def to_record(self) -> dict:
        return {
            "batch": self.batch_index,
            "delta_details": self.delta_details,
            "delta_approx": self.delta_approx,
            "mu": self.mu,
            "ratios": self.ratios,
            "coefficients": self.coefficients,
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "BalanceReport":
        return cls(delta_details=list(rec["delta_details"]),
                   delta_approx=rec["delta_approx"],
                   mu=rec["mu"],
                   ratios=list(rec["ratios"]),
                   coefficients=list(rec["coefficients"]),
                   batch_index=rec["batch"],
                   degenerate=rec["degenerate"])


def decompose_target(y, spec: WaveletSpec) -> CoefficientSet:
    """Wavelet bands of the (normalized) ground-truth horizon."""
    return dwt_multilevel(y, spec)


def _metric(a, b, kind: str) -> float:
    if a.shape != b.shape:
        raise ShapeMismatch(f"discrepancy metric: {a.shape} vs {b.shape}")
    d = a - b
    if kind == "mse":
        return float(np.mean(d * d))
    if kind == "mae":
        return float(np.mean(np.abs(d)))
    if kind == "rmse":
        return float(np.sqrt(np.mean(d * d)))
    if kind == "rsquared":
        # discrepancy form: 1 - R^2, floored so "larger = worse" holds
        ss_res = float(np.sum(d * d))
        ss_tot = float(np.sum((a - a.mean()) ** 2))
        if ss_tot < DEGENERATE_MU:
            return max(ss_res, DEGENERATE_MU)
        return max(ss_res / ss_tot, DEGENERATE_MU)
    raise ValueError(f"unknown discrepancy metric {kind!r}")


def discrepancy_ratios(predicted: CoefficientSet, target: CoefficientSet,
                       metric: str = "mse", batch_index: int = 0,
                       ema: "DiscrepancyEMA | None" = None,
                       c_max: float = COEFFICIENT_MAX) -> BalanceReport:
    """Per-band discrepancies, their detail mean, and the ratio vector."""
    if predicted.level != target.level:
        raise ShapeMismatch("predicted and target band counts differ")
    deltas_d = [_metric(t, p, metric)
                for p, t in zip(predicted.details, target.details)]
    delta_a = _metric(target.approximation, predicted.approximation, metric)
    if ema is not None:
        deltas_d, delta_a = ema.update(deltas_d, delta_a)
    f = len(deltas_d)
    mu = sum(deltas_d) / f
    report = BalanceReport(delta_details=deltas_d, delta_approx=delta_a,
                           mu=mu, batch_index=batch_index)
    if mu < DEGENERATE_MU:
        log.info("balance: degenerate mean discrepancy at batch %d, "
                 "modulation disabled for this step", batch_index)
        report.degenerate = True
        report.ratios = [1.0] * (f + 1)
    else:
        report.ratios = [dd / mu for dd in deltas_d] + [delta_a / mu]
    report.coefficients = [modulation_coefficient(r, c_max)
                           for r in report.ratios]
    return report


class DiscrepancyEMA:
    """Optional exponential smoothing of the per-batch discrepancies."""

    def __init__(self, decay: float = 0.9):
        self.decay = decay
        self._details = None
        self._approx = None

    def update(self, deltas_d, delta_a):
        if self._details is None:
            self._details = list(deltas_d)
            self._approx = delta_a
        else:
            a = self.decay
            self._details = [a * old + (1 - a) * new
                             for old, new in zip(self._details, deltas_d)]
            self._approx = a * self._approx + (1 - a) * delta_a
        return list(self._details), self._approx


def modulation_coefficient(r: float, c_max: float = COEFFICIENT_MAX) -> float:
    """Two-branch gradient scale: shifted sigmoid above 1, clamped 1/r below."""
    if r <= 0.0:
        raise NonPositiveRatio(f"discrepancy ratio must be > 0, got {r}")
    if r > 1.0:
        return 1.0 / (1.0 + math.exp(-0.5 * (r - 1.0))) + 0.5
    return min(1.0 / r, c_max)


def apply_modulation(branches, coefficients):
    """Scale each branch's parameter gradients in place by its coefficient."""
    if len(branches) != len(coefficients):
        raise BranchCountMismatch(
            f"{len(branches)} branches but {len(coefficients)} coefficients")
    for br, c in zip(branches, coefficients):
        if c == 1.0:
            continue
        for p in br.parameters():
            p.grad *= c


def loss_modulation_scale(coefficients) -> float:
    """Ablation arm: one global scale, the mean of the per-band coefficients."""
    return float(sum(coefficients)) / len(coefficients)
