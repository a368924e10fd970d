"""Training loop: forward, loss, backward, per-band ratio computation,
gradient modulation, optimizer update, validation with early stopping.

Gradients are computed exactly once per step; modulation happens strictly
between backward and the optimizer update.
"""

from dataclasses import dataclass, field
import json
import logging
import time

import numpy as np

from . import autodiff as ad
from . import balance, revin
from .errors import NonFiniteLoss, WavebandError
from .model import ForecastModel

log = logging.getLogger(__name__)

MODULATION_MODES = ("off", "gradient", "loss")


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 100
    max_steps: int = 0            # 0 = no step cap
    optimizer: str = "adam"       # "adam" | "sgd"
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    patience: int = 10            # validation rounds without improvement
    seed: int = 0
    modulation: str = "gradient"  # "off" | "gradient" | "loss"
    monitor_metric: str = "mse"
    ema: bool = False
    ema_decay: float = 0.9
    c_max: float = balance.COEFFICIENT_MAX
    loss_space: str = "raw"       # "raw" | "normalized"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.modulation not in MODULATION_MODES:
            raise ValueError(f"unknown modulation mode {self.modulation!r}")
        if self.monitor_metric not in balance.DISCREPANCY_METRICS:
            raise ValueError(f"unknown monitor metric {self.monitor_metric!r}")


class SGD:
    def __init__(self, params, lr):
        self.params = params
        self.lr = lr

    def step(self):
        for p in self.params:
            p.value -= self.lr * p.grad


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {p.name: np.zeros_like(p.value) for p in params}
        self.v = {p.name: np.zeros_like(p.value) for p in params}

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1 ** self.t
        bias2 = 1.0 - b2 ** self.t
        for p in self.params:
            m = self.m[p.name]
            v = self.v[p.name]
            m *= b1
            m += (1 - b1) * p.grad
            v *= b2
            v += (1 - b2) * p.grad * p.grad
            p.value -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


def make_optimizer(model: ForecastModel, cfg: TrainConfig):
    if cfg.optimizer == "sgd":
        return SGD(model.parameters(), cfg.learning_rate)
    if cfg.optimizer == "adam":
        return Adam(model.parameters(), cfg.learning_rate,
                    cfg.beta1, cfg.beta2, cfg.adam_eps)
    raise ValueError(f"unknown optimizer {cfg.optimizer!r}")


def train_step(model: ForecastModel, x, y, cfg: TrainConfig, optimizer,
               batch_index: int = 0, ema=None):
    """One optimization step; returns (loss value, balance report)."""
    model.zero_grad()
    fp = model.forward(x)
    if cfg.loss_space == "normalized":
        target = revin.normalize_with(y, fp.stats)
        loss = ad.smooth_l1_loss(
            ad.lift(  # normalized prediction precedes denormalization
                (fp.prediction.value - fp.stats.mean) / fp.stats.scale,
                (fp.prediction,),
                lambda g: (g / fp.stats.scale,)),
            target)
    else:
        loss = ad.smooth_l1_loss(fp.prediction, y)
    loss_val = float(loss.value)
    if not np.isfinite(loss_val):
        raise NonFiniteLoss(
            f"loss became {loss_val} at batch {batch_index}")

    y_norm = revin.normalize_with(y, fp.stats)
    target_coeffs = balance.decompose_target(y_norm, model.spec)
    report = balance.discrepancy_ratios(
        fp.predicted_coeffs, target_coeffs, metric=cfg.monitor_metric,
        batch_index=batch_index, ema=ema, c_max=cfg.c_max)

    if cfg.modulation == "loss":
        ad.backward(loss, seed=balance.loss_modulation_scale(
            report.coefficients))
    else:
        ad.backward(loss)
        if cfg.modulation == "gradient":
            balance.apply_modulation(model.branches, report.coefficients)
        else:
            report.coefficients = [1.0] * len(report.coefficients)
    optimizer.step()
    return loss_val, report


@dataclass
class FitResult:
    history: list = field(default_factory=list)   # per-epoch records
    reports: list = field(default_factory=list)   # per-batch BalanceReports
    best_val_mse: float = float("inf")
    steps: int = 0
    throughput: float = 0.0                       # predict windows/sec


def validation_mse(model: ForecastModel, windows, batch_size: int) -> float:
    total = 0.0
    count = 0
    for start in range(0, len(windows), batch_size):
        idx = np.arange(start, min(start + batch_size, len(windows)))
        x, y = windows.batch(idx)
        pred = model.predict(x)
        total += float(((pred - y) ** 2).sum())
        count += y.size
    return total / count


def fit(model: ForecastModel, dataset, cfg: TrainConfig,
        run_dir=None) -> FitResult:
    """Train with per-epoch validation and early stopping; restores the
    best-validation parameters before returning."""
    train_w = dataset.windows("train", model.lookback, model.horizon)
    val_w = dataset.windows("validation", model.lookback, model.horizon)
    if len(train_w) == 0 or len(val_w) == 0:
        raise WavebandError("empty train or validation split")

    optimizer = make_optimizer(model, cfg)
    rng = np.random.default_rng(cfg.seed)
    ema = balance.DiscrepancyEMA(cfg.ema_decay) if cfg.ema else None
    result = FitResult()
    best_params = None
    stall = 0
    step = 0
    log_file = open(run_dir / "balance_log.jsonl", "w") if run_dir else None

    try:
        for epoch in range(cfg.max_epochs):
            order = rng.permutation(len(train_w))
            losses = []
            for start in range(0, len(order), cfg.batch_size):
                if cfg.max_steps and step >= cfg.max_steps:
                    break
                idx = order[start:start + cfg.batch_size]
                x, y = train_w.batch(idx)
                loss, report = train_step(model, x, y, cfg, optimizer,
                                          batch_index=step, ema=ema)
                losses.append(loss)
                result.reports.append(report)
                if log_file:
                    log_file.write(json.dumps(report.to_record()) + "\n")
                step += 1

            val_mse = validation_mse(model, val_w, cfg.batch_size)
            improved = val_mse < result.best_val_mse
            if improved:
                result.best_val_mse = val_mse
                best_params = [p.value.copy() for p in model.parameters()]
                stall = 0
            else:
                stall += 1
            result.history.append({
                "epoch": epoch,
                "train_loss": float(np.mean(losses)) if losses else None,
                "val_mse": val_mse,
                "improved": improved,
            })
            log.info("epoch %d: train loss %.6f, val mse %.6f%s", epoch,
                     result.history[-1]["train_loss"] or float("nan"),
                     val_mse, "" if improved else f" (stall {stall})")
            if not improved and stall >= cfg.patience:
                break
            if cfg.max_steps and step >= cfg.max_steps:
                break
    finally:
        if log_file:
            log_file.close()

    if best_params is not None:
        for p, v in zip(model.parameters(), best_params):
            p.value[...] = v
    result.steps = step

    # informational: inference throughput on one validation batch
    idx = np.arange(min(len(val_w), cfg.batch_size))
    x, _ = val_w.batch(idx)
    t0 = time.perf_counter()
    model.predict(x)
    dt = time.perf_counter() - t0
    result.throughput = len(idx) / dt if dt > 0 else float("inf")
    return result
