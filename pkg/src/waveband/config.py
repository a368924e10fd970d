"""Flat, typed run configuration with documented defaults.

Configs are JSON documents of dotted keys; unknown keys are rejected.
``--set key=value`` overrides are coerced to the type of the default.
The resolved config is snapshotted into every run directory.
"""

import hashlib
import json
import os

from .data import (KNOWN_DATASETS, Dataset, dataset_from_csv,
                   dataset_from_synthetic)
from .errors import ConfigError
from .model import BranchHyperparams, ForecastModel
from .trainer import TrainConfig
from .wavelets import parse_wavelet_name

DEFAULTS = {
    # data source: "csv" needs dataset.path; "synthetic" uses the tone list
    "dataset.kind": "csv",
    "dataset.name": "",            # pinned benchmark name, e.g. "ETTh1"
    "dataset.path": "",
    "synthetic.length": 4096,
    "synthetic.tones": [[1.0, 64.0, 0.0]],   # [amplitude, period, phase]
    "synthetic.noise_sigma": 0.1,
    "synthetic.seed": 0,
    # wavelet decomposition
    "wavelet.name": "db2",
    "wavelet.level": 3,
    # branch network hyperparameters
    "model.patch_len": 16,
    "model.stride": 8,
    "model.width": 32,
    "model.depth": 2,
    "model.activation": "gelu",
    "model.seed": 0,
    # instance normalization
    "revin.learnable": False,      # learnable affine variant; not built
    # task shape
    "task.lookback": 96,
    "task.horizon": 96,
    # optimization
    "train.learning_rate": 1e-3,
    "train.batch_size": 32,
    "train.max_epochs": 100,
    "train.max_steps": 0,          # 0 = no cap
    "train.optimizer": "adam",
    "train.beta1": 0.9,
    "train.beta2": 0.999,
    "train.adam_eps": 1e-8,
    "train.patience": 10,
    "train.seed": 0,
    "train.loss_space": "raw",
    # learning-pace balancing
    "balance.modulation": "gradient",   # off | gradient | loss
    "balance.metric": "mse",
    "balance.ema": False,
    "balance.ema_decay": 0.9,
    "balance.c_max": 10.0,
    # evaluation
    "eval.batch_size": 64,
    "eval.denormalized": False,
    # artifacts
    "output.root": "",             # "" -> $WAVEBAND_OUTPUT_ROOT or ./runs
}


def _coerce(key, raw, default):
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") \
                from None
    if isinstance(default, float):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") \
                from None
    if isinstance(default, list):
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            raise ConfigError(f"{key}: expected a JSON list, got {raw!r}") \
                from None
        if not isinstance(val, list):
            raise ConfigError(f"{key}: expected a JSON list, got {raw!r}")
        return val
    return raw


def load_config(path=None, overrides=()) -> dict:
    """Resolve defaults + optional config file + --set overrides."""
    cfg = dict(DEFAULTS)
    if path:
        try:
            with open(path) as f:
                doc = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        for key, value in doc.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r} in {path}")
            default = DEFAULTS[key]
            if isinstance(default, bool):
                ok = isinstance(value, bool)
            elif isinstance(default, float):
                ok = isinstance(value, (int, float)) and \
                    not isinstance(value, bool)
            elif isinstance(default, int):
                ok = isinstance(value, int) and not isinstance(value, bool)
            elif isinstance(default, list):
                ok = isinstance(value, list)
            else:
                ok = isinstance(value, str)
            if not ok:
                raise ConfigError(
                    f"{key}: expected {type(default).__name__}, got "
                    f"{type(value).__name__}")
            cfg[key] = float(value) if isinstance(default, float) else value
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        cfg[key] = _coerce(key, raw.strip(), DEFAULTS[key])
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict):
    if cfg["dataset.kind"] not in ("csv", "synthetic"):
        raise ConfigError(
            f"dataset.kind must be csv or synthetic, got "
            f"{cfg['dataset.kind']!r}")
    if cfg["dataset.kind"] == "csv" and not cfg["dataset.path"]:
        raise ConfigError("dataset.path is required for dataset.kind=csv")
    name = cfg["dataset.name"]
    if name and name not in KNOWN_DATASETS:
        raise ConfigError(
            f"dataset.name {name!r} is not a pinned benchmark; known: "
            f"{sorted(KNOWN_DATASETS)}")
    if cfg["revin.learnable"]:
        raise ConfigError(
            "revin.learnable=true is not supported in this build")
    if cfg["task.lookback"] < 2 or cfg["task.horizon"] < 1:
        raise ConfigError("task.lookback must be >= 2 and task.horizon >= 1")


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


def output_root(cfg: dict) -> str:
    return (cfg["output.root"] or os.environ.get("WAVEBAND_OUTPUT_ROOT")
            or "runs")


def make_dataset(cfg: dict) -> Dataset:
    if cfg["dataset.kind"] == "synthetic":
        tones = [tuple(t) for t in cfg["synthetic.tones"]]
        return dataset_from_synthetic(tones, cfg["synthetic.noise_sigma"],
                                      cfg["synthetic.length"],
                                      cfg["synthetic.seed"])
    return dataset_from_csv(cfg["dataset.path"],
                            cfg["dataset.name"] or None)


def make_model(cfg: dict) -> ForecastModel:
    spec = parse_wavelet_name(cfg["wavelet.name"], cfg["wavelet.level"])
    hp = BranchHyperparams(patch_len=cfg["model.patch_len"],
                           stride=cfg["model.stride"],
                           width=cfg["model.width"],
                           depth=cfg["model.depth"],
                           activation=cfg["model.activation"])
    return ForecastModel(spec, cfg["task.lookback"], cfg["task.horizon"],
                         hp, seed=cfg["model.seed"])


def make_train_config(cfg: dict) -> TrainConfig:
    return TrainConfig(
        learning_rate=cfg["train.learning_rate"],
        batch_size=cfg["train.batch_size"],
        max_epochs=cfg["train.max_epochs"],
        max_steps=cfg["train.max_steps"],
        optimizer=cfg["train.optimizer"],
        beta1=cfg["train.beta1"],
        beta2=cfg["train.beta2"],
        adam_eps=cfg["train.adam_eps"],
        patience=cfg["train.patience"],
        seed=cfg["train.seed"],
        modulation=cfg["balance.modulation"],
        monitor_metric=cfg["balance.metric"],
        ema=cfg["balance.ema"],
        ema_decay=cfg["balance.ema_decay"],
        c_max=cfg["balance.c_max"],
        loss_space=cfg["train.loss_space"],
    )
