"""Wavelet-band forecasting with per-frequency gradient balancing.

Pipeline: instance-normalize the lookback window, decompose it into
frequency bands with a multi-level discrete wavelet transform, forecast
each band's future coefficients with an independent patch-mixer network,
reconstruct the horizon, and de-normalize.  During training a per-batch
monitor compares predicted and true band coefficients and rescales each
branch's gradients to balance the learning pace across bands.
"""

from .balance import (BalanceReport, DiscrepancyEMA, apply_modulation,
                      decompose_target, discrepancy_ratios,
                      loss_modulation_scale, modulation_coefficient)
from .data import (Dataset, DatasetSpec, KNOWN_DATASETS, WindowSet,
                   dataset_from_csv, dataset_from_synthetic, load_csv,
                   standardize, synthetic_multitone)
from .errors import (BranchCountMismatch, CheckpointMismatch, ConfigError,
                     DataError, DegenerateWindow, EmptyTape, LengthMismatch,
                     MissingHorizon, MissingValue, NonFiniteLoss,
                     NonPositiveRatio, ParseError, ShapeMismatch,
                     SignalTooShort, SpecMismatch, SplitTooShort,
                     StatsMismatch, UnsupportedWavelet, WavebandError)
from .evaluation import MetricsRow, evaluate, mae, mse, report_table
from .model import BranchHyperparams, BranchNetwork, ForecastModel
from .revin import InstanceStats, denormalize, normalize, normalize_with
from .trainer import Adam, FitResult, SGD, TrainConfig, fit, train_step
from .wavelets import (CoefficientSet, FilterBank, WaveletSpec,
                       coefficient_lengths, dwt_multilevel,
                       dwt_multilevel_backward, filter_bank, idwt_multilevel,
                       idwt_multilevel_backward, parse_wavelet_name)

__version__ = "0.1.0"

__all__ = [
    "Adam", "BalanceReport", "BranchCountMismatch", "BranchHyperparams",
    "BranchNetwork", "CheckpointMismatch", "CoefficientSet", "ConfigError",
    "DataError", "Dataset", "DatasetSpec", "DegenerateWindow",
    "DiscrepancyEMA", "EmptyTape", "FilterBank", "FitResult",
    "ForecastModel", "InstanceStats", "KNOWN_DATASETS", "LengthMismatch",
    "MetricsRow", "MissingHorizon", "MissingValue", "NonFiniteLoss",
    "NonPositiveRatio", "ParseError", "SGD", "ShapeMismatch",
    "SignalTooShort", "SpecMismatch", "SplitTooShort", "StatsMismatch",
    "TrainConfig", "UnsupportedWavelet", "WaveletSpec", "WavebandError",
    "WindowSet", "apply_modulation", "coefficient_lengths",
    "dataset_from_csv", "dataset_from_synthetic", "decompose_target",
    "denormalize", "discrepancy_ratios", "dwt_multilevel",
    "dwt_multilevel_backward", "evaluate", "filter_bank", "fit",
    "idwt_multilevel", "idwt_multilevel_backward", "load_csv",
    "loss_modulation_scale", "mae", "modulation_coefficient", "mse",
    "normalize", "normalize_with", "parse_wavelet_name", "report_table",
    "standardize", "synthetic_multitone", "train_step",
]
