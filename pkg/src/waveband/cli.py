"""Command-line entry point.

Subcommands:
    train            run the full training + test evaluation pipeline
    evaluate         score checkpoint(s) on a test split
    decompose        dump per-band wavelet coefficients of a CSV signal
    inspect-balance  summarize a run's per-batch balance log

Exit codes: 0 success, 2 configuration error, 3 data error,
4 numerical failure, 1 anything else.
"""

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import checkpoint, config, data, evaluation, reports, trainer
from .balance import BalanceReport
from .errors import (CheckpointMismatch, ConfigError, DataError,
                     NonFiniteLoss, WavebandError)
from .wavelets import dwt_multilevel, idwt_multilevel, parse_wavelet_name

log = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _run_dir_for(cfg, explicit):
    if explicit:
        path = Path(explicit)
    else:
        name = cfg["dataset.name"] or cfg["dataset.kind"]
        tag = f"{name}_T{cfg['task.lookback']}_K{cfg['task.horizon']}"
        path = Path(config.output_root(cfg)) / f"{tag}_{config.config_hash(cfg)}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_train(args) -> int:
    cfg = config.load_config(args.config, args.set or ())
    run_dir = _run_dir_for(cfg, args.run_dir)
    with open(run_dir / "config.json", "w") as f:
        json.dump(cfg, f, indent=2, sort_keys=True)

    dataset = config.make_dataset(cfg)
    model = config.make_model(cfg)
    tcfg = config.make_train_config(cfg)
    result = trainer.fit(model, dataset, tcfg, run_dir=run_dir)

    checkpoint.save(run_dir / "checkpoint.bin", model.parameters(), cfg)
    with open(run_dir / "history.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "train_loss", "val_mse", "improved"])
        for h in result.history:
            writer.writerow([h["epoch"], repr(h["train_loss"]),
                             repr(h["val_mse"]), h["improved"]])
    reports.render_history(result.history, run_dir / "history.png")
    reports.render_balance(result.reports, run_dir / "balance.png")

    row = evaluation.evaluate(model, dataset, "test",
                              batch_size=cfg["eval.batch_size"],
                              denormalized=cfg["eval.denormalized"],
                              seed=tcfg.seed,
                              config_hash=config.config_hash(cfg))
    evaluation.write_metrics_csv([row], run_dir / "metrics.csv")
    print(f"run directory: {run_dir}")
    print(f"steps: {result.steps}  best val MSE: {result.best_val_mse:.6f}")
    print(f"test MSE: {row.mse:.6f}  test MAE: {row.mae:.6f}")
    print(f"predict throughput: {result.throughput:.1f} windows/s")
    return 0


def _load_checkpoint_model(path, data_path, data_name):
    params, cfg = checkpoint.load(path)
    ckpt_name = cfg.get("dataset.name", "")
    if data_name and data_name != ckpt_name:
        raise CheckpointMismatch(
            f"checkpoint was trained on {ckpt_name or 'an unpinned dataset'!r},"
            f" requested {data_name!r}")
    if data_path:
        cfg = dict(cfg)
        cfg["dataset.path"] = data_path
    model = config.make_model(cfg)
    checkpoint.restore_into(model, params)
    return model, cfg


def cmd_evaluate(args) -> int:
    rows = []
    out_dir = Path(args.output) if args.output else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    for path in args.checkpoint:
        model, cfg = _load_checkpoint_model(path, args.data, args.name)
        dataset = config.make_dataset(cfg)
        row = evaluation.evaluate(model, dataset, "test",
                                  batch_size=cfg["eval.batch_size"],
                                  denormalized=cfg["eval.denormalized"],
                                  seed=cfg["train.seed"],
                                  config_hash=config.config_hash(cfg))
        rows.append(row)
        print(f"{row.dataset} K={row.horizon}: MSE {row.mse:.6f}  "
              f"MAE {row.mae:.6f}")
    if len(rows) == len(evaluation.HORIZONS):
        table = evaluation.report_table(rows)
        print(evaluation.format_table(table))
        if out_dir:
            evaluation.write_table_csv(table, out_dir / "report.csv")
            reports.render_metrics(table, out_dir / "report.png")
    elif out_dir:
        evaluation.write_metrics_csv(rows, out_dir / "metrics.csv")
    return 0


def cmd_decompose(args) -> int:
    spec = parse_wavelet_name(args.wavelet, args.level)
    raw = data.load_csv(args.csv)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    coeffs = dwt_multilevel(raw[None], spec)
    recon = idwt_multilevel(coeffs, spec)
    max_err = float(np.max(np.abs(recon - raw[None])))

    stem = Path(args.csv).stem
    band_names = [f"d{i + 1}" for i in range(spec.level)] + ["approx"]
    for v in range(raw.shape[0]):
        for name, band in zip(band_names, coeffs.bands()):
            out = out_dir / f"{stem}_var{v}_{name}.csv"
            with open(out, "w", newline="") as f:
                writer = csv.writer(f)
                writer.writerow([name])
                for val in band[0, v]:
                    writer.writerow([repr(float(val))])

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, axes = plt.subplots(spec.level + 2, 1,
                             figsize=(8, 2 * (spec.level + 2)), sharex=False)
    axes[0].plot(raw[0])
    axes[0].set_ylabel("signal")
    for ax, name, band in zip(axes[1:], band_names, coeffs.bands()):
        ax.plot(band[0, 0])
        ax.set_ylabel(name)
    fig.tight_layout()
    fig.savefig(out_dir / f"{stem}_bands.png", dpi=120)
    plt.close(fig)

    summary = (f"{len(band_names)} bands x {raw.shape[0]} variate(s); "
               f"max reconstruction error {max_err:.3e}")
    print(summary)
    with open(out_dir / "summary.txt", "w") as f:
        f.write(summary + "\n")
    return 0


def cmd_inspect_balance(args) -> int:
    run_dir = Path(args.run_dir)
    log_path = run_dir / "balance_log.jsonl"
    if not log_path.exists():
        raise DataError(f"no balance log at {log_path}")
    rows = []
    with open(log_path) as f:
        for line in f:
            rows.append(BalanceReport.from_record(json.loads(line)))
    if not rows:
        raise DataError(f"{log_path} is empty")

    n_bands = len(rows[0].ratios)
    names = [f"detail{v + 1}" for v in range(n_bands - 1)] + ["approx"]
    print(f"{len(rows)} batches, {n_bands} bands")
    for v, name in enumerate(names):
        rs = [r.ratios[v] for r in rows]
        cs = [r.coefficients[v] for r in rows]
        print(f"  {name:>8}: ratio mean {np.mean(rs):.4f} "
              f"[{np.min(rs):.4f}, {np.max(rs):.4f}]  "
              f"coeff mean {np.mean(cs):.4f} "
              f"[{np.min(cs):.4f}, {np.max(cs):.4f}]")
    detail_means = [float(np.mean(r.ratios[:-1])) for r in rows
                    if not r.degenerate]
    if detail_means:
        worst = max(abs(m - 1.0) for m in detail_means)
        print(f"  detail-ratio mean identity: worst deviation {worst:.2e}")

    export = run_dir / "balance_ratios.csv"
    with open(export, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["batch"] + [f"r_{n}" for n in names]
                        + [f"c_{n}" for n in names])
        for r in rows:
            writer.writerow([r.batch_index] + [repr(v) for v in r.ratios]
                            + [repr(v) for v in r.coefficients])
    reports.render_balance(rows, run_dir / "balance.png")
    print(f"exported {export}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="waveband",
        description="Wavelet-band forecasting with per-frequency "
                    "gradient balancing")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train and evaluate a model")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    p.add_argument("--run-dir", help="artifact directory (default derived)")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("evaluate", help="score checkpoints on the test split")
    p.add_argument("checkpoint", nargs="+", help="checkpoint file(s); pass "
                   "all four horizons for a report table")
    p.add_argument("--data", help="override dataset CSV path")
    p.add_argument("--name", help="pinned dataset name for validation")
    p.add_argument("--output", help="directory for metrics/report files")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("decompose", help="write per-band coefficient CSVs")
    p.add_argument("csv", help="input CSV (timestamp column first)")
    p.add_argument("--wavelet", default="db2", help="e.g. db4, sym8, "
                   "coif3, bior2.4")
    p.add_argument("--level", type=int, default=3)
    p.add_argument("--output", default="decomposed")
    p.set_defaults(fn=cmd_decompose)

    p = sub.add_parser("inspect-balance", help="summarize a run's balance log")
    p.add_argument("run_dir")
    p.set_defaults(fn=cmd_inspect_balance)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NonFiniteLoss as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (WavebandError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
