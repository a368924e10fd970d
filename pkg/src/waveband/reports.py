"""Figure rendering for run artifacts.

Every delimited output the CLI writes gets a rendered companion figure:
training history, per-band balance trajectories, and the metrics table.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_history(history, path):
    """Train-loss / validation-MSE curves."""
    epochs = [h["epoch"] for h in history]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(epochs, [h["train_loss"] for h in history], label="train loss")
    ax.plot(epochs, [h["val_mse"] for h in history], label="validation MSE")
    ax.set_xlabel("epoch")
    ax.set_yscale("log")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_balance(reports, path):
    """Per-band discrepancy ratios and modulation coefficients over batches."""
    if not reports:
        return
    batches = [r.batch_index for r in reports]
    n_bands = len(reports[0].ratios)
    fig, (ax_r, ax_c) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    for v in range(n_bands):
        label = f"detail {v + 1}" if v < n_bands - 1 else "approx"
        ax_r.plot(batches, [r.ratios[v] for r in reports], label=label,
                  linewidth=0.8)
        ax_c.plot(batches, [r.coefficients[v] for r in reports],
                  label=label, linewidth=0.8)
    ax_r.set_ylabel("discrepancy ratio")
    ax_r.axhline(1.0, color="k", linewidth=0.5)
    ax_r.legend(fontsize=8)
    ax_r.grid(alpha=0.3)
    ax_c.set_ylabel("modulation coefficient")
    ax_c.set_xlabel("batch")
    ax_c.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_metrics(table, path):
    """Bar chart of MSE/MAE per horizon plus the Avg row."""
    recs = table["rows"] + [table["avg"]]
    labels = [str(r["horizon"]) for r in recs]
    x = range(len(recs))
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.35
    ax.bar([i - width / 2 for i in x], [r["mse"] for r in recs], width,
           label="MSE")
    ax.bar([i + width / 2 for i in x], [r["mae"] for r in recs], width,
           label="MAE")
    ax.set_xticks(list(x), labels)
    ax.set_xlabel("horizon")
    ax.legend()
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
