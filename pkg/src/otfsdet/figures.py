"""Figure rendering for CLI reports.

All plots go straight to image files (Agg backend, no display), one figure
per call, saved next to the CSV they illustrate.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["plot_ber_curves", "plot_complexity_table", "plot_loss_history"]

_DET_STYLE = {
    "mld": dict(color="k", marker="o"),
    "mlp": dict(color="tab:blue", marker="s"),
    "cnn": dict(color="tab:orange", marker="^"),
    "resnet": dict(color="tab:green", marker="v"),
}


def _style(name):
    return _DET_STYLE.get(name, dict(marker="x"))


def plot_ber_curves(reports, path, reference=None, title=None):
    """BER vs SNR, one line per detector.

    reports: iterable of BERReport.  reference: optional {detector: (snrs,
    bers)} overlay drawn dashed, e.g. previously published values.
    """
    by_det = {}
    for r in reports:
        by_det.setdefault(r.detector, []).append(r)
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for det, rows in by_det.items():
        rows = sorted(rows, key=lambda r: r.snr_db)
        snr = [r.snr_db for r in rows]
        # zero-error points cannot sit on a log axis; leave a gap instead
        ber = [r.ber if r.ber > 0 else np.nan for r in rows]
        ax.semilogy(snr, ber, label=det, **_style(det))
    for det, (snr, ber) in (reference or {}).items():
        ax.semilogy(snr, ber, linestyle="--", alpha=0.6,
                    color=_style(det).get("color"), label=f"{det} (published)")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("BER")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_complexity_table(rows, path):
    """Grouped log-scale bars of per-frame real multiplications."""
    cols = ("mld", "mlp", "cnn", "resnet")
    labels = [f"$N_T$={r['nt']}\nQ={r['q']}" for r in rows]
    x = np.arange(len(rows))
    width = 0.2
    fig, ax = plt.subplots(figsize=(9.0, 4.5))
    for j, col in enumerate(cols):
        vals = [r[col] for r in rows]
        ax.bar(x + (j - 1.5) * width, vals, width, label=col,
               color=_style(col).get("color"))
    ax.set_yscale("log")
    ax.set_xticks(x, labels, fontsize=8)
    ax.set_ylabel("real multiplications per frame")
    ax.grid(True, axis="y", which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_loss_history(records, path, title=None):
    """Training/validation loss per epoch, one pair of lines per fold.

    records: iterable of EpochRecord (fields epoch, fold, train_loss,
    val_loss, lr).  The full-set retrain pass (no validation column) is
    drawn bold.
    """
    by_fold = {}
    for r in records:
        by_fold.setdefault(r.fold, []).append(r)
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    cmap = plt.get_cmap("tab10")
    for fold, rows in sorted(by_fold.items()):
        rows = sorted(rows, key=lambda r: r.epoch)
        epochs = [r.epoch for r in rows]
        train = [r.train_loss for r in rows]
        val = [r.val_loss for r in rows]
        if all(np.isnan(v) for v in val):
            ax.plot(epochs, train, color="k", lw=2.0, label="full-set retrain")
        else:
            c = cmap(fold % 10)
            ax.plot(epochs, train, color=c, lw=0.9, alpha=0.8,
                    label=f"fold {fold} train")
            ax.plot(epochs, val, color=c, lw=0.9, alpha=0.8, linestyle="--",
                    label=f"fold {fold} val")
    ax.set_xlabel("epoch")
    ax.set_ylabel("cross-entropy loss")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7, ncol=2)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
