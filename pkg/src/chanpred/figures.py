"""Matplotlib rendering of report CSV rows.

Every report the CLI writes gets a PNG next to its CSV: sweeps are drawn
as one curve per predictor label over the swept axis (spectral efficiency
and prediction NMSE side by side), traces as NMSE over the epoch index.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_AXIS_LABELS = {
    "snr_db": "downlink SNR [dB]",
    "speed": "UE speed [km/h]",
    "n_antennas": "transmit antennas",
    "history_len": "history length L",
    "predictor": "predictor",
}


def _numeric(values):
    try:
        return [float(v) for v in values], False
    except (TypeError, ValueError):
        return list(range(len(values))), True


def render_sweep_figure(rows: list, axis: str, out_path: str) -> None:
    """Draw sweep rows (dicts with the report CSV fields) to a PNG file."""
    by_pred = {}
    for row in rows:
        by_pred.setdefault(row["predictor"], []).append(row)
    fig, (ax_se, ax_err) = plt.subplots(1, 2, figsize=(9.6, 3.8))
    categorical_ticks = None
    for pred, pred_rows in by_pred.items():
        xs, categorical = _numeric([r["value"] for r in pred_rows])
        if categorical:
            categorical_ticks = [str(r["value"]) for r in pred_rows]
        se = [float(r["se_sum_mean"]) for r in pred_rows]
        nm = [float(r["nmse_db_mean"]) for r in pred_rows]
        ax_se.plot(xs, se, marker="o", label=pred)
        ax_err.plot(xs, nm, marker="o", label=pred)
    xlabel = _AXIS_LABELS.get(axis, axis)
    for ax, ylabel in ((ax_se, "sum spectral efficiency [bit/s/Hz]"),
                       (ax_err, "prediction NMSE [dB]")):
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.4)
        if axis == "n_antennas":
            ax.set_xscale("log", base=2)
        if categorical_ticks is not None:
            ax.set_xticks(range(len(categorical_ticks)))
            ax.set_xticklabels(categorical_ticks, rotation=20)
    ax_se.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_trace_figure(epochs, nmse_db, out_path: str) -> None:
    """Draw a per-epoch prediction error trace to a PNG file."""
    fig, ax = plt.subplots(figsize=(6.4, 3.8))
    ax.plot(list(epochs), list(nmse_db), marker="o")
    ax.set_xlabel("epoch")
    ax.set_ylabel("prediction NMSE [dB]")
    ax.grid(True, alpha=0.4)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
