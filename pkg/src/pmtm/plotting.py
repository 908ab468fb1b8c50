"""Static figures for experiment reports (written to files, Agg backend)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "true": {"color": "tab:blue", "lw": 2.0, "label": "True PSD"},
    "pmtm": {"color": "black", "lw": 1.2, "label": "PMTM"},
    "psth": {"color": "tab:green", "lw": 1.0, "label": "PSTH-PSD"},
    "ss": {"color": "c", "lw": 1.0, "label": "SS-PSD"},
    "oracle": {"color": "tab:red", "lw": 1.0, "label": "Oracle PSD"},
}

RC = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 120,
}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_psd_comparison(freqs, truth, estimates: dict, path, title: str | None = None):
    """Log-scale PSD of each estimator against the true PSD."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(6.0, 3.6))
        ax.semilogy(freqs, truth, **STYLE["true"])
        for name, power in estimates.items():
            style = STYLE.get(name, {"label": name})
            ax.semilogy(freqs, np.maximum(power, 1e-30), **style)
        ax.set_xlabel("Frequency (cycles/bin)")
        ax.set_ylabel("PSD")
        ax.set_xlim(freqs[0], freqs[-1])
        if title:
            ax.set_title(title)
        ax.legend(frameon=False, ncol=2)
        return _save(fig, path)


def plot_trial_sweep(freqs, truth, estimates_by_trials: dict, path):
    """PMTM estimates for several ensemble sizes, one panel each."""
    items = sorted(estimates_by_trials.items())
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, len(items), figsize=(3.0 * len(items), 2.8),
                                 sharey=True, squeeze=False)
        for ax, (trials, power) in zip(axes[0], items):
            ax.semilogy(freqs, truth, **STYLE["true"])
            ax.semilogy(freqs, np.maximum(power, 1e-30), color="black", lw=1.0)
            ax.set_title(f"L = {trials}")
            ax.set_xlabel("Frequency (cycles/bin)")
        axes[0, 0].set_ylabel("PSD")
        return _save(fig, path)


def plot_nmse_summary(values_by_estimator: dict, path):
    names = list(values_by_estimator)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        ax.boxplot([values_by_estimator[n] for n in names], showfliers=True)
        ax.set_xticks(range(1, len(names) + 1), [STYLE.get(n, {}).get("label", n) for n in names])
        ax.set_yscale("log")
        ax.set_ylabel("Normalized MSE")
        return _save(fig, path)


def plot_raster(latent, spikes, path, window=(200, 350)):
    """Latent series and spike raster over a window of bins."""
    lo, hi = window
    hi = min(hi, len(latent))
    k = np.arange(lo, hi)
    with plt.rc_context(RC):
        fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(6.0, 3.6), sharex=True)
        ax0.plot(k, latent[lo:hi], color="tab:blue", lw=1.0)
        ax0.set_ylabel("x_k")
        rows, cols = np.nonzero(np.asarray(spikes)[:, lo:hi])
        ax1.scatter(cols + lo, rows + 1, marker="|", s=30, color="black")
        ax1.set_ylabel("Trial")
        ax1.set_xlabel("Bin k")
        return _save(fig, path)


def report_figures(report, out_dir) -> list[Path]:
    """Write the standard figure set for an experiment report."""
    out_dir = Path(out_dir)
    paths = []
    if report.runs:
        first = report.runs[0]
        paths.append(plot_psd_comparison(report.freqs, report.truth, first.psds,
                                         out_dir / "psd_comparison.png", title=first.run_id))
        if first.latent is not None and first.spikes is not None:
            paths.append(plot_raster(first.latent, first.spikes, out_dir / "raster.png"))
    values = {n: report.values(n) for n in report.config.estimators if report.values(n).size}
    if values:
        paths.append(plot_nmse_summary(values, out_dir / "nmse.png"))
    return paths
