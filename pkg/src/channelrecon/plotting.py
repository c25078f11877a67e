"""Figure rendering for run reports.

Each figure sits next to a CSV with the same content; the plots exist to
be looked at, the tables to be diffed and re-imported.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .datafiles import RunReport

_DPI = 150


def plot_noise_distribution(report: RunReport, path) -> Path:
    """Grouped bars of expected versus reconstructed photon-number law."""
    path = Path(path)
    width = max(len(report.b_expected), len(report.b_reconstructed))
    m = np.arange(width)
    b_exp = np.zeros(width)
    b_exp[: len(report.b_expected)] = report.b_expected
    b_rec = np.zeros(width)
    b_rec[: len(report.b_reconstructed)] = report.b_reconstructed

    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.bar(m - 0.2, b_exp, width=0.4, label="expected", color="#4878cf")
    ax.bar(m + 0.2, b_rec, width=0.4, label="reconstructed", color="#ee854a")
    ax.set_xlabel("photon number m")
    ax.set_ylabel("probability")
    ax.set_title(
        f"noise law, fidelity {report.distribution_fidelity:.4f}, "
        f"tau {report.tau_reconstructed:.3f} (reference {report.tau_reference:.3f})"
    )
    ax.set_xticks(m)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def plot_photocounts(report: RunReport, path) -> Path:
    """Per-setting click distributions: empirical, reconstructed, expected."""
    path = Path(path)
    n = len(report.photocounts)
    ncols = min(5, n)
    nrows = math.ceil(n / ncols)
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(2.8 * ncols, 2.4 * nrows), sharex=True, squeeze=False
    )
    for table, ax in zip(report.photocounts, axes.ravel()):
        k = np.arange(len(table.p_empirical))
        ax.bar(k - 0.25, table.p_empirical, width=0.25, label="measured", color="#6acc65")
        ax.bar(k, table.p_reconstructed, width=0.25, label="reconstructed", color="#ee854a")
        ax.bar(k + 0.25, table.p_expected, width=0.25, label="expected", color="#4878cf")
        ax.set_title(f"eta = {table.eta:.3f}", fontsize=9)
        ax.tick_params(labelsize=8)
    for ax in axes.ravel()[n:]:
        ax.set_axis_off()
    axes[0][0].legend(frameon=False, fontsize=8)
    for ax in axes[-1]:
        ax.set_xlabel("clicks k", fontsize=8)
    for row in axes:
        row[0].set_ylabel("probability", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def plot_setting_fidelities(report: RunReport, path) -> Path:
    """Photocount fidelity of every setting against its efficiency."""
    path = Path(path)
    etas = [t.eta for t in report.photocounts]
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(etas, report.setting_fidelities, "o-", color="#4878cf")
    ax.set_xlabel("total efficiency eta")
    ax.set_ylabel("photocount fidelity")
    ax.set_ylim(min(0.999, min(report.setting_fidelities) - 0.0005), 1.0001)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_figures(report: RunReport, outdir) -> list[Path]:
    """Render every report figure into a directory."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return [
        plot_noise_distribution(report, outdir / "noise_distribution.png"),
        plot_photocounts(report, outdir / "photocounts.png"),
        plot_setting_fidelities(report, outdir / "setting_fidelities.png"),
    ]
