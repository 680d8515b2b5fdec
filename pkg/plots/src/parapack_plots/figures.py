"""Figure builders for parapack traces.

Rendering is headless (Agg); every builder returns a matplotlib Figure
with one plotted line per cell where the data is per-cell, so the
series count always matches the pack size.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .traces import OcvCurveData, PlotDataError, TraceData


def _cell_labels(n: int) -> list[str]:
    return ["cell %d" % (k + 1) for k in range(n)]


def branch_current_figure(trace: TraceData, title: str | None = None):
    """Branch current of every cell over time."""
    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    for k, label in enumerate(_cell_labels(trace.n)):
        ax.plot(trace.t, trace.currents[:, k], label=label)
    ax.axhline(0.0, color="0.6", linewidth=0.8)
    ax.set_xlabel("time")
    ax.set_ylabel("branch current")
    ax.set_title(title or "Branch currents")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return fig


def estimator_error_figure(trace: TraceData, title: str | None = None):
    """Two panels: per-cell SOC and relaxation estimation errors."""
    if not trace.has_estimates:
        raise PlotDataError(
            "trace has no estimator columns; run the estimate command to "
            "produce one"
        )
    fig, (ax_soc, ax_relax) = plt.subplots(
        2, 1, figsize=(8.0, 6.0), sharex=True)
    labels = _cell_labels(trace.n)
    for k, label in enumerate(labels):
        ax_soc.plot(trace.t, trace.soc[:, k] - trace.est_soc[:, k],
                    label=label)
    for k, label in enumerate(labels):
        ax_relax.plot(trace.t, trace.relax[:, k] - trace.est_relax[:, k],
                      label=label)
    ax_soc.set_ylabel("SOC error")
    ax_soc.set_title(title or "Estimation error")
    ax_soc.legend(loc="best")
    ax_soc.grid(True, alpha=0.3)
    ax_relax.set_ylabel("relaxation error")
    ax_relax.set_xlabel("time")
    ax_relax.grid(True, alpha=0.3)
    fig.tight_layout()
    return fig


def ocv_figure(curve: OcvCurveData, title: str | None = None):
    """Open-circuit voltage against state of charge."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(curve.z, curve.ocv)
    ax.set_xlabel("state of charge")
    ax.set_ylabel("open-circuit voltage")
    ax.set_title(title or "OCV curve")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return fig


def ocv_slope_figure(curve: OcvCurveData, title: str | None = None):
    """OCV slope against state of charge, with its extreme values."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(curve.z, curve.docv)
    lo = float(np.min(curve.docv))
    hi = float(np.max(curve.docv))
    ax.axhline(lo, color="0.6", linewidth=0.8, linestyle="--",
               label="min %.4f" % lo)
    ax.axhline(hi, color="0.6", linewidth=0.8, linestyle=":",
               label="max %.4f" % hi)
    ax.set_xlabel("state of charge")
    ax.set_ylabel("OCV slope")
    ax.set_title(title or "OCV slope")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return fig


def save_figure(fig, path, dpi: int = 150) -> None:
    """Write the figure and release it."""
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
