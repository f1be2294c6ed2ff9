"""Figure rendering for run reports: convergence history and density plots.

Rendered with the Agg backend straight to files, next to the CSV output.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .simpl import OptTrace

__all__ = ["save_convergence_figure", "save_density_figure"]


def save_convergence_figure(trace: OptTrace, path) -> None:
    """Two-panel history: objective value, then KKT and stationarity measures."""
    it = np.arange(len(trace.F))
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9.0, 3.4))
    ax0.plot(it, trace.F, "-o", ms=2.5, color="tab:blue")
    ax0.set_xlabel("iteration")
    ax0.set_ylabel("objective F")
    ax0.grid(alpha=0.3)

    kkt = np.asarray(trace.kkt, dtype=float)
    stat = np.asarray(trace.stationarity, dtype=float)
    if np.isfinite(kkt).any():
        ax1.semilogy(it[np.isfinite(kkt)], kkt[np.isfinite(kkt)], "-o", ms=2.5,
                     color="tab:red", label="KKT")
    if np.isfinite(stat).any() and np.nanmax(stat) > 0:
        ax1.semilogy(it[np.isfinite(stat)], np.maximum(stat[np.isfinite(stat)], 1e-300),
                     "-s", ms=2.5, color="tab:green", label="S")
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("optimality measure")
    ax1.grid(alpha=0.3, which="both")
    ax1.legend(loc="best", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_density_figure(values_2d: np.ndarray, lx: float, ly: float, path,
                        title: str | None = None) -> None:
    """Grayscale density plot of a (ny, nx) cell field (row 0 at the bottom);
    solid material renders black."""
    arr = np.asarray(values_2d, dtype=float)
    ny, nx = arr.shape
    width = 8.0
    fig, ax = plt.subplots(figsize=(width, max(width * ly / lx, 1.0)))
    ax.imshow(
        arr,
        cmap="gray_r",
        vmin=0.0,
        vmax=1.0,
        origin="lower",
        extent=(0.0, lx, 0.0, ly),
        interpolation="nearest",
    )
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    fig.tight_layout(pad=0.2)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
