"""Figures written next to the run report."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_trace", "plot_energy"]


def plot_trace(traces, path, value_target=None):
    """Functional value and gradient norm per iteration, one curve per solve stage."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    offset = 0
    for eps, tr in traces:
        it = offset + np.arange(len(tr.totals))
        label = f"eps={eps:g}" if eps else None
        ax1.semilogy(it, np.maximum(tr.totals, 1e-300), marker=".", label=label)
        ax2.semilogy(it, np.maximum(tr.grad_norms, 1e-300), marker=".", label=label)
        offset = it[-1] + 1
    if value_target is not None:
        ax1.axhline(value_target, color="k", lw=0.8, ls="--", label="certificate")
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("gap-form total")
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("gradient norm")
    if ax1.get_legend_handles_labels()[0]:
        ax1.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def plot_energy(curve, path):
    """Energy bookkeeping along the minimizing path."""
    t = np.asarray(curve["times"])
    e = np.asarray(curve["norm2"])
    diss = np.asarray(curve["dissipated"])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(t, e, label=r"$|u(t)|_H^2$")
    ax.plot(t, e + diss, ls="--", label=r"$|u(t)|_H^2 + 2\int_0^t(\Phi+\Phi^*)$")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
