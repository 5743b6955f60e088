"""Figure rendering for analysis and sweep outputs.

Everything draws through the Agg backend straight to files; no display is
ever opened.  Each helper returns the path it wrote.
"""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .correlator import G2Result, HbtHistogram, WaveformHistogram  # noqa: E402
from .estimators import BiexpDecomposition  # noqa: E402
from .modulation import ModulationWaveform, transmission  # noqa: E402

__all__ = [
    "render_hbt",
    "render_sweep",
    "render_waveform",
    "render_waveform_sample",
]


def render_waveform(
    path, h: WaveformHistogram, decomp: BiexpDecomposition | None = None
):
    """Folded pulse waveform on a log scale, with the fitted slow
    component and the fast excess when a decomposition is available."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    t = h.bin_centers
    ax.semilogy(t, np.maximum(h.bins, 0.5), drawstyle="steps-mid", lw=0.8,
                color="0.3", label="counts")
    if decomp is not None:
        ax.semilogy(t, np.maximum(decomp.slow_model, 0.5), "--", color="tab:blue",
                    label=f"slow fit (tau = {decomp.tau_slow:.1f} ns)")
        fast = np.where(decomp.fast_counts > 0, decomp.fast_counts, np.nan)
        ax.semilogy(t, fast, ".", ms=3, color="tab:red",
                    label=f"fast excess (beta = {decomp.beta_hat:.4f})")
    ax.set_xlabel("time after pulse (ns)")
    ax.set_ylabel("counts per bin")
    ax.set_xlim(0, h.period)
    ax.legend(loc="upper right", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_hbt(path, h: HbtHistogram, result: G2Result | None = None):
    """Cross-correlation histogram with the center window marked."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(h.bin_centers / 1e3, h.bins, drawstyle="steps-mid", lw=0.8, color="0.3")
    if result is not None:
        half = result.window / 2e3
        ax.axvspan(-half, half, color="tab:red", alpha=0.15,
                   label=f"g2(0) = {result.g2:.4f} +- {result.sigma:.4f}")
        ax.legend(loc="upper right", fontsize=9)
    ax.set_xlabel("delay (us)")
    ax.set_ylabel("coincidences per bin")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_sweep(path, rows, mode: str):
    """Two panels: purity (analytic vs estimated) and throughput."""
    if mode == "offset":
        x = np.array([r.t0 for r in rows], float)
        xlabel = "gate offset t0 (ns)"
    else:
        x = np.array([r.power for r in rows], float)
        xlabel = "excitation power (P / P_sat)"
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 7), sharex=True)

    ax1.plot(x, [r.beta_analytic for r in rows], "-", color="tab:blue",
             label="beta (analytic)")
    ax1.errorbar(x, [r.beta_mc for r in rows], yerr=[r.beta_sigma for r in rows],
                 fmt="o", ms=4, color="tab:blue", label="beta (simulated)")
    ax1.errorbar(x, [r.g2 for r in rows], yerr=[r.g2_sigma for r in rows],
                 fmt="s", ms=4, color="tab:red", label="g2(0) (simulated)")
    ax1.plot(x, [2 * r.beta_analytic for r in rows], "--", color="tab:red",
             label="2 beta (analytic)")
    ax1.set_ylabel("purity metric")
    ax1.legend(fontsize=9)

    ax2.plot(x, [r.survival_analytic for r in rows], "-", color="tab:green",
             label="survival (analytic)")
    ax2.errorbar(x, [r.survival_mc for r in rows],
                 yerr=[r.survival_sigma for r in rows],
                 fmt="o", ms=4, color="tab:green", label="survival (simulated)")
    ax2.set_ylabel("gate survival fraction")
    ax2.set_xlabel(xlabel)
    ax2.legend(fontsize=9)

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_waveform_sample(path, w: ModulationWaveform, t, values=None):
    """Transmission m(t) of a gate waveform."""
    t = np.asarray(t, float)
    if values is None:
        values = transmission(w, t)
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(t, values, color="tab:blue")
    ax.set_xlabel("time after pulse (ns)")
    ax.set_ylabel("transmission")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title(w.kind)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
