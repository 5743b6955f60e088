"""Estimators acting on the folded pulse waveform.

The slow (exciton) decay constant and amplitude are fitted on the late
part of the waveform where the fast (biexciton) component has died out;
extrapolating the fitted exponential back under the early-time bins and
subtracting it yields the fast component and the biexciton fraction of
the detected counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .correlator import WaveformHistogram
from .errors import InsufficientDataError

__all__ = [
    "BiexpDecomposition",
    "TailFit",
    "biexciton_fraction",
    "g2_from_beta",
    "tail_fit",
]


@dataclass
class TailFit:
    """Weighted log-linear fit of an exponential decay to histogram bins."""

    amplitude: float  # expected counts per bin extrapolated to t = 0
    tau: float  # ns
    amplitude_sigma: float
    tau_sigma: float
    cov: np.ndarray  # 2x2 covariance of (log amplitude, slope)
    n_bins: int
    chi2_reduced: float
    start: float  # ns; fit range is [start, stop)
    stop: float


def _weighted_logline(x: np.ndarray, counts: np.ndarray):
    """WLS of log(counts) on x with weights = counts.

    Poisson counts give var(log c) ~ 1/c, hence the weights.  Returns
    (intercept, slope), their 2x2 covariance, and reduced chi^2.
    """
    y = np.log(counts)
    w = counts.astype(float)
    design = np.stack([np.ones_like(x), x], axis=1)
    lhs = design.T @ (design * w[:, None])
    rhs = design.T @ (w * y)
    coef = np.linalg.solve(lhs, rhs)
    cov = np.linalg.inv(lhs)
    resid = y - design @ coef
    dof = len(x) - 2
    chi2 = float(np.sum(w * resid**2) / dof) if dof > 0 else math.nan
    return coef, cov, chi2


def tail_fit(
    h: WaveformHistogram,
    start: float = 100.0,
    stop: float | None = None,
    min_count: int = 5,
    min_bins: int = 10,
) -> TailFit:
    """Fit counts(t) = A exp(-t / tau) to waveform bins in [start, stop).

    ``stop`` defaults to 10 ns before the period edge: detector jitter
    folds a slice of the prompt emission spike across the pulse boundary
    into the last bins, and those wrap counts would otherwise enter the
    fit with a large weight at maximal lever arm.  Bins with fewer than
    ``min_count`` counts are dropped (their log is too noisy to weight
    sensibly); at least ``min_bins`` usable bins are required.
    """
    if stop is None:
        stop = h.period - 10.0
    if stop <= start:
        raise ValueError("fit range is empty: stop must exceed start")
    centers = h.bin_centers
    sel = (centers >= start) & (centers < stop) & (h.bins >= min_count)
    n = int(sel.sum())
    if n < min_bins:
        raise InsufficientDataError(
            f"tail fit needs at least {min_bins} bins with >= {min_count} "
            f"counts beyond t = {start} ns; found {n}"
        )
    coef, cov, chi2 = _weighted_logline(centers[sel], h.bins[sel])
    log_a, slope = float(coef[0]), float(coef[1])
    if slope >= 0:
        raise InsufficientDataError(
            "waveform tail does not decay; cannot extract a lifetime"
        )
    tau = -1.0 / slope
    amplitude = math.exp(log_a)
    return TailFit(
        amplitude=amplitude,
        tau=tau,
        amplitude_sigma=amplitude * math.sqrt(cov[0, 0]),
        tau_sigma=tau * tau * math.sqrt(cov[1, 1]),
        cov=cov,
        n_bins=n,
        chi2_reduced=chi2,
        start=start,
        stop=stop,
    )


@dataclass
class BiexpDecomposition:
    """Split of a pulse waveform into slow-tail model and fast excess."""

    beta_hat: float  # fast fraction of total counts, clipped to >= 0
    beta_sigma: float
    tau_slow: float  # ns
    tau_slow_sigma: float
    amplitude_slow: float  # counts per bin at t = 0
    tau_fast: float | None  # ns; None when the fast excess is insignificant
    amplitude_fast: float | None
    clamp_fraction: float  # |negative residuals| / total counts
    slow_model: np.ndarray  # expected slow counts per bin
    fast_counts: np.ndarray  # residual counts clipped at zero
    total: int
    fit: TailFit


def biexciton_fraction(
    h: WaveformHistogram, start: float = 100.0, fit_stop: float | None = None
) -> BiexpDecomposition:
    """Estimate the biexciton fraction of detected counts from a waveform.

    The slow component is fitted on bins in [start, fit_stop) and
    extrapolated under the whole waveform; the signed residual sum over
    all bins gives the fast fraction.  (Clipping each bin's residual at
    zero before summing would rectify noise into a positive bias of order
    0.4 * sigma_bin per bin, visibly wrong for a fast-free source, so
    clipping is applied only to the per-bin ``fast_counts`` trace used for
    display and for the fast-lifetime fit.)
    """
    fit = tail_fit(h, start=start, stop=fit_stop)
    total = h.total
    centers = h.bin_centers
    slow = fit.amplitude * np.exp(-centers / fit.tau)
    resid = h.bins - slow
    fast = np.clip(resid, 0.0, None)
    clamp_fraction = float(np.clip(-resid, 0.0, None).sum() / total)

    fast_sum = float(resid.sum())
    beta_hat = max(0.0, fast_sum) / total
    # variance: Poisson term for the counts plus the slow-model uncertainty
    # propagated through d(slow_k)/d(log A, slope) = slow_k * (1, t_k)
    grad = np.array([slow.sum(), float(slow @ centers)])
    var_model = float(grad @ fit.cov @ grad)
    beta_sigma = math.sqrt(total + var_model) / total

    tau_fast = None
    amp_fast = None
    # the fast component lives below the slow-fit start; later "excess"
    # bins (e.g. boundary wrap-around) must not enter the lifetime fit
    sig = (fast > 3.0 * np.sqrt(np.maximum(h.bins, 1))) & (centers < start)
    if int(sig.sum()) >= 3:
        try:
            coef, _, _ = _weighted_logline(centers[sig], fast[sig])
            if coef[1] < 0:
                tau_fast = -1.0 / float(coef[1])
                amp_fast = math.exp(float(coef[0]))
        except np.linalg.LinAlgError:
            pass

    return BiexpDecomposition(
        beta_hat=beta_hat,
        beta_sigma=beta_sigma,
        tau_slow=fit.tau,
        tau_slow_sigma=fit.tau_sigma,
        amplitude_slow=fit.amplitude,
        tau_fast=tau_fast,
        amplitude_fast=amp_fast,
        clamp_fraction=clamp_fraction,
        slow_model=slow,
        fast_counts=fast,
        total=total,
        fit=fit,
    )


def g2_from_beta(beta: float) -> float:
    """Pulsed g2(0) of an exciton stream contaminated by a cascade
    fraction ``beta``: with one extra photon per cascade the coincidence
    ratio is 2 * beta to first order."""
    if not 0.0 <= beta < 0.5:
        raise ValueError(f"beta must lie in [0, 0.5); got {beta}")
    return 2.0 * beta
