"""Parameter sweeps: run the simulator plus the full analysis pipeline
per grid point and tabulate analytic vs estimated purity metrics.

Each row gets its own RNG stream derived from the master seed and the row
index, so rows are reproducible independently of evaluation order or
worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from . import mc_engine
from .correlator import g2_zero, hbt_correlate, waveform_histogram
from .emitter import EmitterModel, PulseTrainConfig, brightness
from .errors import InsufficientDataError, MissingChannelError, UnreachableTargetError
from .estimators import biexciton_fraction
from .mc_engine import DetectionChain
from .modulation import ModulationWaveform, gated_beta, survival_fraction

__all__ = [
    "SweepRow",
    "edge_waveform",
    "min_offset_for_target",
    "predicted_g2",
    "sweep_offset",
    "sweep_power",
]


@dataclass
class SweepRow:
    """One grid point: analytic expectations next to simulated estimates."""

    t0: float | None  # ns; None when the row is not offset-like
    power: float
    beta_analytic: float
    survival_analytic: float
    beta_mc: float
    beta_sigma: float
    survival_mc: float
    survival_sigma: float
    g2: float
    g2_sigma: float
    detected: int
    error: str | None = None


def edge_waveform(
    edge: str, t0: float, rise_time: float = 50.0, floor: float = 0.0
) -> ModulationWaveform:
    """Build a step-like gate for an offset sweep."""
    if edge == "heaviside":
        return ModulationWaveform.heaviside_step(t0)
    if edge == "smoothed":
        return ModulationWaveform.smoothed_step(t0, rise_time=rise_time, floor=floor)
    raise ValueError(f"unknown edge kind {edge!r}; expected 'heaviside' or 'smoothed'")


def _run_row(
    emitter: EmitterModel,
    train: PulseTrainConfig,
    chain: DetectionChain,
    w: ModulationWaveform | None,
    t0: float | None,
    stream: int,
    n_side_peaks: int,
    tail_start: float,
) -> SweepRow:
    power = train.power_ratio
    wa = w if w is not None else ModulationWaveform.none()
    beta_an = gated_beta(emitter, power, wa)
    surv_an = survival_fraction(emitter, power, wa)

    tags, summary = mc_engine.simulate(emitter, train, w, chain, stream=stream)
    emitted = summary.emitted_total
    surv_mc = summary.survival
    surv_sigma = (
        math.sqrt(surv_mc * (1.0 - surv_mc) / emitted) if emitted else math.nan
    )

    error = None
    beta_mc = beta_sigma = g2 = g2_sigma = math.nan
    try:
        period = train.repetition_period
        wf = waveform_histogram(tags, period)
        decomp = biexciton_fraction(wf, start=tail_start)
        beta_mc, beta_sigma = decomp.beta_hat, decomp.beta_sigma
        hbt = hbt_correlate(tags, span=(n_side_peaks + 0.5) * period)
        res = g2_zero(
            hbt, period, n_side_peaks=n_side_peaks, tail_constant=emitter.tau_x
        )
        g2, g2_sigma = res.g2, res.sigma
    except (InsufficientDataError, MissingChannelError, ValueError) as exc:
        error = str(exc)

    return SweepRow(
        t0=t0,
        power=power,
        beta_analytic=beta_an,
        survival_analytic=surv_an,
        beta_mc=beta_mc,
        beta_sigma=beta_sigma,
        survival_mc=surv_mc,
        survival_sigma=surv_sigma,
        g2=g2,
        g2_sigma=g2_sigma,
        detected=len(tags),
        error=error,
    )


def _run_rows(jobs, workers: int) -> list[SweepRow]:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda job: _run_row(*job), jobs))
    return [_run_row(*job) for job in jobs]


def sweep_offset(
    emitter: EmitterModel,
    train: PulseTrainConfig,
    chain: DetectionChain,
    offsets,
    edge: str = "smoothed",
    rise_time: float = 50.0,
    floor: float = 0.0,
    *,
    workers: int = 1,
    n_side_peaks: int = 10,
    tail_start: float = 100.0,
) -> list[SweepRow]:
    """Scan the gate opening time at fixed power."""
    jobs = [
        (
            emitter,
            train,
            chain,
            edge_waveform(edge, float(t0), rise_time, floor),
            float(t0),
            i,
            n_side_peaks,
            tail_start,
        )
        for i, t0 in enumerate(offsets)
    ]
    return _run_rows(jobs, workers)


def sweep_power(
    emitter: EmitterModel,
    train: PulseTrainConfig,
    chain: DetectionChain,
    powers,
    w: ModulationWaveform | None = None,
    *,
    workers: int = 1,
    n_side_peaks: int = 10,
    tail_start: float = 100.0,
) -> list[SweepRow]:
    """Scan the excitation power at a fixed gate."""
    t0 = w.t0 if w is not None and w.kind != "none" else None
    jobs = [
        (
            emitter,
            replace(train, power_ratio=float(p)),
            chain,
            w,
            t0,
            i,
            n_side_peaks,
            tail_start,
        )
        for i, p in enumerate(powers)
    ]
    return _run_rows(jobs, workers)


def predicted_g2(
    emitter: EmitterModel,
    power: float,
    w: ModulationWaveform,
    chain: DetectionChain | None = None,
    period: float = 1000.0,
) -> float:
    """Analytic pulsed g2(0) for a gated source plus detector background.

    Signal term: 2 * gated beta.  Background term: with per-pulse signal
    s and uncorrelated background rate bkg per channel, accidental center
    coincidences add (2 s bkg + bkg^2) / (s + bkg)^2.
    """
    signal = 2.0 * gated_beta(emitter, power, w)
    if chain is None:
        return signal
    surv = survival_fraction(emitter, power, w)
    s = brightness(emitter, power) * surv * chain.efficiency / 2.0
    bkg = chain.dark_rate * period * 1e-9 + chain.leakage_per_pulse / 2.0
    if s + bkg <= 0:
        return signal
    return signal + (2.0 * s * bkg + bkg * bkg) / (s + bkg) ** 2


def min_offset_for_target(
    emitter: EmitterModel,
    power: float,
    target_g2: float,
    chain: DetectionChain | None = None,
    edge: str = "heaviside",
    rise_time: float = 50.0,
    *,
    period: float = 1000.0,
    grid_step: float = 1.0,
    t_max: float | None = None,
) -> float:
    """Smallest gate offset whose predicted g2(0) meets the target.

    Scans t0 on a uniform grid up to ``t_max`` (default ten slow
    lifetimes).  Raises :class:`UnreachableTargetError` when even the best
    offset cannot reach the target because of the detection-chain
    background floor.
    """
    if target_g2 <= 0:
        raise ValueError("target_g2 must be positive")
    if t_max is None:
        t_max = 10.0 * emitter.tau_x
    best = math.inf
    t0 = 0.0
    while t0 <= t_max + 1e-9:
        w = edge_waveform(edge, t0, rise_time)
        g2 = predicted_g2(emitter, power, w, chain, period)
        if g2 <= target_g2:
            return t0
        best = min(best, g2)
        t0 += grid_step
    raise UnreachableTargetError(target_g2, best)
