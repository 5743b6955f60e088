"""Monte Carlo photon-stream generation and detection.

Produces time-tagged detector clicks for a pulse train driving the
emitter, optionally gated by a modulation waveform, then passed through a
two-detector (50/50 split) chain with finite efficiency, timing jitter,
dark counts, laser leakage, and per-channel dead time.

Sampling model per pulse:

* with probability ``p_cascade`` the pulse yields a biexciton photon at
  Exp(tau_bx) followed by an exciton photon delayed by a further
  Exp(tau_x) (radiative cascade);
* with probability ``p_exciton_only`` it yields a single exciton photon
  at Exp(tau_x);
* otherwise nothing is emitted.

Randomness is organized in counter-based streams: pulses are processed in
fixed-size batches and batch ``b`` of stream ``s`` draws from
``Philox(SeedSequence(seed, spawn_key=(s, b)))``.  Batches are therefore
independent of execution order, so parallel runs merge to byte-identical
output.  Timestamps are absolute picoseconds (int64), clamped at zero.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .emitter import (
    EmitterModel,
    PulseTrainConfig,
    cascade_probabilities,
)
from .errors import ConfigError
from .modulation import ModulationWaveform, transmission

__all__ = [
    "DetectionChain",
    "PhotonEvents",
    "RunSummary",
    "TagStream",
    "batch_rng",
    "detect",
    "simulate",
    "simulate_poisson_light",
    "thin",
]

KIND_EXCITON = 0
KIND_BIEXCITON = 1
KIND_DARK = 2
KIND_LEAKAGE = 3

DEFAULT_BATCH_SIZE = 1 << 20


@dataclass(frozen=True)
class DetectionChain:
    """Detector parameters after the collection optics.

    efficiency        end-to-end detection probability per photon
    splitter_ratio    probability a detected photon lands on channel 0
    jitter_sigma      Gaussian timing jitter, ns
    dark_rate         dark counts per second per detector
    leakage_per_pulse mean detected laser-leakage counts per pulse
    leakage_width     exponential time spread of leakage after the pulse, ns
    dead_time         per-channel dead time, ns (non-paralyzable)
    """

    efficiency: float = 0.12
    splitter_ratio: float = 0.5
    jitter_sigma: float = 0.35
    dark_rate: float = 100.0
    leakage_per_pulse: float = 0.0
    leakage_width: float = 0.063
    dead_time: float = 50.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ConfigError("efficiency must lie in [0, 1]")
        if not 0.0 <= self.splitter_ratio <= 1.0:
            raise ConfigError("splitter_ratio must lie in [0, 1]")
        if self.jitter_sigma < 0:
            raise ConfigError("jitter_sigma must be >= 0")
        if self.dark_rate < 0:
            raise ConfigError("dark_rate must be >= 0")
        if self.leakage_per_pulse < 0:
            raise ConfigError("leakage_per_pulse must be >= 0")
        if self.leakage_width <= 0:
            raise ConfigError("leakage_width must be positive")
        if self.dead_time < 0:
            raise ConfigError("dead_time must be >= 0")


@dataclass
class PhotonEvents:
    """Struct-of-arrays emission record (one entry per photon)."""

    pulse_index: np.ndarray  # int64
    kind: np.ndarray  # uint8
    emit_time: np.ndarray  # float64 ns relative to the owning pulse

    def __len__(self) -> int:
        return len(self.pulse_index)

    @staticmethod
    def empty() -> "PhotonEvents":
        return PhotonEvents(
            np.empty(0, np.int64), np.empty(0, np.uint8), np.empty(0, float)
        )

    def count(self, kind: int) -> int:
        return int(np.count_nonzero(self.kind == kind))


@dataclass
class TagStream:
    """Detector clicks: absolute picosecond timestamps plus channel labels.

    Sorted by (timestamp, channel).
    """

    time_ps: np.ndarray  # int64
    channel: np.ndarray  # uint8

    def __len__(self) -> int:
        return len(self.time_ps)

    def channel_times(self, ch: int) -> np.ndarray:
        return self.time_ps[self.channel == ch]

    @staticmethod
    def from_arrays(time_ps, channel) -> "TagStream":
        time_ps = np.asarray(time_ps, np.int64)
        channel = np.asarray(channel, np.uint8)
        order = np.lexsort((channel, time_ps))
        return TagStream(time_ps[order], channel[order])


@dataclass
class RunSummary:
    """Count bookkeeping for one simulated run."""

    n_pulses: int
    rng_seed: int
    power_ratio: float
    repetition_period: float
    emitted_exciton: int = 0
    emitted_biexciton: int = 0
    gated_exciton: int = 0
    gated_biexciton: int = 0
    detected_signal: int = 0
    dark_tags: int = 0
    leakage_tags: int = 0
    dead_time_dropped: int = 0
    tags_channel0: int = 0
    tags_channel1: int = 0

    @property
    def emitted_total(self) -> int:
        return self.emitted_exciton + self.emitted_biexciton

    @property
    def gated_total(self) -> int:
        return self.gated_exciton + self.gated_biexciton

    @property
    def gate_rejected(self) -> int:
        return self.emitted_total - self.gated_total

    @property
    def survival(self) -> float:
        """Measured gate survival fraction (gated / emitted)."""
        if self.emitted_total == 0:
            return float("nan")
        return self.gated_total / self.emitted_total

    def to_dict(self) -> dict:
        return {
            "n_pulses": self.n_pulses,
            "rng_seed": self.rng_seed,
            "power_ratio": self.power_ratio,
            "repetition_period": self.repetition_period,
            "emitted_exciton": self.emitted_exciton,
            "emitted_biexciton": self.emitted_biexciton,
            "emitted_total": self.emitted_total,
            "gated_exciton": self.gated_exciton,
            "gated_biexciton": self.gated_biexciton,
            "gated_total": self.gated_total,
            "gate_rejected": self.gate_rejected,
            "survival": self.survival,
            "detected_signal": self.detected_signal,
            "dark_tags": self.dark_tags,
            "leakage_tags": self.leakage_tags,
            "dead_time_dropped": self.dead_time_dropped,
            "tags_channel0": self.tags_channel0,
            "tags_channel1": self.tags_channel1,
        }


def batch_rng(seed: int, stream: int, batch: int) -> np.random.Generator:
    """Counter-based generator for one pulse batch.

    Keyed by (seed, stream, batch) through a SeedSequence spawn key, so any
    batch can be generated independently and in any order.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(batch)))
    return np.random.Generator(np.random.Philox(ss))


def _blinking_multiplier(emitter: EmitterModel, n: int, period: float, rng) -> np.ndarray:
    """Per-pulse emission multiplier from the telegraph model (batch-local).

    The batch starts in the stationary state; dwell times are exponential.
    """
    bl = emitter.blinking
    rate_off = bl.rate_on_to_off * 1e-9  # leave "on", per ns
    rate_on = bl.rate_off_to_on * 1e-9  # leave "off", per ns
    duration = n * period
    state_on = rng.random() < bl.on_probability
    switches = []
    t = 0.0
    s = state_on
    while True:
        rate = rate_off if s else rate_on
        if rate == 0.0:
            break
        t += rng.exponential(1.0 / rate)
        if t >= duration:
            break
        switches.append(t)
        s = not s
    pulse_t = np.arange(n, dtype=float) * period
    flips = np.searchsorted(np.asarray(switches), pulse_t, side="right")
    on = np.where(flips % 2 == 0, state_on, not state_on)
    return np.where(on, 1.0, bl.off_brightness)


def sample_emission(
    emitter: EmitterModel,
    power: float,
    pulse_indices: np.ndarray,
    period: float,
    rng: np.random.Generator,
) -> PhotonEvents:
    """Draw the emitted photons for the given pulses."""
    p_casc, p_solo = cascade_probabilities(emitter, power)
    n = len(pulse_indices)
    if emitter.blinking is not None and emitter.blinking.duty_factor < 1.0:
        mu = _blinking_multiplier(emitter, n, period, rng)
    else:
        mu = 1.0
    u = rng.random(n)
    casc = u < p_casc * mu
    solo = ~casc & (u < (p_casc + p_solo) * mu)
    n_casc = int(casc.sum())
    n_solo = int(solo.sum())

    t_bx = rng.exponential(emitter.tau_bx, n_casc)
    t_x_casc = t_bx + rng.exponential(emitter.tau_x, n_casc)
    t_x_solo = rng.exponential(emitter.tau_x, n_solo)

    pulse = np.concatenate(
        [pulse_indices[casc], pulse_indices[casc], pulse_indices[solo]]
    )
    kind = np.concatenate(
        [
            np.full(n_casc, KIND_BIEXCITON, np.uint8),
            np.full(n_casc, KIND_EXCITON, np.uint8),
            np.full(n_solo, KIND_EXCITON, np.uint8),
        ]
    )
    emit = np.concatenate([t_bx, t_x_casc, t_x_solo])
    return PhotonEvents(pulse.astype(np.int64), kind, emit)


def thin(
    events: PhotonEvents, w: ModulationWaveform, rng: np.random.Generator
) -> PhotonEvents:
    """Apply the gate by thinning: keep each photon with probability m(t).

    Survivors keep their timestamps; the output is a subsequence of the
    input.
    """
    if w.kind == "none" or len(events) == 0:
        return events
    m = transmission(w, events.emit_time)
    keep = rng.random(len(events)) < m
    return PhotonEvents(
        events.pulse_index[keep], events.kind[keep], events.emit_time[keep]
    )


def _dead_time_filter(times_ps: np.ndarray, dead_ps: int) -> np.ndarray:
    """Keep-mask for non-paralyzable dead time on one sorted channel.

    Greedy in time order: a click is dropped when it falls within
    ``dead_ps`` of the previous accepted click.  Implemented as repeated
    vectorized sweeps; each sweep removes the first offender of every
    violation run, which reproduces the sequential rule exactly.
    """
    keep = np.ones(len(times_ps), dtype=bool)
    if dead_ps <= 0 or len(times_ps) < 2:
        return keep
    idx = np.arange(len(times_ps))
    while True:
        t = times_ps[keep]
        if len(t) < 2:
            break
        close = np.diff(t) < dead_ps
        if not close.any():
            break
        first_of_run = close & ~np.concatenate(([False], close[:-1]))
        drop_local = np.flatnonzero(first_of_run) + 1
        keep[idx[keep][drop_local]] = False
    return keep


def _detect_raw(
    events: PhotonEvents,
    chain: DetectionChain,
    period: float,
    rng: np.random.Generator,
    span_ns: tuple[float, float],
):
    """Detection without dead time: returns unsorted tags plus counts.

    Draw order is fixed (efficiency, splitter, jitter, leakage, dark
    counts) so results are reproducible for a given stream.
    """
    period_ps = int(round(period * 1e3))
    n_events = len(events)
    det = rng.random(n_events) < chain.efficiency
    ch = (rng.random(n_events) >= chain.splitter_ratio).astype(np.uint8)
    jit = rng.normal(0.0, chain.jitter_sigma, n_events) if chain.jitter_sigma > 0 else 0.0

    off_ps = np.rint((events.emit_time + jit) * 1e3).astype(np.int64)
    t_all = events.pulse_index * period_ps + off_ps
    sig_t = t_all[det]
    sig_ch = ch[det]

    lo, hi = span_ns
    n_pulses_span = int(round((hi - lo) / period))
    # laser leakage, clocked to the pulses in this span
    if chain.leakage_per_pulse > 0 and n_pulses_span > 0:
        counts = rng.poisson(chain.leakage_per_pulse, n_pulses_span)
        k = int(counts.sum())
        first_pulse = int(round(lo / period))
        pulse_of_leak = first_pulse + np.repeat(np.arange(n_pulses_span), counts)
        t_leak = np.minimum(rng.exponential(chain.leakage_width, k), period)
        leak_ch = (rng.random(k) >= chain.splitter_ratio).astype(np.uint8)
        leak_jit = rng.normal(0.0, chain.jitter_sigma, k) if chain.jitter_sigma > 0 else 0.0
        leak_ps = pulse_of_leak.astype(np.int64) * period_ps + np.rint(
            (t_leak + leak_jit) * 1e3
        ).astype(np.int64)
    else:
        leak_ps = np.empty(0, np.int64)
        leak_ch = np.empty(0, np.uint8)

    # dark counts: homogeneous Poisson over the span, per detector
    dark_ps = []
    dark_ch = []
    if chain.dark_rate > 0:
        lam = chain.dark_rate * 1e-9 * (hi - lo)
        for c in (0, 1):
            k = rng.poisson(lam)
            t_dark = rng.uniform(lo, hi, k)
            dark_ps.append(np.rint(t_dark * 1e3).astype(np.int64))
            dark_ch.append(np.full(k, c, np.uint8))
    dark_ps = np.concatenate(dark_ps) if dark_ps else np.empty(0, np.int64)
    dark_ch = np.concatenate(dark_ch) if dark_ch else np.empty(0, np.uint8)

    tag_t = np.concatenate([sig_t, leak_ps, dark_ps])
    tag_ch = np.concatenate([sig_ch, leak_ch, dark_ch])
    np.maximum(tag_t, 0, out=tag_t)
    counts = {
        "detected_signal": len(sig_t),
        "leakage_tags": len(leak_ps),
        "dark_tags": len(dark_ps),
    }
    return tag_t, tag_ch, counts


def _apply_dead_time(tag_t, tag_ch, dead_ns: float):
    """Sort tags and apply per-channel dead time.  Returns (TagStream, dropped)."""
    order = np.lexsort((tag_ch, tag_t))
    tag_t = tag_t[order]
    tag_ch = tag_ch[order]
    dead_ps = int(round(dead_ns * 1e3))
    keep = np.ones(len(tag_t), dtype=bool)
    if dead_ps > 0:
        for c in (0, 1):
            sel = tag_ch == c
            keep[sel] = _dead_time_filter(tag_t[sel], dead_ps)
    dropped = int(len(tag_t) - keep.sum())
    return TagStream(tag_t[keep], tag_ch[keep]), dropped


def detect(
    events: PhotonEvents,
    chain: DetectionChain,
    train: PulseTrainConfig,
    rng: np.random.Generator,
) -> tuple[TagStream, dict]:
    """Run the detection chain over a full event set (single stream).

    Returns the time-sorted tag stream and a counts dict.  Dead time is
    applied last, in time order.
    """
    tag_t, tag_ch, counts = _detect_raw(
        events, chain, train.repetition_period, rng, (0.0, train.duration)
    )
    tags, dropped = _apply_dead_time(tag_t, tag_ch, chain.dead_time)
    counts["dead_time_dropped"] = dropped
    return tags, counts


def simulate(
    emitter: EmitterModel,
    train: PulseTrainConfig,
    w: ModulationWaveform | None = None,
    chain: DetectionChain | None = None,
    *,
    batch_size: int = DEFAULT_BATCH_SIZE,
    workers: int = 1,
    stream: int = 0,
) -> tuple[TagStream, RunSummary]:
    """Simulate the full pipeline: emission -> gate -> detection -> tags.

    Deterministic for a fixed ``train.rng_seed`` (and fixed batch_size);
    ``workers`` only parallelizes batch generation and never changes the
    output.
    """
    if w is None:
        w = ModulationWaveform.none()
    if chain is None:
        chain = DetectionChain()
    if batch_size < 1:
        raise ConfigError("batch_size must be >= 1")
    cascade_probabilities(emitter, train.power_ratio)  # validate capacity up front

    period = train.repetition_period
    n_batches = (train.n_pulses + batch_size - 1) // batch_size

    def run_batch(b: int):
        p0 = b * batch_size
        p1 = min(train.n_pulses, p0 + batch_size)
        rng = batch_rng(train.rng_seed, stream, b)
        pulses = np.arange(p0, p1, dtype=np.int64)
        emitted = sample_emission(emitter, train.power_ratio, pulses, period, rng)
        gated = thin(emitted, w, rng)
        tag_t, tag_ch, counts = _detect_raw(
            gated, chain, period, rng, (p0 * period, p1 * period)
        )
        batch_counts = {
            "emitted_exciton": emitted.count(KIND_EXCITON),
            "emitted_biexciton": emitted.count(KIND_BIEXCITON),
            "gated_exciton": gated.count(KIND_EXCITON),
            "gated_biexciton": gated.count(KIND_BIEXCITON),
            **counts,
        }
        return tag_t, tag_ch, batch_counts

    if workers > 1 and n_batches > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_batch, range(n_batches)))
    else:
        results = [run_batch(b) for b in range(n_batches)]

    summary = RunSummary(
        n_pulses=train.n_pulses,
        rng_seed=train.rng_seed,
        power_ratio=train.power_ratio,
        repetition_period=period,
    )
    for _, _, c in results:
        summary.emitted_exciton += c["emitted_exciton"]
        summary.emitted_biexciton += c["emitted_biexciton"]
        summary.gated_exciton += c["gated_exciton"]
        summary.gated_biexciton += c["gated_biexciton"]
        summary.detected_signal += c["detected_signal"]
        summary.dark_tags += c["dark_tags"]
        summary.leakage_tags += c["leakage_tags"]

    tag_t = np.concatenate([r[0] for r in results])
    tag_ch = np.concatenate([r[1] for r in results])
    tags, dropped = _apply_dead_time(tag_t, tag_ch, chain.dead_time)
    summary.dead_time_dropped = dropped
    summary.tags_channel0 = int(np.count_nonzero(tags.channel == 0))
    summary.tags_channel1 = int(np.count_nonzero(tags.channel == 1))
    return tags, summary


def simulate_poisson_light(
    mean_photons_per_pulse: float,
    train: PulseTrainConfig,
    chain: DetectionChain | None = None,
    *,
    tau: float = 138.0,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> TagStream:
    """Calibration source: per-pulse photon number is Poisson distributed.

    Photon times follow Exp(tau) after each pulse.  A Poisson source has no
    photon-number correlations, so the pulsed g2 of its tag stream is 1.
    """
    if chain is None:
        chain = DetectionChain()
    if mean_photons_per_pulse <= 0:
        raise ConfigError("mean_photons_per_pulse must be positive")
    period = train.repetition_period
    n_batches = (train.n_pulses + batch_size - 1) // batch_size
    parts = []
    for b in range(n_batches):
        p0 = b * batch_size
        p1 = min(train.n_pulses, p0 + batch_size)
        rng = batch_rng(train.rng_seed, 0, b)
        counts = rng.poisson(mean_photons_per_pulse, p1 - p0)
        k = int(counts.sum())
        pulse = p0 + np.repeat(np.arange(p1 - p0), counts)
        events = PhotonEvents(
            pulse.astype(np.int64),
            np.full(k, KIND_EXCITON, np.uint8),
            rng.exponential(tau, k),
        )
        parts.append(_detect_raw(events, chain, period, rng, (p0 * period, p1 * period)))
    tag_t = np.concatenate([p[0] for p in parts])
    tag_ch = np.concatenate([p[1] for p in parts])
    tags, _ = _apply_dead_time(tag_t, tag_ch, chain.dead_time)
    return tags
