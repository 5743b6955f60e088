"""Monte Carlo engine: determinism, emission statistics, detection chain."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from photongate.emitter import (
    BlinkingModel,
    EmitterModel,
    PulseTrainConfig,
    beta_at_power,
    brightness,
    cascade_probabilities,
)
from photongate.errors import ConfigError
from photongate.mc_engine import (
    KIND_BIEXCITON,
    KIND_EXCITON,
    DetectionChain,
    PhotonEvents,
    TagStream,
    _dead_time_filter,
    batch_rng,
    sample_emission,
    simulate,
    simulate_poisson_light,
    thin,
)
from photongate.modulation import ModulationWaveform

NO_NOISE = DetectionChain(
    efficiency=1.0, jitter_sigma=0.0, dark_rate=0.0, leakage_per_pulse=0.0, dead_time=0.0
)


def test_same_seed_same_tags(ref_emitter):
    train = PulseTrainConfig(n_pulses=200_000, rng_seed=42)
    tags_a, sum_a = simulate(ref_emitter, train)
    tags_b, sum_b = simulate(ref_emitter, train)
    assert np.array_equal(tags_a.time_ps, tags_b.time_ps)
    assert np.array_equal(tags_a.channel, tags_b.channel)
    assert sum_a.to_dict() == sum_b.to_dict()


def test_seed_changes_tags(ref_emitter):
    train = PulseTrainConfig(n_pulses=100_000, rng_seed=42)
    other = PulseTrainConfig(n_pulses=100_000, rng_seed=43)
    tags_a, _ = simulate(ref_emitter, train)
    tags_b, _ = simulate(ref_emitter, other)
    assert not np.array_equal(tags_a.time_ps, tags_b.time_ps)


def test_stream_offset_changes_tags(ref_emitter):
    train = PulseTrainConfig(n_pulses=100_000, rng_seed=42)
    tags_a, _ = simulate(ref_emitter, train, stream=0)
    tags_b, _ = simulate(ref_emitter, train, stream=1)
    assert not np.array_equal(tags_a.time_ps, tags_b.time_ps)


def test_workers_do_not_change_output(ref_emitter):
    # force several batches so the thread pool actually interleaves
    train = PulseTrainConfig(n_pulses=700_000, rng_seed=9)
    kw = dict(batch_size=1 << 18)
    tags_serial, sum_serial = simulate(ref_emitter, train, **kw)
    tags_pool, sum_pool = simulate(ref_emitter, train, workers=3, **kw)
    assert np.array_equal(tags_serial.time_ps, tags_pool.time_ps)
    assert np.array_equal(tags_serial.channel, tags_pool.channel)
    assert sum_serial.to_dict() == sum_pool.to_dict()


def test_batch_rng_keying():
    a = batch_rng(7, 0, 0).random(4)
    assert np.array_equal(a, batch_rng(7, 0, 0).random(4))
    assert not np.array_equal(a, batch_rng(7, 0, 1).random(4))
    assert not np.array_equal(a, batch_rng(7, 1, 0).random(4))
    assert not np.array_equal(a, batch_rng(8, 0, 0).random(4))


def test_emission_composition(ref_emitter):
    rng = batch_rng(5, 0, 0)
    pulses = np.arange(400_000, dtype=np.int64)
    ev = sample_emission(ref_emitter, 5.8, pulses, 1000.0, rng)
    n_bx = ev.count(KIND_BIEXCITON)
    n_total = len(ev)
    b = brightness(ref_emitter, 5.8)
    beta = beta_at_power(ref_emitter, 5.8)
    # photon count per pulse is 2 w.p. p_casc, 1 w.p. p_solo
    p_casc, p_solo = cascade_probabilities(ref_emitter, 5.8)
    mean = len(pulses) * b
    var = len(pulses) * (4 * p_casc + p_solo - b**2)
    assert abs(n_total - mean) < 3.5 * math.sqrt(var)
    # biexciton share of emitted photons is exactly beta in expectation
    sigma_share = math.sqrt(beta * (1 - beta) / n_total)
    assert abs(n_bx / n_total - beta) < 3.5 * sigma_share


def test_cascade_ordering(ref_emitter):
    """Within a cascade the biexciton photon precedes its exciton partner."""
    rng = batch_rng(6, 0, 0)
    ev = sample_emission(ref_emitter, 5.8, np.arange(200_000, dtype=np.int64), 1000.0, rng)
    by_pulse = {}
    for p, k, t in zip(ev.pulse_index, ev.kind, ev.emit_time):
        by_pulse.setdefault(int(p), []).append((int(k), float(t)))
    pairs = [v for v in by_pulse.values() if len(v) == 2]
    assert len(pairs) > 5000
    for photons in pairs:
        kinds = dict(photons)
        assert set(kinds) == {KIND_EXCITON, KIND_BIEXCITON}
        assert kinds[KIND_BIEXCITON] < kinds[KIND_EXCITON]


def test_heaviside_thinning_is_exact(ref_emitter):
    rng = batch_rng(12, 0, 0)
    ev = sample_emission(ref_emitter, 5.8, np.arange(100_000, dtype=np.int64), 1000.0, rng)
    kept = thin(ev, ModulationWaveform.heaviside_step(45.0), rng)
    assert len(kept) < len(ev)
    assert np.all(kept.emit_time >= 45.0)
    # and nothing above the edge was touched beyond selection
    assert np.all(np.isin(kept.emit_time, ev.emit_time))


def test_thin_none_is_identity(ref_emitter):
    rng = batch_rng(12, 0, 0)
    ev = sample_emission(ref_emitter, 5.8, np.arange(1000, dtype=np.int64), 1000.0, rng)
    assert thin(ev, ModulationWaveform.none(), rng) is ev


def test_survival_counter_matches_closed_form(ref_emitter):
    train = PulseTrainConfig(n_pulses=300_000, rng_seed=77)
    _, summary = simulate(ref_emitter, train, ModulationWaveform.heaviside_step(45.0))
    expected = 0.6928727275191897
    sigma = math.sqrt(expected * (1 - expected) / summary.emitted_total)
    assert abs(summary.survival - expected) < 3.5 * sigma
    assert summary.gate_rejected == summary.emitted_total - summary.gated_total


def reference_dead_time(times, dead):
    kept = []
    last = -(10**18)
    for t in times:
        if t - last >= dead:
            kept.append(True)
            last = t
        else:
            kept.append(False)
    return np.asarray(kept, bool)


def test_dead_time_filter_matches_sequential_rule():
    rng = np.random.default_rng(314)
    times = np.sort(rng.integers(0, 2_000_000, 20_000).astype(np.int64))
    for dead in (1, 37, 50_000, 400_000):
        got = _dead_time_filter(times, dead)
        assert np.array_equal(got, reference_dead_time(times, dead))


def test_dead_time_boundary_gap_is_kept():
    times = np.array([0, 50_000, 99_999, 150_000], dtype=np.int64)
    keep = _dead_time_filter(times, 50_000)
    # exactly-dead gaps are accepted; 99_999 is 49_999 after the last kept
    assert keep.tolist() == [True, True, False, True]


@given(
    st.lists(st.integers(min_value=0, max_value=5000), min_size=0, max_size=120),
    st.integers(min_value=1, max_value=800),
)
def test_dead_time_filter_property(raw_times, dead):
    times = np.sort(np.asarray(raw_times, np.int64))
    keep = _dead_time_filter(times, dead)
    assert np.array_equal(keep, reference_dead_time(times, dead))
    kept = times[keep]
    assert np.all(np.diff(kept) >= dead)


def test_simulated_dead_time_per_channel(ref_emitter):
    chain = DetectionChain(dead_time=200.0, dark_rate=5000.0)
    train = PulseTrainConfig(n_pulses=150_000, rng_seed=21)
    tags, summary = simulate(ref_emitter, train, chain=chain)
    for ch in (0, 1):
        t = tags.channel_times(ch)
        assert np.all(np.diff(t) >= 200_000)  # ps
    assert summary.dead_time_dropped > 0


def test_timestamps_sorted_and_nonnegative(ref_emitter):
    chain = DetectionChain(jitter_sigma=5.0)  # exaggerate wrap-around pressure
    train = PulseTrainConfig(n_pulses=100_000, rng_seed=8)
    tags, _ = simulate(ref_emitter, train, chain=chain)
    assert tags.time_ps.dtype == np.int64
    assert tags.time_ps.min() >= 0
    assert np.all(np.diff(tags.time_ps) >= 0)


def test_exact_timestamps_without_noise(ref_emitter):
    train = PulseTrainConfig(n_pulses=50_000, rng_seed=31)
    tags, summary = simulate(ref_emitter, train, chain=NO_NOISE)
    # every emitted photon becomes exactly one tag
    assert len(tags) == summary.emitted_total == summary.detected_signal
    assert summary.dark_tags == summary.leakage_tags == 0
    # all offsets stay inside a few lifetimes of their own pulse
    assert tags.time_ps.max() < (train.n_pulses + 3) * 1_000_000


def test_dark_count_rate(ref_emitter):
    chain = DetectionChain(
        efficiency=0.0, dark_rate=50_000.0, leakage_per_pulse=0.0, dead_time=0.0
    )
    train = PulseTrainConfig(n_pulses=200_000, rng_seed=61)
    tags, summary = simulate(ref_emitter, train, chain=chain)
    # 2 detectors x rate x duration (0.2 s)
    expected = 2 * 50_000.0 * train.duration * 1e-9
    assert abs(len(tags) - expected) < 3.5 * math.sqrt(expected)
    assert summary.dark_tags == len(tags)
    # darks spread over both channels
    assert 0.4 < summary.tags_channel0 / len(tags) < 0.6


def test_leakage_rate_and_timing(ref_emitter):
    chain = DetectionChain(
        efficiency=0.0, dark_rate=0.0, leakage_per_pulse=0.25, dead_time=0.0, jitter_sigma=0.0
    )
    train = PulseTrainConfig(n_pulses=100_000, rng_seed=62)
    tags, summary = simulate(ref_emitter, train, chain=chain)
    expected = 0.25 * train.n_pulses
    assert abs(len(tags) - expected) < 3.5 * math.sqrt(expected)
    assert summary.leakage_tags == len(tags)
    # leakage hugs the pulse: Exp(63 ps) after each clock edge
    offsets = tags.time_ps % 1_000_000
    assert np.quantile(offsets, 0.99) < 1_000  # ps


def test_blinking_reduces_brightness():
    blink = BlinkingModel(rate_on_to_off=40_000.0, rate_off_to_on=60_000.0)
    dim = EmitterModel(blinking=blink)
    steady = EmitterModel()
    train = PulseTrainConfig(n_pulses=300_000, rng_seed=15)
    _, dim_sum = simulate(dim, train, chain=NO_NOISE)
    _, steady_sum = simulate(steady, train, chain=NO_NOISE)
    ratio = dim_sum.emitted_total / steady_sum.emitted_total
    assert 0.58 < ratio < 0.62  # duty factor 0.6, telegraph-correlated noise


def test_poisson_source_counts():
    train = PulseTrainConfig(n_pulses=100_000, rng_seed=71)
    tags = simulate_poisson_light(0.8, train, NO_NOISE)
    expected = 0.8 * train.n_pulses
    assert abs(len(tags) - expected) < 3.5 * math.sqrt(expected)
    assert np.array_equal(
        tags.time_ps, simulate_poisson_light(0.8, train, NO_NOISE).time_ps
    )
    with pytest.raises(ConfigError):
        simulate_poisson_light(0.0, train)


def test_batch_size_validation(ref_emitter, short_train):
    with pytest.raises(ConfigError):
        simulate(ref_emitter, short_train, batch_size=0)


def test_chain_validation():
    with pytest.raises(ConfigError):
        DetectionChain(efficiency=1.2)
    with pytest.raises(ConfigError):
        DetectionChain(splitter_ratio=-0.1)
    with pytest.raises(ConfigError):
        DetectionChain(jitter_sigma=-1.0)
    with pytest.raises(ConfigError):
        DetectionChain(dark_rate=-5.0)
    with pytest.raises(ConfigError):
        DetectionChain(leakage_width=0.0)
    with pytest.raises(ConfigError):
        DetectionChain(dead_time=-1.0)


def test_tagstream_helpers():
    ts = TagStream.from_arrays([500, 100, 300], [1, 0, 0])
    assert ts.time_ps.tolist() == [100, 300, 500]
    assert ts.channel.tolist() == [0, 0, 1]
    assert ts.channel_times(0).tolist() == [100, 300]
    assert ts.channel_times(1).tolist() == [500]
    assert len(PhotonEvents.empty()) == 0
