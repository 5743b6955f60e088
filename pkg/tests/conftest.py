"""Shared fixtures: the reference emitter and small pulse trains."""

import numpy as np
import pytest

from photongate.emitter import EmitterModel, PulseTrainConfig
from photongate.mc_engine import TagStream


@pytest.fixture
def ref_emitter():
    """Room-temperature dot: 2 ns biexciton, 138 ns exciton, beta=0.04 at P=5.8."""
    return EmitterModel()


@pytest.fixture
def short_train():
    return PulseTrainConfig(n_pulses=50_000, rng_seed=11)


def make_tags(time_ps, channel):
    """TagStream from plain lists (sorted for the caller)."""
    return TagStream.from_arrays(
        np.asarray(time_ps, dtype=np.int64), np.asarray(channel, dtype=np.uint8)
    )
