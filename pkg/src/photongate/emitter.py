"""Pulsed emitter model: biexponential decay, power scaling, brightness.

The emitter produces at most one exciton photon and (at sufficient drive)
one preceding biexciton photon per excitation pulse.  The ensemble arrival
density after a pulse is the normalized two-component mixture

    intensity(t) = beta * exp(-t/tau_bx)/tau_bx + (1-beta) * exp(-t/tau_x)/tau_x

where ``beta`` is the biexciton fraction of the total emission at the chosen
drive power.  All times are in nanoseconds; drive powers are dimensionless
ratios to the saturation power.

Power scaling uses a Poisson excitation picture: the number of excitations
per pulse is Poisson with mean equal to the normalized power, an exciton
photon is emitted whenever at least one excitation lands, and a biexciton
photon is emitted with a fixed quantum yield whenever at least two land.
The yield is calibrated once so that ``beta(p_ref) == beta_ref``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "BlinkingModel",
    "EmitterModel",
    "PulseTrainConfig",
    "beta_at_power",
    "biexciton_yield",
    "brightness",
    "cascade_probabilities",
    "intensity",
]


@dataclass(frozen=True)
class BlinkingModel:
    """Two-state telegraph intermittency of the emitter.

    Rates are in 1/s.  While "off", emission probabilities are scaled by
    ``off_brightness`` (0 = fully dark).
    """

    rate_on_to_off: float
    rate_off_to_on: float
    off_brightness: float = 0.0

    def __post_init__(self):
        if self.rate_on_to_off < 0 or self.rate_off_to_on < 0:
            raise ConfigError("blinking rates must be >= 0")
        if not 0.0 <= self.off_brightness <= 1.0:
            raise ConfigError("off_brightness must lie in [0, 1]")

    @property
    def on_probability(self) -> float:
        """Stationary probability of the bright state."""
        total = self.rate_on_to_off + self.rate_off_to_on
        if total == 0.0:
            return 1.0
        return self.rate_off_to_on / total

    @property
    def duty_factor(self) -> float:
        """Mean emission-probability multiplier in the stationary state."""
        p_on = self.on_probability
        return p_on + (1.0 - p_on) * self.off_brightness


@dataclass(frozen=True)
class EmitterModel:
    """Static emitter parameters.

    tau_bx / tau_x   fast (biexciton) and slow (exciton) lifetimes, ns
    beta_ref         biexciton fraction of total emission at power p_ref
    p_ref            normalized power at which beta_ref was measured
    sat_power_scale  brightness asymptote: mean photons per pulse at full
                     saturation (dimensionless count)
    """

    tau_bx: float = 2.0
    tau_x: float = 138.0
    beta_ref: float = 0.04
    p_ref: float = 5.8
    sat_power_scale: float = 1.0
    blinking: BlinkingModel | None = None

    def __post_init__(self):
        if self.tau_bx <= 0 or self.tau_x <= 0:
            raise ConfigError("lifetimes must be positive")
        if self.tau_bx >= self.tau_x:
            raise ConfigError("tau_bx must be shorter than tau_x")
        if not 0.0 <= self.beta_ref < 0.5:
            raise ConfigError("beta_ref must lie in [0, 0.5)")
        if self.p_ref <= 0:
            raise ConfigError("p_ref must be positive")
        if self.sat_power_scale <= 0:
            raise ConfigError("sat_power_scale must be positive")


@dataclass(frozen=True)
class PulseTrainConfig:
    """Excitation pulse train: period (ns), pulse count, power, RNG seed."""

    repetition_period: float = 1000.0
    n_pulses: int = 1
    power_ratio: float = 5.8
    rng_seed: int = 0

    def __post_init__(self):
        if self.repetition_period <= 0:
            raise ConfigError("repetition_period must be positive")
        if self.n_pulses < 1:
            raise ConfigError("n_pulses must be >= 1")
        if self.power_ratio <= 0:
            raise ConfigError("power_ratio must be positive")
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigError("rng_seed must fit in 64 bits")

    @property
    def duration(self) -> float:
        """Total run duration in ns."""
        return self.repetition_period * self.n_pulses


def _p_at_least_one(n_mean: float) -> float:
    return -math.expm1(-n_mean)


def _p_at_least_two(n_mean: float) -> float:
    return -math.expm1(-n_mean) - n_mean * math.exp(-n_mean)


def biexciton_yield(model: EmitterModel) -> float:
    """Biexciton quantum yield implied by the (beta_ref, p_ref) anchor.

    Solving beta(p_ref) = beta_ref for the yield gives

        yield = beta_ref/(1-beta_ref) * P(N>=1)/P(N>=2)   at  N ~ Poisson(p_ref)
    """
    if model.beta_ref == 0.0:
        return 0.0
    y = (model.beta_ref / (1.0 - model.beta_ref)) * (
        _p_at_least_one(model.p_ref) / _p_at_least_two(model.p_ref)
    )
    if y > 1.0:
        raise ConfigError(
            f"beta_ref={model.beta_ref} at p_ref={model.p_ref} requires an "
            f"unphysical biexciton yield {y:.3f} > 1"
        )
    return y


def beta_at_power(model: EmitterModel, power: float) -> float:
    """Biexciton fraction of total emission at the given normalized power.

    Monotone non-decreasing in power, -> 0 as power -> 0.
    """
    if power <= 0:
        raise ConfigError("power must be positive")
    y = biexciton_yield(model)
    if y == 0.0:
        return 0.0
    p_bx = y * _p_at_least_two(power)
    return p_bx / (p_bx + _p_at_least_one(power))


def intensity(model: EmitterModel, power: float, t):
    """Normalized ensemble arrival density (1/ns) at time t after a pulse.

    Accepts a scalar or array ``t``; t must be >= 0.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("intensity is defined for t >= 0 only")
    beta = beta_at_power(model, power)
    out = beta * np.exp(-t_arr / model.tau_bx) / model.tau_bx + (
        1.0 - beta
    ) * np.exp(-t_arr / model.tau_x) / model.tau_x
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(out)
    return out


def brightness(model: EmitterModel, power: float) -> float:
    """Mean emitted photons per pulse (pre-detection), saturating law.

    brightness(P) = sat_power_scale * (1 - exp(-P)) with P normalized to
    the saturation power.
    """
    if power <= 0:
        raise ConfigError("power must be positive")
    return model.sat_power_scale * -math.expm1(-power)


def cascade_probabilities(model: EmitterModel, power: float) -> tuple[float, float]:
    """Per-pulse probabilities (p_cascade, p_exciton_only).

    A cascade pulse emits one biexciton photon followed by one exciton
    photon; an exciton-only pulse emits a single exciton photon.  The split
    is chosen so the expected photon count equals ``brightness(power)`` and
    the biexciton share of all photons equals ``beta_at_power(power)``.
    """
    beta = beta_at_power(model, power)
    b = brightness(model, power)
    p_casc = beta * b
    p_solo = (1.0 - 2.0 * beta) * b
    if p_casc + p_solo > 1.0:
        raise ConfigError(
            f"brightness {b:.3f} at power {power:g} exceeds the one-cascade-"
            "per-pulse capacity; reduce sat_power_scale"
        )
    return p_casc, p_solo
