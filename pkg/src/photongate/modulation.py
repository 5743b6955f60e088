"""Temporal gating waveforms and the analytic effect of gating.

A waveform is a transmission function m(t) in [0, 1] applied to the
emission stream (t in ns, measured from each excitation pulse; m is
defined for all real t and is shifted rigidly by its offset parameter).

Supported kinds:

* ``none``            m = 1 everywhere (ungated)
* ``heaviside_step``  m = 0 before t0, 1 from t0 on (ideal edge)
* ``smoothed_step``   raised-cosine ramp from ``floor`` to 1 over
                      [t0, t0 + rise_time]; t0 is where the ramp leaves
                      the floor
* ``biased_sine``     sinusoid between ``floor`` and 1, period 1/frequency
* ``biased_square``   square wave between 1 (open, fraction ``duty``) and
                      ``floor``

``survival_fraction`` and ``gated_beta`` integrate m(t) against the
emitter's arrival density by adaptive quadrature, so they hold for any
waveform; step gates additionally have simple closed forms used as test
oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .emitter import EmitterModel, beta_at_power
from .errors import ConfigError, QuadratureError

__all__ = [
    "ModulationWaveform",
    "gated_beta",
    "survival_fraction",
    "transmission",
]

KINDS = ("none", "heaviside_step", "smoothed_step", "biased_sine", "biased_square")

# Quadrature acceptance threshold on the reported absolute error of a
# single gated-exponential integral (integrand values are <= 1).
_QUAD_TOL = 1e-7

# Periodic waveforms contribute ~2 quadrature anchors per cycle; refuse
# to enumerate absurdly fast modulation instead of stalling in quad().
_MAX_BREAKPOINTS = 20_000


@dataclass(frozen=True)
class ModulationWaveform:
    """Transmission waveform m(t).  Use the kind-specific constructors."""

    kind: str
    t0: float = 0.0
    rise_time: float = 50.0
    frequency: float = 0.01  # 1/ns, biased_sine only
    period: float = 200.0  # ns, biased_square only
    duty: float = 0.5
    floor: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown waveform kind {self.kind!r}; expected one of {KINDS}")
        if not 0.0 <= self.floor <= 1.0:
            raise ConfigError("floor must lie in [0, 1]")
        if self.kind == "smoothed_step" and self.rise_time <= 0:
            raise ConfigError("rise_time must be positive")
        if self.kind == "biased_sine" and self.frequency <= 0:
            raise ConfigError("frequency must be positive")
        if self.kind == "biased_square":
            if self.period <= 0:
                raise ConfigError("period must be positive")
            if not 0.0 < self.duty < 1.0:
                raise ConfigError("duty must lie in (0, 1)")

    @staticmethod
    def none() -> "ModulationWaveform":
        return ModulationWaveform(kind="none")

    @staticmethod
    def heaviside_step(t0: float) -> "ModulationWaveform":
        return ModulationWaveform(kind="heaviside_step", t0=t0)

    @staticmethod
    def smoothed_step(
        t0: float, rise_time: float = 50.0, floor: float = 0.0
    ) -> "ModulationWaveform":
        return ModulationWaveform(
            kind="smoothed_step", t0=t0, rise_time=rise_time, floor=floor
        )

    @staticmethod
    def biased_sine(
        frequency: float, t0: float = 0.0, floor: float = 0.1
    ) -> "ModulationWaveform":
        return ModulationWaveform(kind="biased_sine", t0=t0, frequency=frequency, floor=floor)

    @staticmethod
    def biased_square(
        period: float, t0: float = 0.0, duty: float = 0.5, floor: float = 0.1
    ) -> "ModulationWaveform":
        return ModulationWaveform(
            kind="biased_square", t0=t0, period=period, duty=duty, floor=floor
        )

    def flat_tail(self) -> tuple[float, float] | None:
        """(t_flat, value) if m is constant for all t >= t_flat, else None."""
        if self.kind == "none":
            return (0.0, 1.0)
        if self.kind == "heaviside_step":
            return (max(self.t0, 0.0), 1.0)
        if self.kind == "smoothed_step":
            return (max(self.t0 + self.rise_time, 0.0), 1.0)
        return None

    @staticmethod
    def _check_cycle_count(lo: float, hi: float, period: float) -> None:
        if (hi - lo) / period > _MAX_BREAKPOINTS / 2:
            raise ConfigError(
                f"waveform period {period:g} ns is too short to integrate over "
                f"a {hi - lo:g} ns range; use a slower modulation"
            )

    def breakpoints(self, lo: float, hi: float) -> list[float]:
        """Kink/discontinuity locations of m within (lo, hi)."""
        if self.kind == "heaviside_step":
            pts = [self.t0]
        elif self.kind == "smoothed_step":
            pts = [self.t0, self.t0 + self.rise_time]
        elif self.kind == "biased_square":
            p = self.period
            self._check_cycle_count(lo, hi, p)
            pts = []
            k = math.floor((lo - self.t0) / p)
            edge = self.t0 + k * p
            while edge < hi:
                pts.extend([edge, edge + self.duty * p])
                edge += p
        elif self.kind == "biased_sine":
            # smooth, but anchor quadrature at period boundaries
            p = 1.0 / self.frequency
            self._check_cycle_count(lo, hi, p)
            k = math.floor((lo - self.t0) / p)
            pts = []
            edge = self.t0 + k * p
            while edge < hi:
                pts.append(edge)
                edge += p
        else:
            pts = []
        return [t for t in pts if lo < t < hi]


def transmission(w: ModulationWaveform, t):
    """Evaluate m(t) for scalar or array t (any real t)."""
    t_arr = np.asarray(t, dtype=float)
    if w.kind == "none":
        out = np.ones_like(t_arr)
    elif w.kind == "heaviside_step":
        out = np.where(t_arr < w.t0, 0.0, 1.0)
    elif w.kind == "smoothed_step":
        x = (t_arr - w.t0) / w.rise_time
        ramp = w.floor + (1.0 - w.floor) * 0.5 * (1.0 - np.cos(np.pi * np.clip(x, 0.0, 1.0)))
        out = np.where(x <= 0.0, w.floor, np.where(x >= 1.0, 1.0, ramp))
    elif w.kind == "biased_sine":
        phase = 2.0 * np.pi * w.frequency * (t_arr - w.t0)
        out = w.floor + (1.0 - w.floor) * 0.5 * (1.0 - np.cos(phase))
    elif w.kind == "biased_square":
        pos = np.mod(t_arr - w.t0, w.period)
        out = np.where(pos < w.duty * w.period, 1.0, w.floor)
    else:  # pragma: no cover - guarded by the constructor
        raise ConfigError(f"unknown waveform kind {w.kind!r}")
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(out)
    return out


def _gated_exponential(w: ModulationWaveform, tau: float) -> float:
    """integral_0^inf m(t) * exp(-t/tau)/tau dt  via adaptive quadrature."""

    def integrand(t):
        return transmission(w, t) * math.exp(-t / tau) / tau

    flat = w.flat_tail()
    if flat is not None:
        t_flat, value = flat
        if t_flat == 0.0:
            return value
        pts = w.breakpoints(0.0, t_flat)
        val, err = integrate.quad(
            integrand, 0.0, t_flat, points=pts, limit=max(100, 10 * (len(pts) + 1))
        )
        tail = value * math.exp(-t_flat / tau)
        total_err = err
    else:
        upper = 50.0 * tau
        pts = w.breakpoints(0.0, upper)
        val, err = integrate.quad(
            integrand, 0.0, upper, points=pts, limit=max(200, 10 * (len(pts) + 1))
        )
        tail = 0.0  # m <= 1, so the discarded mass is < exp(-50)
        total_err = err + math.exp(-50.0)
    if total_err > _QUAD_TOL:
        raise QuadratureError(
            f"gated-exponential quadrature did not converge (tau={tau:g} ns)",
            achieved=total_err,
        )
    return val + tail


def survival_fraction(model: EmitterModel, power: float, w: ModulationWaveform) -> float:
    """Fraction of emitted photons that pass the gate.

    Equal to integral m(t)*intensity(t) dt; for a Heaviside step at t0 this
    reduces to beta*exp(-t0/tau_bx) + (1-beta)*exp(-t0/tau_x).
    """
    beta = beta_at_power(model, power)
    s = 0.0
    if beta > 0.0:
        s += beta * _gated_exponential(w, model.tau_bx)
    s += (1.0 - beta) * _gated_exponential(w, model.tau_x)
    return s


def gated_beta(model: EmitterModel, power: float, w: ModulationWaveform) -> float:
    """Biexciton fraction of the photons that survive the gate.

    With w = none this equals beta_at_power; a step gate at t0 gives the
    closed form
        beta' = beta e^(-t0/tau_bx) / (beta e^(-t0/tau_bx) + (1-beta) e^(-t0/tau_x)).
    """
    beta = beta_at_power(model, power)
    slow = (1.0 - beta) * _gated_exponential(w, model.tau_x)
    if beta == 0.0:
        num = 0.0
    else:
        num = beta * _gated_exponential(w, model.tau_bx)
    den = num + slow
    if den <= 0.0:
        raise ValueError("gate transmits no light; gated beta is undefined")
    return num / den
