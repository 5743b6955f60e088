"""photongate: temporal purification of pulsed single-photon streams.

Simulates a biexponential (exciton/biexciton) emitter driven by a pulse
train, applies time-gating waveforms, generates detector time tags, and
estimates purity metrics (biexciton fraction, pulsed g2(0), gate
survival) with analytic counterparts for every estimator.
"""

from .emitter import (
    BlinkingModel,
    EmitterModel,
    PulseTrainConfig,
    beta_at_power,
    biexciton_yield,
    brightness,
    cascade_probabilities,
    intensity,
)
from .errors import (
    ConfigError,
    DataFormatError,
    InsufficientDataError,
    MissingChannelError,
    PhotonGateError,
    QuadratureError,
    UnreachableTargetError,
)
from .modulation import (
    ModulationWaveform,
    gated_beta,
    survival_fraction,
    transmission,
)
from .mc_engine import (
    DetectionChain,
    PhotonEvents,
    RunSummary,
    TagStream,
    simulate,
    simulate_poisson_light,
)
from .correlator import (
    G2Result,
    HbtHistogram,
    WaveformHistogram,
    g2_zero,
    hbt_correlate,
    waveform_histogram,
)
from .estimators import (
    BiexpDecomposition,
    TailFit,
    biexciton_fraction,
    g2_from_beta,
    tail_fit,
)
from .sweeper import (
    SweepRow,
    min_offset_for_target,
    predicted_g2,
    sweep_offset,
    sweep_power,
)
from .config import RunConfig, get_recipe, list_recipes, load_config, parse_config
from .tagio import read_qtt1, write_qtt1

__version__ = "0.1.0"

__all__ = [
    "BiexpDecomposition",
    "BlinkingModel",
    "ConfigError",
    "DataFormatError",
    "DetectionChain",
    "EmitterModel",
    "G2Result",
    "HbtHistogram",
    "InsufficientDataError",
    "MissingChannelError",
    "ModulationWaveform",
    "PhotonEvents",
    "PhotonGateError",
    "PulseTrainConfig",
    "QuadratureError",
    "RunConfig",
    "RunSummary",
    "SweepRow",
    "TagStream",
    "TailFit",
    "UnreachableTargetError",
    "WaveformHistogram",
    "beta_at_power",
    "biexciton_fraction",
    "biexciton_yield",
    "brightness",
    "cascade_probabilities",
    "g2_from_beta",
    "g2_zero",
    "gated_beta",
    "get_recipe",
    "hbt_correlate",
    "intensity",
    "list_recipes",
    "load_config",
    "min_offset_for_target",
    "parse_config",
    "predicted_g2",
    "read_qtt1",
    "simulate",
    "simulate_poisson_light",
    "survival_fraction",
    "sweep_offset",
    "sweep_power",
    "tail_fit",
    "transmission",
    "waveform_histogram",
    "write_qtt1",
]
