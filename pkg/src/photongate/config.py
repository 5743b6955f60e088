"""JSON run configuration: schema validation and typed loading.

A config file is a single JSON object with optional sections ``emitter``,
``train``, ``chain``, ``waveform``, ``sweep`` and ``analysis``; every
omitted field falls back to the model defaults.  Unknown keys anywhere are
rejected (typos must not silently change a run).  A handful of named
recipes bundle complete sweep configurations.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, replace

import jsonschema

from .emitter import BlinkingModel, EmitterModel, PulseTrainConfig
from .errors import ConfigError
from .mc_engine import DetectionChain
from .modulation import KINDS, ModulationWaveform

__all__ = [
    "AnalysisOptions",
    "RunConfig",
    "SweepSpec",
    "get_recipe",
    "list_recipes",
    "load_config",
    "parse_config",
]

_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "emitter": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tau_bx": _NUM,
                "tau_x": _NUM,
                "beta_ref": _NUM,
                "p_ref": _NUM,
                "sat_power_scale": _NUM,
                "blinking": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "rate_on_to_off": _NUM,
                        "rate_off_to_on": _NUM,
                        "off_brightness": _NUM,
                    },
                    "required": ["rate_on_to_off", "rate_off_to_on"],
                },
            },
        },
        "train": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "repetition_period": _NUM,
                "n_pulses": _POS_INT,
                "power_ratio": _NUM,
                "rng_seed": {"type": "integer", "minimum": 0},
            },
        },
        "chain": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "efficiency": _NUM,
                "splitter_ratio": _NUM,
                "jitter_sigma": _NUM,
                "dark_rate": _NUM,
                "leakage_per_pulse": _NUM,
                "leakage_width": _NUM,
                "dead_time": _NUM,
            },
        },
        "waveform": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": list(KINDS)},
                "t0": _NUM,
                "rise_time": _NUM,
                "frequency": _NUM,
                "period": _NUM,
                "duty": _NUM,
                "floor": _NUM,
            },
            "required": ["kind"],
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["offset", "power"]},
                "offsets": {"type": "array", "items": _NUM, "minItems": 1},
                "powers": {"type": "array", "items": _NUM, "minItems": 1},
                "edge": {"enum": ["heaviside", "smoothed"]},
                "rise_time": _NUM,
                "floor": _NUM,
            },
            "required": ["mode"],
        },
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_side_peaks": _POS_INT,
                "tail_start": _NUM,
                "waveform_bin_width": _NUM,
                "hbt_bin_width": _NUM,
                "window": {"type": ["number", "null"]},
            },
        },
        "batch_size": _POS_INT,
    },
}

# parameters each waveform kind accepts beyond "kind" (True = required)
_WAVEFORM_PARAMS = {
    "none": {},
    "heaviside_step": {"t0": True},
    "smoothed_step": {"t0": True, "rise_time": False, "floor": False},
    "biased_sine": {"frequency": True, "t0": False, "floor": False},
    "biased_square": {"period": True, "t0": False, "duty": False, "floor": False},
}


@dataclass(frozen=True)
class AnalysisOptions:
    n_side_peaks: int = 10
    tail_start: float = 100.0
    waveform_bin_width: float = 1.0
    hbt_bin_width: float = 2.0
    window: float | None = None  # None: one full period per peak


@dataclass(frozen=True)
class SweepSpec:
    mode: str  # "offset" or "power"
    offsets: tuple = ()
    powers: tuple = ()
    edge: str = "smoothed"
    rise_time: float = 50.0
    floor: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    emitter: EmitterModel
    train: PulseTrainConfig
    chain: DetectionChain
    waveform: ModulationWaveform | None
    sweep: SweepSpec | None
    analysis: AnalysisOptions
    batch_size: int | None
    raw: dict = field(repr=False, default_factory=dict)

    def meta_json(self) -> str:
        """Canonical one-line JSON of the effective config, for embedding
        in output-file metadata so any result can be re-run."""
        return json.dumps(self.raw, sort_keys=True, separators=(", ", ": "))


def build_waveform(cfg: dict) -> ModulationWaveform:
    kind = cfg["kind"]
    params = _WAVEFORM_PARAMS[kind]
    given = {k: v for k, v in cfg.items() if k != "kind"}
    for key in given:
        if key not in params:
            raise ConfigError(
                f"waveform parameter {key!r} does not apply to kind {kind!r}"
            )
    for key, required in params.items():
        if required and key not in given:
            raise ConfigError(f"waveform kind {kind!r} requires parameter {key!r}")
    return ModulationWaveform(kind=kind, **given)


def _validate_schema(data: dict) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: e.json_path)
    if errors:
        err = errors[0]
        raise ConfigError(f"config invalid at {err.json_path}: {err.message}")


def parse_config(data: dict) -> RunConfig:
    """Validate a config dict and build the typed run description."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    _validate_schema(data)

    emitter_cfg = dict(data.get("emitter", {}))
    blinking = emitter_cfg.pop("blinking", None)
    if blinking is not None:
        emitter_cfg["blinking"] = BlinkingModel(**blinking)
    emitter = EmitterModel(**emitter_cfg)
    train = PulseTrainConfig(**data.get("train", {}))
    chain = DetectionChain(**data.get("chain", {}))
    waveform = build_waveform(data["waveform"]) if "waveform" in data else None

    sweep = None
    if "sweep" in data:
        s = data["sweep"]
        mode = s["mode"]
        if mode == "offset" and "offsets" not in s:
            raise ConfigError("offset sweep requires 'offsets'")
        if mode == "power" and "powers" not in s:
            raise ConfigError("power sweep requires 'powers'")
        sweep = SweepSpec(
            mode=mode,
            offsets=tuple(s.get("offsets", ())),
            powers=tuple(s.get("powers", ())),
            edge=s.get("edge", "smoothed"),
            rise_time=s.get("rise_time", 50.0),
            floor=s.get("floor", 0.0),
        )

    analysis = AnalysisOptions(**data.get("analysis", {}))
    return RunConfig(
        emitter=emitter,
        train=train,
        chain=chain,
        waveform=waveform,
        sweep=sweep,
        analysis=analysis,
        batch_size=data.get("batch_size"),
        raw=copy.deepcopy(data),
    )


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return parse_config(data)


def with_overrides(
    cfg: RunConfig, *, seed: int | None = None, n_pulses: int | None = None
) -> RunConfig:
    """Apply command-line overrides, keeping ``raw`` in sync so embedded
    metadata always describes the run that actually happened."""
    train = cfg.train
    raw = copy.deepcopy(cfg.raw)
    raw_train = raw.setdefault("train", {})
    if seed is not None:
        train = replace(train, rng_seed=seed)
        raw_train["rng_seed"] = seed
    if n_pulses is not None:
        train = replace(train, n_pulses=n_pulses)
        raw_train["n_pulses"] = n_pulses
    return replace(cfg, train=train, raw=raw)


# ---------------------------------------------------------------------------
# Bundled recipes: complete sweep configs for the standard study plots.

RECIPES: dict[str, dict] = {
    # gate-offset scan at the reference power, smoothed 50 ns edge; the
    # t0 = -50 row has the gate fully open before the pulse (ungated
    # reference)
    "offset_scan": {
        "train": {"n_pulses": 1_000_000, "power_ratio": 5.8, "rng_seed": 20260823},
        "sweep": {
            "mode": "offset",
            "offsets": [-50, 0, 5, 10, 16, 30, 45],
            "edge": "smoothed",
            "rise_time": 50.0,
        },
    },
    # same scan with an ideal sharp edge
    "offset_scan_sharp": {
        "train": {"n_pulses": 1_000_000, "power_ratio": 5.8, "rng_seed": 20260823},
        "sweep": {
            "mode": "offset",
            "offsets": [0, 5, 10, 16, 30, 45],
            "edge": "heaviside",
        },
    },
    # power scan with the gate fixed 45 ns after the pulse
    "power_scan_gated": {
        "train": {"n_pulses": 4_000_000, "rng_seed": 20260824},
        "chain": {"dark_rate": 180.0},
        "waveform": {"kind": "heaviside_step", "t0": 45.0},
        "sweep": {"mode": "power", "powers": [1.4, 3.0, 5.0, 6.7]},
    },
    # ungated power scan (contrast case for power_scan_gated)
    "power_scan_ungated": {
        "train": {"n_pulses": 4_000_000, "rng_seed": 20260824},
        "chain": {"dark_rate": 180.0},
        "sweep": {"mode": "power", "powers": [1.4, 3.0, 5.0, 6.7]},
    },
}


def list_recipes() -> list[str]:
    return sorted(RECIPES)


def get_recipe(name: str) -> dict:
    try:
        return copy.deepcopy(RECIPES[name])
    except KeyError:
        raise ConfigError(
            f"unknown recipe {name!r}; available: {', '.join(list_recipes())}"
        ) from None
