"""JSON config parsing, schema rejection, recipes, CLI overrides."""

import json

import pytest

from photongate.config import (
    AnalysisOptions,
    RunConfig,
    get_recipe,
    list_recipes,
    load_config,
    parse_config,
    with_overrides,
)
from photongate.emitter import EmitterModel, PulseTrainConfig
from photongate.errors import ConfigError
from photongate.mc_engine import DetectionChain


def test_empty_config_gives_defaults():
    cfg = parse_config({})
    assert cfg.emitter == EmitterModel()
    assert cfg.train == PulseTrainConfig()
    assert cfg.chain == DetectionChain()
    assert cfg.waveform is None
    assert cfg.sweep is None
    assert cfg.analysis == AnalysisOptions()
    assert cfg.batch_size is None


def test_full_config_parses():
    cfg = parse_config(
        {
            "emitter": {
                "tau_bx": 2.0,
                "tau_x": 138.0,
                "beta_ref": 0.04,
                "blinking": {"rate_on_to_off": 100.0, "rate_off_to_on": 900.0},
            },
            "train": {"n_pulses": 5000, "power_ratio": 3.0, "rng_seed": 12},
            "chain": {"dark_rate": 180.0, "dead_time": 0.0},
            "waveform": {"kind": "smoothed_step", "t0": 16.0, "rise_time": 40.0},
            "analysis": {"n_side_peaks": 5, "window": 500.0},
            "batch_size": 4096,
        }
    )
    assert cfg.emitter.blinking.rate_off_to_on == 900.0
    assert cfg.train.n_pulses == 5000
    assert cfg.chain.dark_rate == 180.0
    assert cfg.waveform.kind == "smoothed_step"
    assert cfg.waveform.rise_time == 40.0
    assert cfg.analysis.window == 500.0
    assert cfg.batch_size == 4096


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match=r"\$"):
        parse_config({"emiter": {}})
    with pytest.raises(ConfigError, match="train"):
        parse_config({"train": {"pulses": 10}})
    with pytest.raises(ConfigError):
        parse_config({"train": {"n_pulses": "many"}})
    with pytest.raises(ConfigError):
        parse_config([1, 2, 3])


def test_waveform_param_validation():
    with pytest.raises(ConfigError, match="requires"):
        parse_config({"waveform": {"kind": "heaviside_step"}})
    with pytest.raises(ConfigError, match="does not apply"):
        parse_config({"waveform": {"kind": "heaviside_step", "t0": 45.0, "duty": 0.5}})
    with pytest.raises(ConfigError, match="does not apply"):
        parse_config({"waveform": {"kind": "none", "t0": 0.0}})
    cfg = parse_config({"waveform": {"kind": "biased_square", "period": 200.0}})
    assert cfg.waveform.duty == 0.5  # defaults fill in


def test_sweep_mode_requirements():
    with pytest.raises(ConfigError, match="offsets"):
        parse_config({"sweep": {"mode": "offset"}})
    with pytest.raises(ConfigError, match="powers"):
        parse_config({"sweep": {"mode": "power"}})
    cfg = parse_config({"sweep": {"mode": "offset", "offsets": [0, 45]}})
    assert cfg.sweep.offsets == (0, 45)
    assert cfg.sweep.edge == "smoothed"


def test_domain_errors_surface_as_config_errors():
    # schema-valid but physically invalid values fail in the dataclasses
    with pytest.raises(ConfigError, match="tau_bx"):
        parse_config({"emitter": {"tau_bx": 500.0}})
    with pytest.raises(ConfigError, match="efficiency"):
        parse_config({"chain": {"efficiency": 2.0}})


def test_load_config_reports_json_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"train": {"n_pulses": 5,,}}')
    with pytest.raises(ConfigError, match=r":1:"):
        load_config(p)
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"train": {"n_pulses": 5}}))
    assert load_config(good).train.n_pulses == 5


def test_recipes_all_parse():
    names = list_recipes()
    assert names == [
        "offset_scan",
        "offset_scan_sharp",
        "power_scan_gated",
        "power_scan_ungated",
    ]
    for name in names:
        cfg = parse_config(get_recipe(name))
        assert isinstance(cfg, RunConfig)
        assert cfg.sweep is not None
    assert parse_config(get_recipe("power_scan_gated")).waveform.t0 == 45.0


def test_get_recipe_returns_a_copy():
    a = get_recipe("offset_scan")
    a["train"]["rng_seed"] = 999
    assert get_recipe("offset_scan")["train"]["rng_seed"] == 20260823
    with pytest.raises(ConfigError, match="unknown recipe"):
        get_recipe("no_such_scan")


def test_with_overrides_keeps_raw_in_sync():
    cfg = parse_config(get_recipe("offset_scan"))
    out = with_overrides(cfg, seed=5, n_pulses=1000)
    assert out.train.rng_seed == 5
    assert out.train.n_pulses == 1000
    assert out.raw["train"]["rng_seed"] == 5
    assert out.raw["train"]["n_pulses"] == 1000
    # original untouched; metadata reparses to the same run
    assert cfg.train.rng_seed == 20260823
    reparsed = parse_config(json.loads(out.meta_json()))
    assert reparsed.train == out.train
