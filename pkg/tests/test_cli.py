"""End-to-end CLI runs: simulate -> analyze -> sweep, plus failure exits."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from photongate.cli import main
from photongate.tagio import read_csv_table, read_qtt1


@pytest.fixture
def runner():
    return CliRunner()


def write_config(path, data):
    path.write_text(json.dumps(data))
    return str(path)


SMALL_RUN = {
    "train": {"n_pulses": 200_000, "power_ratio": 5.8, "rng_seed": 4242},
    "chain": {"dark_rate": 0.0, "leakage_per_pulse": 0.0},
}


def test_simulate_then_analyze(tmp_path, runner):
    cfg = write_config(tmp_path / "run.json", SMALL_RUN)
    sim_dir = tmp_path / "sim"
    res = runner.invoke(main, ["simulate", "--config", cfg, "--out", str(sim_dir)])
    assert res.exit_code == 0, res.output
    assert (sim_dir / "tags.qtt1").exists()
    summary = json.loads((sim_dir / "summary.json").read_text())
    assert summary["n_tags"] == len(read_qtt1(sim_dir / "tags.qtt1"))
    assert summary["config"]["train"]["rng_seed"] == 4242
    assert summary["summary"]["emitted_total"] > 0

    ana_dir = tmp_path / "ana"
    res = runner.invoke(
        main, ["analyze", str(sim_dir / "tags.qtt1"), "--out", str(ana_dir)]
    )
    assert res.exit_code == 0, res.output
    for name in ("waveform.csv", "decomposition.csv", "hbt.csv", "summary.json",
                 "waveform.png", "hbt.png"):
        assert (ana_dir / name).exists(), name
    payload = json.loads((ana_dir / "summary.json").read_text())
    assert payload["beta"] is not None and payload["g2"] is not None
    # darkless ungated run at reference power, judged by its own error bars
    beta = payload["beta"]
    assert abs(beta["beta_hat"] - 0.04) < 5 * beta["beta_sigma"]
    g2 = payload["g2"]
    assert abs(g2["g2"] - 0.08) < 5 * g2["sigma"]
    assert payload["notes"] == []
    cols, meta = read_csv_table(ana_dir / "waveform.csv")
    assert len(cols["time_ns"]) == 1000
    assert meta["command"] == "analyze"


def test_simulate_deterministic_bytes(tmp_path, runner):
    cfg = write_config(tmp_path / "run.json", SMALL_RUN)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        res = runner.invoke(main, ["simulate", "--config", cfg, "--out", str(out)])
        assert res.exit_code == 0, res.output
    assert (out_a / "tags.qtt1").read_bytes() == (out_b / "tags.qtt1").read_bytes()


def test_simulate_seed_override(tmp_path, runner):
    cfg = write_config(tmp_path / "run.json", SMALL_RUN)
    out = tmp_path / "c"
    res = runner.invoke(
        main,
        ["simulate", "--config", cfg, "--out", str(out), "--seed", "1", "--pulses", "50000"],
    )
    assert res.exit_code == 0, res.output
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["train"]["rng_seed"] == 1
    assert summary["summary"]["n_pulses"] == 50_000


def test_simulate_rejects_sweep_config(tmp_path, runner):
    cfg = write_config(
        tmp_path / "sweep.json",
        {**SMALL_RUN, "sweep": {"mode": "offset", "offsets": [0]}},
    )
    res = runner.invoke(main, ["simulate", "--config", cfg, "--out", str(tmp_path / "x")])
    assert res.exit_code == 2
    assert "sweep" in res.output


def test_simulate_rejects_bad_schema(tmp_path, runner):
    cfg = write_config(tmp_path / "bad.json", {"train": {"bogus_key": 1}})
    res = runner.invoke(main, ["simulate", "--config", cfg, "--out", str(tmp_path / "x")])
    assert res.exit_code == 2
    assert "config invalid" in res.output


def test_analyze_rejects_corrupt_tagfile(tmp_path, runner):
    bad = tmp_path / "bad.qtt1"
    bad.write_bytes(b"NOPE" + b"\x00" * 12)
    res = runner.invoke(main, ["analyze", str(bad), "--out", str(tmp_path / "x")])
    assert res.exit_code == 1
    assert "magic" in res.output
    assert "offset" in res.output or "byte" in res.output


def test_analyze_sparse_stream_notes(tmp_path, runner):
    # too few tags for any estimate: exit 0 with explanatory notes
    from photongate.tagio import write_qtt1
    from conftest import make_tags

    tagfile = tmp_path / "sparse.qtt1"
    write_qtt1(tagfile, make_tags([1_000, 2_000, 3_000], [0, 0, 0]))
    out = tmp_path / "sparse"
    res = runner.invoke(
        main, ["analyze", str(tagfile), "--out", str(out), "--no-figures"]
    )
    assert res.exit_code == 0, res.output
    payload = json.loads((out / "summary.json").read_text())
    assert payload["beta"] is None and payload["g2"] is None
    assert len(payload["notes"]) == 2
    assert not (out / "waveform.png").exists()


def test_sweep_recipe_smoke(tmp_path, runner):
    out = tmp_path / "sw"
    res = runner.invoke(
        main,
        ["sweep", "--recipe", "offset_scan_sharp", "--out", str(out),
         "--pulses", "150000", "--seed", "77"],
    )
    assert res.exit_code == 0, res.output
    cols, meta = read_csv_table(out / "sweep.csv")
    assert meta["mode"] == "offset"
    assert meta["recipe"] == "offset_scan_sharp"
    assert "rng_seed" in meta["config"]
    assert (out / "sweep.png").exists()
    assert len(cols["t0_ns"]) == 6
    # simulated columns agree with their own analytic columns
    z_surv = np.abs(cols["survival_mc"] - cols["survival_analytic"]) / np.where(
        cols["survival_sigma"] > 0, cols["survival_sigma"], 1.0
    )
    assert np.nanmax(z_surv) < 4.5
    assert np.all(np.isfinite(cols["g2"]))


def test_sweep_requires_exactly_one_source(tmp_path, runner):
    res = runner.invoke(main, ["sweep", "--out", str(tmp_path / "x")])
    assert res.exit_code == 2
    cfg = write_config(tmp_path / "s.json", {"sweep": {"mode": "offset", "offsets": [0]}})
    res = runner.invoke(
        main,
        ["sweep", "--config", cfg, "--recipe", "offset_scan", "--out", str(tmp_path / "x")],
    )
    assert res.exit_code == 2
    res = runner.invoke(
        main, ["sweep", "--recipe", "not_a_recipe", "--out", str(tmp_path / "x")]
    )
    assert res.exit_code == 2
    assert "unknown recipe" in res.output


def test_sweep_config_without_sweep_section(tmp_path, runner):
    cfg = write_config(tmp_path / "nosweep.json", SMALL_RUN)
    res = runner.invoke(main, ["sweep", "--config", cfg, "--out", str(tmp_path / "x")])
    assert res.exit_code == 2
    assert "no 'sweep' section" in res.output


def test_waveform_sample(tmp_path, runner):
    out = tmp_path / "wf"
    res = runner.invoke(
        main,
        ["waveform", "sample", "--kind", "smoothed_step", "--t0", "16",
         "--rise-time", "50", "--out", str(out)],
    )
    assert res.exit_code == 0, res.output
    cols, meta = read_csv_table(out / "waveform_sample.csv")
    assert (out / "waveform_sample.png").exists()
    m = cols["transmission"]
    assert np.all((m >= 0) & (m <= 1))
    assert m[0] == 0.0 and m[-1] == 1.0
    assert json.loads(meta["waveform"])["kind"] == "smoothed_step"


def test_waveform_sample_rejects_wrong_params(tmp_path, runner):
    res = runner.invoke(
        main,
        ["waveform", "sample", "--kind", "heaviside_step", "--duty", "0.5",
         "--out", str(tmp_path / "x")],
    )
    assert res.exit_code == 2
    assert "does not apply" in res.output


def test_version_and_help(runner):
    res = runner.invoke(main, ["--version"])
    assert res.exit_code == 0 and "photongate" in res.output
    res = runner.invoke(main, ["-h"])
    assert res.exit_code == 0 and "simulate" in res.output
