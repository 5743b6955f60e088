"""Command-line interface.

Verbs:

* ``simulate``  run the Monte Carlo pipeline from a JSON config and write
  a QTT1 tag stream plus a JSON run summary
* ``analyze``   histogram a tag file, estimate the biexciton fraction and
  pulsed g2(0), and render figures
* ``sweep``     run a parameter sweep from a config or a bundled recipe
* ``waveform sample``  tabulate a gate transmission waveform

Exit codes: 0 on success, 2 for configuration/usage problems, 1 for
runtime failures (unreadable data, failed fits on valid input, I/O).
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, mc_engine, tagio
from .config import (
    build_waveform,
    get_recipe,
    load_config,
    parse_config,
    with_overrides,
)
from .correlator import g2_zero, hbt_correlate, waveform_histogram
from .errors import (
    ConfigError,
    InsufficientDataError,
    MissingChannelError,
    PhotonGateError,
)
from .estimators import biexciton_fraction
from .modulation import KINDS, transmission
from .sweeper import sweep_offset, sweep_power
from . import report

__all__ = ["main"]


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except (PhotonGateError, OSError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(version=__version__, prog_name="photongate")
def main():
    """Simulate and analyze temporally gated single-photon streams."""


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON run configuration.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Output directory (created if missing).")
@click.option("--seed", type=int, default=None, help="Override the RNG seed.")
@click.option("--pulses", type=int, default=None, help="Override the pulse count.")
@click.option("--workers", type=int, default=1, show_default=True,
              help="Worker threads (never changes the output).")
@_guarded
def simulate(config_path, out_dir, seed, pulses, workers):
    """Generate a time-tag stream: tags.qtt1 + summary.json."""
    cfg = with_overrides(load_config(config_path), seed=seed, n_pulses=pulses)
    if cfg.sweep is not None:
        raise ConfigError(
            "config contains a 'sweep' section; use 'photongate sweep' for it"
        )
    out = _outdir(out_dir)
    tags, summary = mc_engine.simulate(
        cfg.emitter,
        cfg.train,
        cfg.waveform,
        cfg.chain,
        batch_size=cfg.batch_size or mc_engine.DEFAULT_BATCH_SIZE,
        workers=workers,
    )
    tagio.write_qtt1(out / "tags.qtt1", tags)
    tagio.write_summary_json(
        out / "summary.json",
        {
            "config": cfg.raw,
            "summary": summary.to_dict(),
            "tags_file": "tags.qtt1",
            "n_tags": len(tags),
        },
    )
    click.echo(f"wrote {out / 'tags.qtt1'} ({len(tags)} tags)")


@main.command()
@click.argument("tagfile", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Output directory (created if missing).")
@click.option("--period", type=float, default=1000.0, show_default=True,
              help="Pulse repetition period, ns.")
@click.option("--bin-width", type=float, default=1.0, show_default=True,
              help="Waveform histogram bin, ns.")
@click.option("--hbt-bin-width", type=float, default=2.0, show_default=True,
              help="Correlation histogram bin, ns.")
@click.option("--n-side", type=int, default=10, show_default=True,
              help="Side peaks per side for the g2 ratio.")
@click.option("--window", type=float, default=None,
              help="Integration window per peak, ns [default: full period].")
@click.option("--tail-start", type=float, default=100.0, show_default=True,
              help="Start of the slow-tail fit range, ns.")
@click.option("--tail-correction/--no-tail-correction", default=True,
              show_default=True,
              help="Correct g2 for slow-tail leakage between neighboring "
                   "peak windows, using the fitted lifetime.")
@click.option("--figures/--no-figures", default=True, show_default=True)
@_guarded
def analyze(tagfile, out_dir, period, bin_width, hbt_bin_width, n_side, window,
            tail_start, tail_correction, figures):
    """Estimate purity metrics from a QTT1 tag file."""
    tags = tagio.read_qtt1(tagfile)
    out = _outdir(out_dir)
    notes: list[str] = []
    meta = {
        "generator": f"photongate {__version__}",
        "command": "analyze",
        "input": str(tagfile),
        "period_ns": period,
    }

    wf = waveform_histogram(tags, period, bin_width)
    tagio.write_csv_table(
        out / "waveform.csv",
        {"time_ns": wf.bin_centers, "counts": wf.bins},
        meta | {"bin_width_ns": bin_width},
    )

    decomp = None
    try:
        decomp = biexciton_fraction(wf, start=tail_start)
        tagio.write_csv_table(
            out / "decomposition.csv",
            {
                "time_ns": wf.bin_centers,
                "counts": wf.bins,
                "slow_model": decomp.slow_model,
                "fast_excess": decomp.fast_counts,
            },
            meta | {"tail_start_ns": tail_start},
        )
    except InsufficientDataError as exc:
        notes.append(f"biexciton fraction not estimated: {exc}")

    hbt = None
    g2 = None
    try:
        hbt = hbt_correlate(tags, span=(n_side + 0.5) * period, bin_width=hbt_bin_width)
        tagio.write_csv_table(
            out / "hbt.csv",
            {"delay_ns": hbt.bin_centers, "counts": hbt.bins},
            meta | {"bin_width_ns": hbt_bin_width},
        )
        tail = decomp.tau_slow if (tail_correction and decomp is not None) else None
        g2 = g2_zero(hbt, period, n_side_peaks=n_side, window=window, tail_constant=tail)
    except (MissingChannelError, ValueError) as exc:
        notes.append(f"g2 not estimated: {exc}")

    payload = {
        "input": str(tagfile),
        "n_tags": len(tags),
        "n_channel0": int(np.count_nonzero(tags.channel == 0)),
        "n_channel1": int(np.count_nonzero(tags.channel == 1)),
        "period_ns": period,
        "beta": None,
        "g2": None,
        "notes": notes,
    }
    if decomp is not None:
        payload["beta"] = {
            "beta_hat": decomp.beta_hat,
            "beta_sigma": decomp.beta_sigma,
            "tau_slow_ns": decomp.tau_slow,
            "tau_slow_sigma_ns": decomp.tau_slow_sigma,
            "tau_fast_ns": decomp.tau_fast,
            "clamp_fraction": decomp.clamp_fraction,
        }
    if g2 is not None:
        payload["g2"] = {
            "g2": g2.g2,
            "sigma": g2.sigma,
            "raw_ratio": g2.raw_ratio,
            "overlap_u": g2.overlap_u,
            "center_area": g2.center_area,
            "window_ns": g2.window,
            "n_side_peaks": g2.n_side_peaks,
        }
    tagio.write_summary_json(out / "summary.json", payload)

    if figures:
        report.render_waveform(out / "waveform.png", wf, decomp)
        if hbt is not None:
            report.render_hbt(out / "hbt.png", hbt, g2)

    msg = []
    if decomp is not None:
        msg.append(f"beta = {decomp.beta_hat:.5f} +- {decomp.beta_sigma:.5f}")
    if g2 is not None:
        msg.append(f"g2(0) = {g2.g2:.5f} +- {g2.sigma:.5f}")
    click.echo("; ".join(msg) if msg else "no estimates (see summary.json notes)")


@main.command("sweep")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON config with a 'sweep' section.")
@click.option("--recipe", type=str, default=None,
              help="Name of a bundled sweep recipe.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Output directory (created if missing).")
@click.option("--seed", type=int, default=None, help="Override the RNG seed.")
@click.option("--pulses", type=int, default=None,
              help="Override the pulse count per row.")
@click.option("--workers", type=int, default=1, show_default=True,
              help="Rows simulated concurrently (never changes results).")
@click.option("--figures/--no-figures", default=True, show_default=True)
@_guarded
def sweep_cmd(config_path, recipe, out_dir, seed, pulses, workers, figures):
    """Run a gate-offset or power sweep and tabulate purity metrics."""
    if (config_path is None) == (recipe is None):
        raise click.UsageError("provide exactly one of --config or --recipe")
    cfg = parse_config(get_recipe(recipe)) if recipe else load_config(config_path)
    cfg = with_overrides(cfg, seed=seed, n_pulses=pulses)
    spec = cfg.sweep
    if spec is None:
        raise ConfigError("config has no 'sweep' section")
    out = _outdir(out_dir)

    opts = cfg.analysis
    if spec.mode == "offset":
        rows = sweep_offset(
            cfg.emitter, cfg.train, cfg.chain, spec.offsets,
            edge=spec.edge, rise_time=spec.rise_time, floor=spec.floor,
            workers=workers, n_side_peaks=opts.n_side_peaks,
            tail_start=opts.tail_start,
        )
    else:
        rows = sweep_power(
            cfg.emitter, cfg.train, cfg.chain, spec.powers, cfg.waveform,
            workers=workers, n_side_peaks=opts.n_side_peaks,
            tail_start=opts.tail_start,
        )

    meta = {
        "generator": f"photongate {__version__}",
        "command": "sweep",
        "mode": spec.mode,
        "config": cfg.meta_json(),
    }
    if recipe:
        meta["recipe"] = recipe
    for i, r in enumerate(rows):
        if r.error:
            meta[f"row_{i}_error"] = r.error
    tagio.write_csv_table(
        out / "sweep.csv",
        {
            "t0_ns": [float("nan") if r.t0 is None else r.t0 for r in rows],
            "power": [r.power for r in rows],
            "beta_analytic": [r.beta_analytic for r in rows],
            "beta_mc": [r.beta_mc for r in rows],
            "beta_sigma": [r.beta_sigma for r in rows],
            "survival_analytic": [r.survival_analytic for r in rows],
            "survival_mc": [r.survival_mc for r in rows],
            "survival_sigma": [r.survival_sigma for r in rows],
            "g2": [r.g2 for r in rows],
            "g2_sigma": [r.g2_sigma for r in rows],
            "detected": [r.detected for r in rows],
        },
        meta,
    )
    if figures:
        report.render_sweep(out / "sweep.png", rows, spec.mode)
    click.echo(f"wrote {out / 'sweep.csv'} ({len(rows)} rows)")


@main.group()
def waveform():
    """Inspect gate transmission waveforms."""


@waveform.command("sample")
@click.option("--kind", required=True, type=click.Choice(list(KINDS)))
@click.option("--t0", type=float, default=None, help="Gate offset, ns.")
@click.option("--rise-time", type=float, default=None, help="Edge rise time, ns.")
@click.option("--frequency", type=float, default=None, help="Sine frequency, 1/ns.")
@click.option("--period", type=float, default=None, help="Square-wave period, ns.")
@click.option("--duty", type=float, default=None, help="Square-wave open fraction.")
@click.option("--floor", type=float, default=None, help="Closed-state transmission.")
@click.option("--t-max", type=float, default=400.0, show_default=True)
@click.option("--step", type=float, default=0.5, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--figures/--no-figures", default=True, show_default=True)
@_guarded
def waveform_sample(kind, t0, rise_time, frequency, period, duty, floor, t_max,
                    step, out_dir, figures):
    """Tabulate m(t) on a uniform grid: waveform_sample.csv (+ .png)."""
    params = {
        "t0": t0,
        "rise_time": rise_time,
        "frequency": frequency,
        "period": period,
        "duty": duty,
        "floor": floor,
    }
    w = build_waveform(
        {"kind": kind, **{k: v for k, v in params.items() if v is not None}}
    )
    if t_max <= 0 or step <= 0:
        raise ConfigError("t-max and step must be positive")
    t = np.arange(0.0, t_max + step / 2.0, step)
    m = transmission(w, t)
    out = _outdir(out_dir)
    tagio.write_csv_table(
        out / "waveform_sample.csv",
        {"time_ns": t, "transmission": m},
        {
            "generator": f"photongate {__version__}",
            "command": "waveform sample",
            "waveform": json.dumps(
                {"kind": kind, **{k: v for k, v in params.items() if v is not None}}
            ),
        },
    )
    if figures:
        report.render_waveform_sample(out / "waveform_sample.png", w, t, m)
    click.echo(f"wrote {out / 'waveform_sample.csv'} ({len(t)} samples)")


if __name__ == "__main__":
    main()
