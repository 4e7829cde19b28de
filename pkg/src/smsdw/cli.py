"""Command-line surface: run, sweep, analyze, scan-q, flip-experiment.

Exit codes: 0 success, 1 config error, 2 runtime divergence, 3 analysis
failure.  The output root is taken from --out, else $SMSDW_OUTPUT_ROOT,
else ./runs.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import config_to_dict, parse_config
from .constants import CONSTANTS, larmor_frequency_hz
from .diagnostics import (
    chirality_sign,
    contrast_vs_field,
    contrast_vs_integration,
    detector_series,
    drift_velocity,
    multipole_phase_steps,
    spectrum_peak,
)
from .errors import AnalysisError, ConfigError, SimulationDiverged
from .loop import SimConfig, run
from .records import read_record, write_csv, write_pgm, write_record
from .scan import critical_wavenumber_scan


def _output_root(args) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    return Path(os.environ.get("SMSDW_OUTPUT_ROOT", "runs"))


def _parse_values(spec: str):
    """Comma list, "a..b" (11 points) or "a..b:n"."""
    if ".." in spec:
        head, _, count = spec.partition(":")
        a, _, b = head.partition("..")
        n = int(count) if count else 11
        return list(np.linspace(float(a), float(b), n))
    return [float(v) for v in spec.split(",")]


def _run_one(config: SimConfig, run_dir: Path) -> Path:
    try:
        record = run(config)
    except SimulationDiverged as err:
        if err.record is not None:
            write_record(err.record, run_dir)
        raise
    write_record(record, run_dir)
    return run_dir


def cmd_run(args) -> int:
    config = parse_config(args.config)
    run_dir = _output_root(args) / (args.name or "run")
    _run_one(config, run_dir)
    print(f"run written to {run_dir}")
    return 0


def _sweep_worker(payload):
    config_dict, param, value, run_dir = payload
    from .config import config_from_dict

    base = config_from_dict(config_dict)
    if param == "seed":
        config = replace(base, seed=int(value))
    else:
        config = replace(base, **{param: value})
    _run_one(config, Path(run_dir))
    return run_dir


def cmd_sweep(args) -> int:
    config = parse_config(args.config)
    values = _parse_values(args.values)
    sweep_dir = _output_root(args) / (args.name or f"sweep_{args.param}")
    sweep_dir.mkdir(parents=True, exist_ok=True)
    echo = config_to_dict(config)
    jobs = []
    for value in values:
        tag = f"{args.param}_{value:g}"
        jobs.append((echo, args.param, value, str(sweep_dir / tag)))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            dirs = list(pool.map(_sweep_worker, jobs))
    else:
        dirs = [_sweep_worker(job) for job in jobs]
    write_csv(sweep_dir / "summary.csv", {
        f"{args.param}[config units]": np.array(values),
        "run_index[1]": np.arange(len(values), dtype=float),
    })
    with open(sweep_dir / "runs.txt", "w") as fh:
        for d in dirs:
            fh.write(str(d) + "\n")
    print(f"sweep written to {sweep_dir} ({len(dirs)} runs)")
    return 0


def _sweep_run_dirs(sweep_dir: Path):
    runs_file = sweep_dir / "runs.txt"
    if runs_file.exists():
        return [Path(line.strip()) for line in runs_file.read_text().splitlines()
                if line.strip()]
    return sorted(p.parent for p in sweep_dir.glob("*/header.yaml"))


def _analyze_freq_sweep(run_dirs, out_dir: Path) -> None:
    rows = {"bx[G]": [], "peak_freq[Hz]": [], "two_f_larmor[Hz]": [],
            "ratio[1]": [], "amplitude[arb]": []}
    for rd in run_dirs:
        record = read_record(rd)
        bx = record.config["bx"]
        peak = spectrum_peak(*detector_series(record))
        two_fl = 2.0 * larmor_frequency_hz(abs(bx))
        rows["bx[G]"].append(bx)
        rows["peak_freq[Hz]"].append(peak.freq_hz)
        rows["two_f_larmor[Hz]"].append(two_fl)
        rows["ratio[1]"].append(peak.freq_hz / two_fl if two_fl else np.nan)
        rows["amplitude[arb]"].append(peak.amplitude)
    write_csv(out_dir / "freq_vs_bx.csv", {k: np.array(v) for k, v in rows.items()})
    print(f"wrote {out_dir / 'freq_vs_bx.csv'}")


def _auto_taus(record) -> np.ndarray:
    peak = spectrum_peak(*detector_series(record))
    f_hz = peak.freq_hz
    return np.linspace(1e-8, 2.5 / f_hz, 60)


def cmd_analyze(args) -> int:
    if args.sweep:
        sweep_dir = Path(args.sweep)
        run_dirs = _sweep_run_dirs(sweep_dir)
        if not run_dirs:
            raise AnalysisError(f"no runs found under {sweep_dir}")
        if args.freq:
            _analyze_freq_sweep(run_dirs, sweep_dir)
        if args.contrast:
            if args.tau is None:
                raise ConfigError("sweep contrast analysis needs --tau seconds")
            records = {}
            for rd in run_dirs:
                record = read_record(rd)
                records[record.config["bx"]] = record
            fields, values = contrast_vs_field(records, args.tau, seed=args.seed)
            write_csv(sweep_dir / "contrast_vs_bx.csv", {
                "bx[G]": fields, "contrast[arb]": values,
                "tau[s]": np.full(len(fields), args.tau)})
            print(f"wrote {sweep_dir / 'contrast_vs_bx.csv'}")
        return 0

    run_dir = Path(args.run)
    record = read_record(run_dir)
    if args.freq:
        times, series = detector_series(record)
        n0 = int(len(series) * 0.3)
        s = series[n0:] - series[n0:].mean()
        amp = np.abs(np.fft.rfft(s * np.hanning(len(s))))
        freqs = np.fft.rfftfreq(len(s), d=(times[1] - times[0])) * CONSTANTS.gamma2
        write_csv(run_dir / "spectrum.csv",
                  {"freq[Hz]": freqs, "amplitude[arb]": amp})
        peak = spectrum_peak(times, series)
        write_csv(run_dir / "peak.csv", {
            "peak_freq[Hz]": np.array([peak.freq_hz]),
            "amplitude[arb]": np.array([peak.amplitude]),
            "two_f_larmor[Hz]": np.array([2 * larmor_frequency_hz(abs(record.config["bx"]))]),
        })
        print(f"wrote {run_dir / 'spectrum.csv'} and peak.csv")
    if args.drift:
        report = drift_velocity(record, channel=args.channel)
        write_csv(run_dir / "drift.csv", {
            "mod_freq[Hz]": np.array([report.mod_freq_hz]),
            "larmor_ratio[1]": np.array([report.larmor_ratio]),
            "drift_velocity[m/s]": np.array([report.drift_velocity_ms]),
            "direction[sign]": np.array([float(report.direction)]),
            "chirality[sign]": np.array([float(report.chirality)]),
            "stripe_period[m]": np.array([report.stripe_period_m]),
            "fundamental_freq[Hz]": np.array([report.fundamental_freq_hz]),
        })
        print(f"wrote {run_dir / 'drift.csv'}")
    if args.contrast:
        taus = np.array(_parse_values(args.taus)) if args.taus else _auto_taus(record)
        curve = contrast_vs_integration(record, taus, seed=args.seed)
        write_csv(run_dir / "contrast.csv", {
            "tau[s]": curve.tau_values, "contrast[arb]": curve.contrast})
        print(f"wrote {run_dir / 'contrast.csv'}")
    if args.spacetime:
        for name, cut in record.cuts.items():
            write_pgm(run_dir / f"spacetime_{name}.pgm", cut)
        print(f"wrote {len(record.cuts)} spacetime PGM images to {run_dir}")
    return 0


def cmd_scan_q(args) -> int:
    config = parse_config(args.config)
    result = critical_wavenumber_scan(config, q_min=args.qmin, q_max=args.qmax,
                                      duration=args.duration)
    out_dir = _output_root(args) / (args.name or "scan_q")
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / "growth_vs_q.csv", {
        "q[rad/m]": result.wavenumbers,
        "growth_rate[Gamma2]": result.growth_rates,
        "mode_freq[Gamma2 rad]": result.frequencies,
    })
    if result.below_threshold:
        print(f"below threshold (max growth {result.gamma_max:.3e}); "
              f"table in {out_dir / 'growth_vs_q.csv'}")
    else:
        print(f"q_c = {result.q_c:.1f} rad/m, critical wavelength = "
              f"{result.critical_wavelength * 1e6:.1f} um, perpendicular-channel "
              f"period = {result.perpendicular_period * 1e6:.1f} um, "
              f"max growth = {result.gamma_max:.4f} Gamma2")
    return 0


def cmd_flip(args) -> int:
    config = parse_config(args.config)
    if config.omega_x == 0:
        raise ConfigError("flip experiment needs a nonzero bx")
    period = config.larmor_period
    t_flip = args.warmup + args.flip_after * period
    duration = t_flip + args.follow * period
    config = replace(config, duration=duration,
                     field_schedule=((t_flip, -config.bx),))
    run_dir = _output_root(args) / (args.name or "flip_experiment")
    try:
        record = run(config)
    except SimulationDiverged as err:
        if err.record is not None:
            write_record(err.record, run_dir)
        raise
    write_record(record, run_dir)

    cut = record.cuts["w"]
    times = record.cut_times
    j = None
    from .diagnostics import dominant_spatial_bin

    j = dominant_spatial_bin(cut, 0.3)
    nx = cut.shape[1]
    q = 2 * np.pi * j / (nx * record.pixel_size)

    def window_velocity(t_lo, t_hi):
        sel = (times >= t_lo) & (times <= t_hi)
        modes = np.fft.fft(cut[sel] - cut[sel].mean(axis=1, keepdims=True), axis=1)[:, j]
        phi = np.unwrap(np.angle(modes))
        slope = np.polyfit(times[sel], phi, 1)[0]
        return -slope / q * CONSTANTS.gamma2

    v_before = window_velocity(t_flip - 5 * period, t_flip)
    v_after = window_velocity(t_flip + 5 * period, t_flip + 10 * period)
    snap_before = int(np.searchsorted(record.snapshot_times, t_flip) - 1)
    chir_before = chirality_sign(record, snap_before)
    chir_after = chirality_sign(record, -1)
    _, steps_before, _ = multipole_phase_steps(record, snap_before)
    _, steps_after, _ = multipole_phase_steps(record, -1)
    write_csv(run_dir / "flip_report.csv", {
        "t_flip[1/Gamma2]": np.array([t_flip]),
        "v_before[m/s]": np.array([v_before]),
        "v_after[m/s]": np.array([v_after]),
        "chirality_before[sign]": np.array([float(chir_before)]),
        "chirality_after[sign]": np.array([float(chir_after)]),
        "direction_flipped[bool]": np.array([float(np.sign(v_before) != np.sign(v_after))]),
        "chirality_preserved[bool]": np.array([float(chir_before == chir_after)]),
    })
    print(f"flip experiment written to {run_dir}: v {v_before:+.2f} -> {v_after:+.2f} m/s, "
          f"chirality {chir_before:+d} -> {chir_after:+d}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smsdw",
        description="Sliding multipole spin-density waves behind a feedback mirror")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one configuration")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", help="output root (default $SMSDW_OUTPUT_ROOT or ./runs)")
    p_run.add_argument("--name", help="run directory name")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="vary one parameter over a value list")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--param", required=True,
                         help="config attribute to vary (e.g. bx, intensity, seed)")
    p_sweep.add_argument("--values", required=True,
                         help="comma list, a..b (11 points) or a..b:n")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel worker slots")
    p_sweep.add_argument("--out")
    p_sweep.add_argument("--name")
    p_sweep.set_defaults(func=cmd_sweep)

    p_an = sub.add_parser("analyze", help="extract observables from records")
    target = p_an.add_mutually_exclusive_group(required=True)
    target.add_argument("--run", help="single run directory")
    target.add_argument("--sweep", help="sweep directory")
    p_an.add_argument("--freq", action="store_true", help="detector spectrum and peak")
    p_an.add_argument("--drift", action="store_true", help="drift velocity report")
    p_an.add_argument("--channel", default="w", help="channel for drift tracking")
    p_an.add_argument("--contrast", action="store_true",
                      help="camera-integration contrast curve")
    p_an.add_argument("--tau", type=float, help="integration time (s) for sweep contrast")
    p_an.add_argument("--taus", help="integration times (s) for a single-run curve")
    p_an.add_argument("--seed", type=int, default=0, help="start-time sampling seed")
    p_an.add_argument("--spacetime", action="store_true", help="PGM space-time images")
    p_an.set_defaults(func=cmd_analyze)

    p_scan = sub.add_parser("scan-q", help="growth rate versus transverse wavenumber")
    p_scan.add_argument("--config", required=True)
    p_scan.add_argument("--qmin", type=float, help="rad/m")
    p_scan.add_argument("--qmax", type=float, help="rad/m")
    p_scan.add_argument("--duration", type=float, default=500.0,
                        help="scaled integration time per wavenumber")
    p_scan.add_argument("--out")
    p_scan.add_argument("--name")
    p_scan.set_defaults(func=cmd_scan_q)

    p_flip = sub.add_parser("flip-experiment",
                            help="flip the field mid-run and report drift/chirality")
    p_flip.add_argument("--config", required=True)
    p_flip.add_argument("--warmup", type=float, default=4000.0,
                        help="scaled time to establish the wave before flipping")
    p_flip.add_argument("--flip-after", type=float, default=5.0,
                        help="Larmor periods between warmup and the flip")
    p_flip.add_argument("--follow", type=float, default=15.0,
                        help="Larmor periods to integrate after the flip")
    p_flip.add_argument("--out")
    p_flip.add_argument("--name")
    p_flip.set_defaults(func=cmd_flip)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except SimulationDiverged as err:
        print(f"runtime divergence: {err}", file=sys.stderr)
        return 2
    except AnalysisError as err:
        print(f"analysis failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
