"""Batch command line: scenario configs in, CSV curves and CIR archives out.

Subcommands: blockage, pathloss-fit, gbsm, sounder, analyze.  Exit codes:
0 success, 2 input or config error, 3 resource/sizing error.  All output
files are written atomically; repeated runs with identical inputs produce
byte-identical files regardless of CHANTOOL_THREADS.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings

import numpy as np

from chantool.analysis import (
    los_power_track,
    pdp_correlation_matrix,
    stationary_intervals,
)
from chantool.archive import (
    ArchiveError,
    atomic_write_text,
    read_archive,
    write_archive,
)
from chantool.blockage import (
    BlockageScenario,
    Cylinder,
    GeometryError,
    Screen,
    sweep_blocker,
)
from chantool.config import (
    Config,
    ConfigError,
    blockage_settings,
    gbsm_config,
    load_config,
    sounder_settings,
)
from chantool.core import DB_FLOOR, FrequencyBand, Point3, PowerDelayProfile, to_db
from chantool.gbsm import SizingError, run_scenario
from chantool.pathloss import PathLossSample, abg_fit, ci_fit
from chantool.sounder import (
    deconvolve_cir,
    extract_mpcs,
    path_loss_from_power,
    received_power,
    rms_delay_spread,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SIZING = 3

_MODEL_ORDER = ("metis", "kirchhoff", "gtd")


def thread_count() -> int | None:
    """CHANTOOL_THREADS: unset or 0 means auto, otherwise the given cap."""
    raw = os.environ.get("CHANTOOL_THREADS", "").strip()
    if not raw:
        return None
    count = int(raw)
    if count < 0:
        raise ValueError(f"CHANTOOL_THREADS must be >= 0, got {count}")
    return None if count == 0 else count


def _fmt(value: float) -> str:
    """Shortest round-trip decimal; NaN spelled out for CSV stability."""
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return repr(float(value))


def _require_config(args) -> Config:
    if not args.config:
        raise ConfigError("<args>", 0, "--config is required for this command")
    return load_config(args.config)


def _require_section(cfg: Config, name: str) -> dict[str, object]:
    section = cfg.section(name)
    if section is None:
        raise ConfigError(cfg.path, 0, f"missing [{name}] section")
    return section


def cmd_blockage(args) -> int:
    cfg = _require_config(args)
    settings = blockage_settings(_require_section(cfg, "blockage"))
    models = list(_MODEL_ORDER) if "all" in args.model else [
        m for m in _MODEL_ORDER if m in args.model
    ]
    band = FrequencyBand.preset(float(settings["carrier_ghz"]))
    h = float(settings["antenna_height_m"])
    length = float(settings["link_length_m"])
    tx = Point3(0.0, 0.0, h)
    rx = Point3(length, 0.0, h)
    zc = float(settings["blocker_center_z_m"])

    if settings["scenario"] == "crossing":
        positions = [round(-1.0 + 0.1 * i, 10) for i in range(21)]
        centers = [
            Point3(float(settings["along_position_m"]), lat, zc) for lat in positions
        ]
    else:
        positions = [round(1.0 + 0.2 * i, 10) for i in range(41)]
        centers = [
            Point3(along, float(settings["lateral_offset_m"]), zc)
            for along in positions
        ]

    screen = Screen(
        centers[0], float(settings["screen_width_m"]), float(settings["screen_height_m"])
    )
    cylinder = Cylinder(
        centers[0],
        float(settings["cylinder_radius_m"]),
        float(settings["cylinder_height_m"]),
    )
    threads = thread_count() or 1
    columns = {}
    for model in models:
        blocker = cylinder if model == "gtd" else screen
        scn = BlockageScenario(tx, rx, band, (blocker,))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = sweep_blocker(scn, model, centers, n_threads=threads)
        values = [value for _, value in result]
        nan_count = sum(1 for v in values if math.isnan(v))
        print(f"{model}: {nan_count} NaN point(s)", file=sys.stderr)
        columns[model] = values

    lines = ["position_m," + ",".join(f"{m}_att_db" for m in models)]
    for i, pos in enumerate(positions):
        row = [_fmt(pos)] + [_fmt(columns[m][i]) for m in models]
        lines.append(",".join(row))
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def _read_samples_csv(path: str) -> list[PathLossSample]:
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.strip() for line in handle if line.strip()]
    if not lines or lines[0] != "distance_m,freq_ghz,pl_db":
        raise ValueError(
            f"{path}: expected header 'distance_m,freq_ghz,pl_db', "
            f"got {lines[0] if lines else '<empty>'!r}"
        )
    samples = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 columns, got {len(parts)}")
        try:
            d, f, pl = (float(p) for p in parts)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric value") from None
        samples.append(PathLossSample(distance_m=d, freq_ghz=f, pl_db=pl))
    return samples


def cmd_pathloss_fit(args) -> int:
    samples = _read_samples_csv(args.samples)
    model_name = args.model
    if args.config:
        section = load_config(args.config).section("pathloss") or {}
        if model_name is None:
            model_name = section.get("model")
    if model_name is None:
        model_name = "ci"
    try:
        if model_name == "ci":
            fit = ci_fit(samples)
            params = {"n": fit.n}
            sigma = fit.sigma_db
        elif model_name == "fi":
            fit = abg_fit(samples, fix_gamma=0.0)
            params = {"alpha": fit.alpha, "beta_db": fit.beta_db, "gamma": fit.gamma}
            sigma = fit.sigma_db
        else:
            fit = abg_fit(samples)
            params = {"alpha": fit.alpha, "beta_db": fit.beta_db, "gamma": fit.gamma}
            sigma = fit.sigma_db
    except ValueError as err:
        if "rank-deficient" in str(err):
            raise ValueError(
                f"{err} (use --model fi for single-frequency data)"
            ) from None
        raise
    report = {
        "model": model_name,
        "parameters": params,
        "sigma_db": sigma,
        "residual_rms_db": sigma,
        "sample_count": len(samples),
    }
    atomic_write_text(args.out, json.dumps(report, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_gbsm(args) -> int:
    cfg = _require_config(args)
    gcfg = gbsm_config(_require_section(cfg, "gbsm"), seed=args.seed)
    seq = run_scenario(gcfg, threads=thread_count())
    size = write_archive(args.out, seq)
    print(
        f"{seq.n_time} snapshots, mean clusters {seq.mean_cluster_count:.3f}, "
        f"{size} bytes"
    )
    return EXIT_OK


def cmd_sounder(args) -> int:
    rx = read_archive(args.rx)
    cal = read_archive(args.cal)
    for name, seq in (("rx", rx), ("cal", cal)):
        if seq.cir.shape[1] != 1 or seq.cir.shape[2] != 1:
            raise ArchiveError(f"{name} capture must have n_tx = n_rx = 1")
    if cal.n_time not in (1, rx.n_time):
        raise ArchiveError(
            f"cal has {cal.n_time} snapshots, rx has {rx.n_time}; "
            "need 1 or a matching count"
        )
    if rx.sample_period_s != cal.sample_period_s:
        raise ArchiveError("rx and cal sample periods differ")
    section = {}
    if args.config:
        section = load_config(args.config).section("sounder") or {}
    _, budget, policy, band_fraction = sounder_settings(section)
    sample_rate = 1.0 / rx.sample_period_s

    mpc_lines = ["snapshot,delay_ns,power_db"]
    stat_lines = ["snapshot,received_power_db,path_loss_db,rms_ds_ns"]
    for t in range(rx.n_time):
        y_rx = rx.cir[t, 0, 0]
        y_cal = cal.cir[min(t, cal.n_time - 1), 0, 0]
        cir = deconvolve_cir(
            y_rx, y_cal, band_fraction=band_fraction, sample_rate_hz=sample_rate
        )
        mpcs = extract_mpcs(cir, policy)
        for m in mpcs:
            mpc_lines.append(
                f"{t},{_fmt(m.delay_s * 1e9)},{_fmt(m.power_db)}"
            )
        if mpcs:
            p_rx = received_power(mpcs)
            ds_ns = rms_delay_spread(mpcs) * 1e9
        else:
            p_rx = DB_FLOOR
            ds_ns = math.nan
        stat_lines.append(
            f"{t},{_fmt(p_rx)},{_fmt(path_loss_from_power(p_rx, budget))},"
            f"{_fmt(ds_ns)}"
        )
    atomic_write_text(args.out, "\n".join(mpc_lines + stat_lines) + "\n")
    return EXIT_OK


def cmd_analyze(args) -> int:
    if not 0.0 < args.threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {args.threshold}")
    seq = read_archive(args.archive)
    if seq.n_time < 2:
        raise ArchiveError(f"{args.archive}: need at least 2 snapshots to analyze")
    pdps = [
        PowerDelayProfile(seq.sample_period_s, to_db(np.abs(seq.cir[t, 0, 0]) ** 2))
        for t in range(seq.n_time)
    ]
    corr = pdp_correlation_matrix(pdps)
    matrix_lines = [
        ",".join(_fmt(v) for v in row) for row in corr.values
    ]
    atomic_write_text(args.out, "\n".join(matrix_lines) + "\n")

    stem, ext = os.path.splitext(args.out)
    if args.stationarity:
        report = stationary_intervals(corr, args.threshold)
        lines = ["start_index,end_index"] + [
            f"{start},{end}" for start, end in report.intervals
        ]
        atomic_write_text(f"{stem}_intervals{ext or '.csv'}", "\n".join(lines) + "\n")
    if args.los_track:
        track = los_power_track(seq)
        lines = ["t_s,power_db"] + [
            f"{_fmt(t)},{_fmt(level)}" for t, level in track
        ]
        atomic_write_text(f"{stem}_los{ext or '.csv'}", "\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chantool",
        description="Millimeter-wave channel toolkit batch runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("blockage", help="blocker trajectory attenuation sweep")
    p.add_argument("--config", required=True)
    p.add_argument(
        "--model",
        action="append",
        choices=[*_MODEL_ORDER, "all"],
        default=None,
        help="repeatable; default all",
    )
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_blockage)

    p = sub.add_parser("pathloss-fit", help="fit a path loss model to samples")
    p.add_argument("samples", help="CSV with header distance_m,freq_ghz,pl_db")
    p.add_argument("--model", choices=["ci", "fi", "abg"], default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pathloss_fit)

    p = sub.add_parser("gbsm", help="generate a CIR archive")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gbsm)

    p = sub.add_parser("sounder", help="deconvolve captures into MPC lists")
    p.add_argument("--rx", required=True)
    p.add_argument("--cal", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sounder)

    p = sub.add_parser("analyze", help="PDP correlation and stationarity")
    p.add_argument("archive")
    p.add_argument("--stationarity", action="store_true")
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--los-track", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "model", None) is None and args.command == "blockage":
        args.model = ["all"]
    try:
        return args.func(args)
    except SizingError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_SIZING
    except (ConfigError, ArchiveError, GeometryError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
