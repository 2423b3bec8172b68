"""Command-line front end: pattern / focus / coarray / doa / isac.

Configuration resolution order, lowest to highest precedence: built-in
defaults, ``--preset`` values, ``--config`` file keys, explicit flags.
Every run computes all results first, then writes CSVs, PNG renderings
(unless ``--no-plot``), and a manifest that reproduces the run when passed
back through ``--config``.  CSV bytes are deterministic for a fixed seed
and config; plots are a side output.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import __version__
from .coarray import difference_coarray, holes, max_contiguous, sensing_dof
from .estimation import (EstimationFailure, SnapshotSet, SourceScene,
                         coarray_music, music_far, nrmse, polar_omp,
                         sample_covariance, simulate_snapshots,
                         spatial_smoothing, two_stage_near, zf_music)
from .geometry import LayoutError
from .isacsim import (RESULT_CSV_HEADER, C_LIGHT, ScenarioConfig,
                      run_rate_experiment, run_sensing_experiment)
from .patterns import farfield_pattern, nearfield_focus_pattern
from .presets import build_layout, get_preset
from .runconfig import ConfigError, RunManifest, load_config

_ARCH_KEYS = ("arch", "m", "eta", "nmo", "mmo", "gamma", "min", "mou",
              "mf", "ms", "nsub", "subm")

_ESTIMATORS = ("music", "smooth-music", "coarray-music", "two-stage",
               "omp", "zf-music")


class CliError(ValueError):
    pass


# ---------------------------------------------------------------------------
# argument plumbing


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file (flags win)")
    p.add_argument("--preset", help="named preset (fig3..fig6)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--jobs", type=int, help="parallel trial workers (default 1)")
    p.add_argument("--out", help="output directory (default 'out')")
    p.add_argument("--no-plot", action="store_true", default=None,
                   help="skip PNG rendering")


def _add_arch(p: argparse.ArgumentParser) -> None:
    p.add_argument("--arch", choices=("ca", "usa", "moa", "na", "cpa", "mra", "emra"))
    p.add_argument("--m", type=int, help="element count (ca/usa/mra)")
    p.add_argument("--eta", type=float, help="usa spacing in half-wavelengths")
    p.add_argument("--nmo", type=int, help="module count (moa)")
    p.add_argument("--mmo", type=int, help="elements per module (moa)")
    p.add_argument("--gamma", type=int, help="module pitch (moa)")
    p.add_argument("--min", type=int, help="inner element count (na)")
    p.add_argument("--mou", type=int, help="outer element count (na)")
    p.add_argument("--mf", type=int, help="first co-prime factor (cpa)")
    p.add_argument("--ms", type=int, help="second co-prime factor (cpa)")
    p.add_argument("--nsub", type=int, help="sub-array copies (emra)")
    p.add_argument("--subm", type=int, help="elements per sub-array (emra)")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="sparsemimo",
                                  description="sparse-MIMO array experiments")
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("pattern", help="far-field beam pattern CSVs")
    _add_common(p)
    _add_arch(p)
    p.add_argument("--grid-start", type=float)
    p.add_argument("--grid-stop", type=float)
    p.add_argument("--grid-step", type=float)

    p = sub.add_parser("focus", help="near-field focusing grid CSVs")
    _add_common(p)
    _add_arch(p)
    p.add_argument("--carrier", type=float, dest="carrier_hz")
    p.add_argument("--focus-range", type=float, dest="focus_range_m")
    p.add_argument("--focus-angle", type=float, dest="focus_angle_rad")
    p.add_argument("--range-start", type=float, dest="range_start_m")
    p.add_argument("--range-stop", type=float, dest="range_stop_m")
    p.add_argument("--range-points", type=int)
    p.add_argument("--angle-start", type=float, dest="angle_start_rad")
    p.add_argument("--angle-stop", type=float, dest="angle_stop_rad")
    p.add_argument("--angle-points", type=int)

    p = sub.add_parser("coarray", help="difference co-array profile and report")
    _add_common(p)
    _add_arch(p)

    p = sub.add_parser("doa", help="seeded Monte Carlo DOA estimation")
    _add_common(p)
    _add_arch(p)
    p.add_argument("--est", choices=_ESTIMATORS)
    p.add_argument("--k", type=int, help="source count")
    p.add_argument("--snr", type=float, help="per-source SNR in dB")
    p.add_argument("--snapshots", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--coherent", action="store_true", default=None)
    p.add_argument("--range", type=float, dest="source_range_m",
                   help="source range in m (near-field estimators)")
    p.add_argument("--subarray", type=int, help="smoothing subarray length")
    p.add_argument("--grid-step", type=float, help="sin-domain scan step")
    p.add_argument("--carrier", type=float, dest="carrier_hz")

    p = sub.add_parser("isac", help="multi-user ISAC sweeps (rate / sensing)")
    _add_common(p)
    _add_arch(p)
    p.add_argument("--experiment", choices=("rate", "sensing"))
    p.add_argument("--carrier", type=float, dest="carrier_hz")
    p.add_argument("--k-users", type=int)
    p.add_argument("--disk-center-range", type=float, dest="disk_center_range_m")
    p.add_argument("--disk-center-angle", type=float, dest="disk_center_angle_rad")
    p.add_argument("--disk-radius", type=float, dest="disk_radius_m")
    p.add_argument("--target-range", type=float, dest="target_range_m")
    p.add_argument("--target-angle", type=float, dest="target_angle_rad")
    p.add_argument("--snr-sweep", dest="snr_db",
                   help="comma-separated SNR sweep in dB")
    p.add_argument("--radius-sweep", help="comma-separated disk radii in m")
    p.add_argument("--channel-model", choices=("far_field", "near_field"))
    p.add_argument("--combiner", choices=("mrc", "zf"))
    p.add_argument("--tau", type=float, dest="grouping_threshold")
    p.add_argument("--trials", type=int)
    p.add_argument("--snapshots", type=int)
    p.add_argument("--user-rx-snr", type=float, dest="user_rx_snr_db")
    p.add_argument("--sin-grid-step", type=float)
    return top


def _as_float_tuple(value) -> tuple[float, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        value = tuple(v for v in value.split(",") if v.strip())
    if isinstance(value, (int, float)):
        value = (value,)
    return tuple(float(v) for v in value)


def resolve_settings(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < preset < config file < explicit flags."""
    settings = dict(defaults)
    preset_name = args.preset
    config = {}
    if args.config:
        config = load_config(args.config)
        if preset_name is None and "preset" in config:
            preset_name = config["preset"]
    if preset_name is not None:
        preset = get_preset(preset_name)
        if preset["subcommand"] != args.subcommand:
            raise CliError(f"preset {preset_name!r} belongs to subcommand "
                           f"{preset['subcommand']!r}")
        settings.update({k: v for k, v in preset.items()
                         if k not in ("subcommand", "layouts")})
        settings["preset"] = preset_name
        settings["layouts"] = preset["layouts"]
    for key, val in config.items():
        if key in ("subcommand", "version", "outputs", "preset"):
            continue
        settings[key] = val
    for key, val in vars(args).items():
        if key in ("subcommand", "config", "preset") or val is None:
            continue
        settings[key] = val
    if "master_seed" in settings:
        default_seed = settings.pop("master_seed")
        if settings.get("seed") is None:
            settings["seed"] = default_seed
    settings.setdefault("seed", 0)
    settings.setdefault("jobs", 1)
    settings.setdefault("out", "out")
    settings.setdefault("no_plot", False)
    if "layouts" not in settings:
        arch_spec = {k: settings[k] for k in _ARCH_KEYS
                     if settings.get(k) is not None}
        if "arch" not in arch_spec:
            raise CliError("no architecture given: use --arch/--preset/--config")
        settings["layouts"] = [(arch_spec["arch"], arch_spec)]
    return settings


def _scalar_settings(settings: dict) -> dict:
    """Manifest view: everything except the non-scalar layout list."""
    out = {}
    for key, val in settings.items():
        if key in ("layouts", "no_plot", "out", "jobs", "seed") or val is None:
            continue
        out[key] = val
    return out


def _write_outputs(out_dir, subcommand: str, settings: dict,
                   files: list[tuple[str, str]]) -> list:
    """Write fully-computed (name, text) files plus the manifest; return paths."""
    import os
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, text in files:
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        paths.append(path)
    manifest = RunManifest(subcommand=subcommand, version=__version__,
                           master_seed=int(settings["seed"]),
                           config=_scalar_settings(settings),
                           outputs=tuple(n for n, _ in files))
    mpath = os.path.join(out_dir, f"{subcommand}_manifest.txt")
    manifest.write(mpath)
    paths.append(mpath)
    return paths


# ---------------------------------------------------------------------------
# subcommands


def cmd_pattern(args) -> int:
    defaults = {"grid_start": -1.0, "grid_stop": 1.0, "grid_step": 1e-3}
    s = resolve_settings(args, defaults)
    grid = np.arange(s["grid_start"], s["grid_stop"] + s["grid_step"] / 2,
                     s["grid_step"])
    curves = {}
    files = []
    for label, spec in s["layouts"]:
        layout = build_layout(spec)
        curve = farfield_pattern(layout, grid)
        curves[label] = curve
        files.append((f"pattern_{label}.csv", curve.to_csv()))
    paths = _write_outputs(s["out"], "pattern", s, files)
    if not s["no_plot"]:
        from .figures import render_patterns
        import os
        render_patterns(curves, os.path.join(s["out"], "pattern.png"))
    print("\n".join(paths))
    return 0


def cmd_focus(args) -> int:
    defaults = {"carrier_hz": 28e9, "focus_range_m": 200.0,
                "focus_angle_rad": 0.0, "range_start_m": 50.0,
                "range_stop_m": 800.0, "range_points": 151,
                "angle_start_rad": -0.2, "angle_stop_rad": 0.2,
                "angle_points": 81}
    s = resolve_settings(args, defaults)
    lam = C_LIGHT / s["carrier_hz"]
    ranges = np.linspace(s["range_start_m"], s["range_stop_m"], s["range_points"])
    angles = np.linspace(s["angle_start_rad"], s["angle_stop_rad"],
                         s["angle_points"])
    focus = (s["focus_range_m"], s["focus_angle_rad"])
    files, grids = [], {}
    for label, spec in s["layouts"]:
        layout = build_layout(spec)
        grid = nearfield_focus_pattern(layout, lam, focus, ranges, angles)
        grids[label] = grid
        files.append((f"focus_{label}.csv", grid.to_csv()))
    paths = _write_outputs(s["out"], "focus", s, files)
    if not s["no_plot"]:
        from .figures import render_focus
        import os
        for label, grid in grids.items():
            render_focus(grid, label, os.path.join(s["out"], f"focus_{label}.png"))
    print("\n".join(paths))
    return 0


def cmd_coarray(args) -> int:
    s = resolve_settings(args, {})
    files = []
    for label, spec in s["layouts"]:
        layout = build_layout(spec)
        profile = difference_coarray(layout)
        files.append((f"coarray_{label}.csv", profile.to_csv()))
        hole_list = holes(profile)
        report = "\n".join([
            f"layout = {layout.label}",
            f"elements = {layout.m}",
            f"max_lag = {profile.lags[-1]}",
            f"contiguous_extent = {max_contiguous(profile)}",
            f"sensing_dof = {sensing_dof(layout)}",
            f"holes = {','.join(map(str, hole_list)) if hole_list else 'none'}",
        ]) + "\n"
        files.append((f"coarray_{label}_report.txt", report))
    paths = _write_outputs(s["out"], "coarray", s, files)
    print("\n".join(paths))
    return 0


def _doa_truth_sines(k: int) -> np.ndarray:
    # interior points of [-0.8, 0.8]: k=1 sits at 0, k sources stay separated
    return np.linspace(-0.8, 0.8, k + 2)[1:-1]


def _run_doa_trial(est, layout, lam, scene, sines, s, trial):
    seed = np.random.SeedSequence(int(s["seed"]), spawn_key=(0, trial))
    snap = simulate_snapshots(layout, lam, scene, s["snapshots"], 1.0, seed)
    grid = np.arange(-0.995, 0.9951, s["grid_step"])
    k = len(sines)
    if est == "music":
        return music_far(sample_covariance(snap), layout, k, grid)
    if est == "smooth-music":
        sub = s["subarray"] or max(layout.m // 2, 1)
        return music_far(spatial_smoothing(snap, sub),
                         _uniform_prefix(layout, sub), k, grid)
    if est == "coarray-music":
        return coarray_music(sample_covariance(snap), layout, k, grid)
    rings = np.geomspace(s["source_range_m"] / 4.0, s["source_range_m"] * 4.0, 33)
    if est == "two-stage":
        return two_stage_near(snap, k, grid, rings)
    if est == "omp":
        return polar_omp(snap, k, grid, rings)
    if est == "zf-music":
        no_users = np.zeros((layout.m, 0), dtype=complex)
        return zf_music(snap, no_users, k, grid)
    raise CliError(f"unknown estimator {est!r}")


def _uniform_prefix(layout, sub):
    # smoothing output lives on the first `sub` elements of the uniform layout
    from .geometry import ElementLayout
    return ElementLayout(layout.positions[:sub], f"{layout.label}_sub{sub}")


def cmd_doa(args) -> int:
    defaults = {"est": "music", "k": 1, "snr": 10.0, "snapshots": 200,
                "trials": 10, "coherent": False, "source_range_m": 200.0,
                "subarray": None, "grid_step": 1e-3, "carrier_hz": 28e9}
    s = resolve_settings(args, defaults)
    lam = C_LIGHT / s["carrier_hz"]
    k = s["k"]
    sines = _doa_truth_sines(k)
    rows = ["trial,truth_sin,angle_sin,range_m,method"]
    summary = ["method,nrmse,trials,failures"]
    est = s["est"]
    if k > 0:
        power = 10.0 ** (s["snr"] / 10.0)
        near = est in ("two-stage", "omp")
        src = tuple((math.asin(u),
                     s["source_range_m"] if near else math.inf, power)
                    for u in sines)
        scene = SourceScene(src, coherent=bool(s["coherent"]))
        errors, failures = [], 0
        for label, spec in s["layouts"][:1]:
            layout = build_layout(spec)
            for trial in range(s["trials"]):
                try:
                    rep = _run_doa_trial(est, layout, lam, scene, sines, s, trial)
                except EstimationFailure:
                    failures += 1
                    continue
                got = np.asarray(rep.angles)       # radians, ascending
                for i, u in enumerate(np.sin(got)):
                    truth = sines[min(i, k - 1)]
                    rng = rep.ranges[i] if i < len(rep.ranges) else ""
                    rngtxt = f"{rng:.12g}" if rng != "" else ""
                    rows.append(f"{trial},{truth:.12g},{u:.12g},{rngtxt},{est}")
                if got.size == k:
                    errors.extend((got - np.arcsin(sines)).tolist())
        val = (float(np.sqrt(np.mean(np.square(errors))) / math.pi)
               if errors else math.nan)
        summary.append(f"{est},{val:.12g},{s['trials']},{failures}")
    files = [("doa.csv", "\n".join(rows) + "\n"),
             ("doa_summary.csv", "\n".join(summary) + "\n")]
    paths = _write_outputs(s["out"], "doa", s, files)
    print("\n".join(paths))
    return 0


def cmd_isac(args) -> int:
    defaults = {"experiment": "rate", "carrier_hz": 28e9, "k_users": 30,
                "disk_center_range_m": 200.0, "disk_center_angle_rad": 0.0,
                "disk_radius_m": 30.0, "target_range_m": 200.0,
                "target_angle_rad": math.radians(70.0), "snr_db": (0.0,),
                "radius_sweep": (), "channel_models": None,
                "channel_model": "near_field", "combiner": "mrc",
                "grouping_threshold": 0.5, "trials": 10, "snapshots": 32,
                "user_rx_snr_db": 10.0, "sin_grid_step": 1e-3,
                "range_rings": ()}
    s = resolve_settings(args, defaults)
    models = s["channel_models"] or (s["channel_model"],)
    if isinstance(models, str):
        models = (models,)
    rows_by_label = {}
    all_rows = []
    for label, spec in s["layouts"]:
        layout = build_layout(spec)
        for model in models:
            cfg = ScenarioConfig(
                carrier_hz=s["carrier_hz"], layout=layout,
                k_users=s["k_users"],
                user_disk=(s["disk_center_range_m"],
                           s["disk_center_angle_rad"], s["disk_radius_m"]),
                target=(s["target_range_m"], s["target_angle_rad"]),
                snr_db=_as_float_tuple(s["snr_db"]) or (0.0,),
                channel_model=model, combiner=s["combiner"],
                grouping_threshold=s["grouping_threshold"],
                trials=s["trials"], master_seed=int(s["seed"]),
                snapshots=s["snapshots"],
                user_rx_snr_db=s["user_rx_snr_db"],
                radius_sweep=_as_float_tuple(s["radius_sweep"]),
                sin_grid_step=s["sin_grid_step"],
                range_rings=_as_float_tuple(s["range_rings"]),
                jobs=s["jobs"])
            if s["experiment"] == "rate":
                rows = run_rate_experiment(cfg)
                rows_by_label[f"{label} ({model})"] = rows
            else:
                rows = run_sensing_experiment(cfg)
                rows_by_label[label] = rows
                all_rows.extend(rows)
                break  # sensing always uses exact near-field physics
            all_rows.extend(rows)
    name = f"isac_{s['experiment']}.csv"
    text = "\n".join([RESULT_CSV_HEADER] + [r.to_csv() for r in all_rows]) + "\n"
    paths = _write_outputs(s["out"], "isac", s, [(name, text)])
    if not s["no_plot"]:
        import os
        if s["experiment"] == "rate":
            from .figures import render_rates
            render_rates(rows_by_label, os.path.join(s["out"], "isac_rate.png"))
        else:
            from .figures import render_nrmse
            render_nrmse(rows_by_label, os.path.join(s["out"], "isac_sensing.png"))
    print("\n".join(paths))
    return 0


_DISPATCH = {"pattern": cmd_pattern, "focus": cmd_focus, "coarray": cmd_coarray,
             "doa": cmd_doa, "isac": cmd_isac}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _DISPATCH[args.subcommand](args)
    except (CliError, ConfigError, LayoutError, EstimationFailure,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
