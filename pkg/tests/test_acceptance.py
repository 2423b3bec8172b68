"""Acceptance gate: ten numbered end-to-end criteria with pinned tolerances.

Each test prints one ``criterion N ... PASS/FAIL`` line (visible under
``pytest -v -s`` or in captured output on failure) and asserts the same
condition, including its runtime budget.
"""

import math
import time

import numpy as np

from sparsemimo.cli import main as cli_main
from sparsemimo.coarray import difference_coarray, holes, max_contiguous, sensing_dof
from sparsemimo.estimation import (SourceScene, coarray_music, music_far,
                                   sample_covariance, simulate_snapshots,
                                   spatial_smoothing)
from sparsemimo.geometry import (ElementLayout, make_compact, make_coprime,
                                 make_moa, make_mra, make_nested, make_usa)
from sparsemimo.isacsim import (ScenarioConfig, run_rate_experiment,
                                run_sensing_experiment)
from sparsemimo.patterns import (DEPTH_UNBOUNDED, angular_resolution,
                                 closed_form_compact_pattern, depth_3db,
                                 farfield_pattern, nearfield_focus_pattern,
                                 peak_sidelobe)
from sparsemimo.presets import FIG5_GOOD_NRMSE, PRESETS, build_layout

LAM = 299792458.0 / 28e9


def _check(num, desc, ok, t0, budget_s):
    elapsed = time.perf_counter() - t0
    ok = bool(ok) and elapsed < budget_s
    print(f"criterion {num:2d} [{desc}]: {'PASS' if ok else 'FAIL'} "
          f"({elapsed:.1f} s / budget {budget_s:.0f} s)")
    assert ok, f"criterion {num} ({desc}) failed after {elapsed:.1f} s"


def test_criterion_01_pattern_oracle():
    t0 = time.perf_counter()
    grid = np.linspace(-2.0, 2.0, 4096)
    dev = max(np.max(np.abs(farfield_pattern(make_compact(m), grid).gain
                            - closed_form_compact_pattern(m, grid)))
              for m in (2, 4, 8, 16, 64, 128))
    _check(1, "closed-form pattern oracle", dev < 1e-12, t0, 1.0)


def test_criterion_02_resolution_formulas():
    t0 = time.perf_counter()
    step = 1e-4
    grid = np.arange(-0.2, 1.0, step)
    cases = [(make_compact(16), 0.125), (make_usa(16, 4.0), 0.03125),
             (make_moa(4, 4, 8), 0.0625)]
    ok = all(abs(angular_resolution(farfield_pattern(lay, grid)) - want) <= step
             for lay, want in cases)
    _check(2, "first-null angular resolutions", ok, t0, 1.0)


def test_criterion_03_grating_lobes():
    t0 = time.perf_counter()
    g = farfield_pattern(make_usa(16, 4.0),
                         np.array([-1.0, -0.5, 0.5, 1.0])).gain
    ok = bool(np.all(np.abs(g - 1.0) < 1e-9))
    scan = np.linspace(-1.0, 1.0, 8001)      # one period of the sin response
    for lay in (make_mra(6), make_nested(3, 3), make_coprime(4, 3)):
        peak, _ = peak_sidelobe(farfield_pattern(lay, scan),
                                mainlobe_exclusion=2 / lay.max_position)
        ok = ok and peak < 0.95
    _check(3, "grating lobes full height / sparse suppressed", ok, t0, 1.0)


def test_criterion_04_coarray_structure():
    t0 = time.perf_counter()
    mra6 = difference_coarray(make_mra(6))
    ok = max_contiguous(mra6) == 13 and holes(mra6) == []
    ok = ok and all(
        max_contiguous(difference_coarray(make_nested(mi, mo)))
        == mo * (mi + 1) - 1
        for mi in range(1, 11) for mo in range(1, 11) if mi + mo >= 2)
    ok = ok and 7 in holes(difference_coarray(make_coprime(4, 3)))
    ok = ok and sensing_dof(make_nested(8, 8)) == 71 >= 64
    _check(4, "difference co-array structure", ok, t0, 1.0)


def test_criterion_05_dof_beyond_physical():
    t0 = time.perf_counter()
    lay = make_nested(3, 3)
    sines = np.linspace(-0.8, 0.8, 8)
    scene = SourceScene(tuple((math.asin(u), math.inf, 10.0) for u in sines))
    grid = np.arange(-0.99, 0.9901, 1e-3)
    hits = 0
    for trial in range(100):
        snap = simulate_snapshots(lay, LAM, scene, 2000, 1.0, trial)
        rep = coarray_music(sample_covariance(snap), lay, 8, grid)
        est = np.sin(np.sort(rep.angles))
        if np.max(np.abs(est - sines)) < 0.01:
            hits += 1
    _check(5, "8 sources from 6 elements (co-array MUSIC)", hits >= 90, t0, 60.0)


def test_criterion_06_coherent_decorrelation():
    t0 = time.perf_counter()
    lay = make_compact(16)
    sines = np.array([-0.125, 0.125])
    scene = SourceScene(tuple((math.asin(u), math.inf, 100.0) for u in sines),
                        coherent=True)
    grid = np.arange(-0.99, 0.9901, 1e-3)
    sub_lay = ElementLayout(lay.positions[:8])
    plain_hits = smooth_hits = 0
    for trial in range(100):
        snap = simulate_snapshots(lay, LAM, scene, 1000, 1.0, trial)

        def hit(rep):
            est = np.sin(np.sort(rep.angles))
            return est.size == 2 and np.max(np.abs(est - sines)) < 0.02

        plain_hits += hit(music_far(sample_covariance(snap), lay, 2, grid))
        smooth_hits += hit(music_far(spatial_smoothing(snap, 8), sub_lay, 2, grid))
    ok = plain_hits <= 50 and smooth_hits >= 90
    _check(6, f"coherent pair: plain<=50 got {plain_hits}, "
              f"smooth>=90 got {smooth_hits}", ok, t0, 60.0)


def test_criterion_07_nearfield_focusing():
    t0 = time.perf_counter()
    ranges = np.linspace(50.0, 800.0, 151)
    angles = np.linspace(-0.2, 0.2, 81)
    focus = (200.0, 0.0)
    ok = True
    for lay in (make_compact(128), make_usa(128, 4.1)):
        grid = nearfield_focus_pattern(lay, LAM, focus, ranges, angles)
        i, j = np.unravel_index(np.argmax(grid.gain), grid.gain.shape)
        ok = ok and ranges[i] == 200.0 and angles[j] == 0.0
    cut = np.array([0.0])
    ca = nearfield_focus_pattern(make_compact(128), LAM, focus, ranges, cut)
    usa = nearfield_focus_pattern(make_usa(128, 4.1), LAM, focus, ranges, cut)
    ok = ok and depth_3db(ca)[1] == DEPTH_UNBOUNDED
    ok = ok and depth_3db(usa)[1] < 800.0
    _check(7, "focus peak + range-depth contrast", ok, t0, 30.0)


def _scenario_from_preset(preset, spec, **over):
    base = dict(
        carrier_hz=preset["carrier_hz"], layout=build_layout(spec),
        k_users=preset["k_users"],
        user_disk=(preset["disk_center_range_m"],
                   preset["disk_center_angle_rad"],
                   preset.get("disk_radius_m", 30.0)),
        target=(preset["target_range_m"], preset["target_angle_rad"]),
        snr_db=preset.get("snr_db", (0.0,)),
        combiner=preset.get("combiner", "mrc"),
        grouping_threshold=preset.get("grouping_threshold", 0.5),
        trials=preset["trials"], master_seed=preset["master_seed"],
        snapshots=preset.get("snapshots", 32),
        user_rx_snr_db=preset.get("user_rx_snr_db", 10.0),
        radius_sweep=preset.get("radius_sweep", ()),
        sin_grid_step=preset.get("sin_grid_step", 1e-3),
        range_rings=preset.get("range_rings", ()), jobs=4)
    base.update(over)
    return ScenarioConfig(**base)


def test_criterion_08_sensing_nrmse_trends():
    t0 = time.perf_counter()
    preset = PRESETS["fig5"]
    snrs = list(preset["snr_db"])
    lo, hi = snrs.index(-10.0), snrs.index(10.0)
    at_lo, at_hi = {}, {}
    for label, spec in preset["layouts"]:
        rows = run_sensing_experiment(_scenario_from_preset(preset, spec))
        at_lo[label] = rows[lo].mean
        at_hi[label] = rows[hi].mean
    ok = max(at_lo["na"], at_lo["cpa"]) < min(at_lo["usa"], at_lo["ca"])
    ok = ok and all(v < FIG5_GOOD_NRMSE for v in at_hi.values())
    _check(8, "sensing NRMSE vs SNR trends", ok, t0, 600.0)


def test_criterion_09_sum_rate_trends():
    t0 = time.perf_counter()
    preset = PRESETS["fig6"]
    radii = list(preset["radius_sweep"])
    rows = {}
    for label, spec in preset["layouts"]:
        for model in preset["channel_models"]:
            rows[label, model] = run_rate_experiment(
                _scenario_from_preset(preset, spec, channel_model=model))
    i5 = radii.index(5.0)
    ca5 = rows["ca", "near_field"][i5]
    ok = all(r[i5].mean - 2 * r[i5].stderr > ca5.mean + 2 * ca5.stderr
             for r in (rows["usa", "near_field"], rows["na", "near_field"],
                       rows["cpa", "near_field"]))
    far_means = [rows[lab, "near_field"][radii.index(150.0)].mean
                 for lab, _ in preset["layouts"]]
    ok = ok and (max(far_means) - min(far_means)) / min(far_means) <= 0.10
    for label, _ in preset["layouts"]:
        for i in range(len(radii)):
            ok = ok and (rows[label, "near_field"][i].mean
                         >= rows[label, "far_field"][i].mean)
    _check(9, "sum-rate gap, convergence, near >= far", ok, t0, 600.0)


def test_criterion_10_determinism(tmp_path):
    t0 = time.perf_counter()
    base = ["isac", "--arch", "na", "--min", "8", "--mou", "8",
            "--k-users", "6", "--trials", "4", "--radius-sweep", "5,40",
            "--seed", "3", "--no-plot"]
    texts = []
    for name, extra in (("a", []), ("b", []), ("c", ["--jobs", "4"])):
        out = tmp_path / name
        assert cli_main(base + extra + ["--out", str(out)]) == 0
        with open(out / "isac_rate.csv", encoding="utf-8") as fh:
            texts.append(fh.read())
    ok = texts[0] == texts[1] == texts[2]
    _check(10, "byte-identical reruns, jobs-invariant", ok, t0, 60.0)
