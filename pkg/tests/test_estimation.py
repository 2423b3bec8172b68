import math

import numpy as np
import pytest

from sparsemimo.estimation import (Covariance, EstimationFailure, SnapshotSet,
                                   SourceScene, build_polar_dictionary,
                                   coarray_lag_sequence, coarray_music,
                                   music_far, nrmse, polar_omp,
                                   project_out_users, sample_covariance,
                                   simulate_snapshots, spatial_smoothing,
                                   steer_far, steer_near, two_stage_near,
                                   user_projection_basis, zf_music)
from sparsemimo.geometry import make_compact, make_nested, make_usa

LAM = 299792458.0 / 28e9


def _snap(layout, scene, t, seed, noise=1.0, lam=LAM):
    return simulate_snapshots(layout, lam, scene, t, noise, seed)


def test_steer_far_phases():
    lay = make_compact(4)
    a = steer_far(lay, math.pi / 6)          # sin = 0.5
    expected = np.exp(1j * np.pi * np.arange(4) * 0.5)
    assert np.allclose(a, expected, atol=1e-12)


def test_steer_near_converges_to_far():
    lay = make_usa(16, 4.1)
    span = lay.max_position * LAM / 2
    # residual curvature phase at range c*span is ~ pi*max_position/(2c)
    bound = 1.5 * math.pi * lay.max_position / 2e6
    for ang in (0.0, 0.4, -0.7):
        near = steer_near(lay, LAM, 1e6 * span, ang)
        far = steer_far(lay, ang)
        assert np.max(np.abs(near - far)) < bound


def test_snapshots_deterministic_and_shaped():
    lay = make_compact(8)
    scene = SourceScene(((0.2, math.inf, 1.0),))
    a = _snap(lay, scene, 64, 7).data
    b = _snap(lay, scene, 64, 7).data
    c = _snap(lay, scene, 64, 8).data
    assert a.shape == (8, 64)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sample_covariance_hermitian_psd():
    lay = make_compact(8)
    scene = SourceScene(((0.1, math.inf, 2.0), (-0.4, math.inf, 1.0)))
    r = sample_covariance(_snap(lay, scene, 256, 3)).matrix
    assert np.allclose(r, r.conj().T)
    assert np.min(np.linalg.eigvalsh(r)) > 0


def test_music_recovers_two_sources():
    lay = make_compact(16)
    angles = (math.asin(-0.3), math.asin(0.42))
    scene = SourceScene(tuple((a, math.inf, 10.0) for a in angles))
    snap = _snap(lay, scene, 2000, 5)
    grid = np.arange(-0.99, 0.9901, 1e-3)
    rep = music_far(sample_covariance(snap), lay, 2, grid)
    est = np.sin(np.sort(rep.angles))     # report angles are radians
    assert np.allclose(est, [-0.3, 0.42], atol=2e-3)


def test_music_argument_checks():
    lay = make_compact(8)
    r = Covariance(np.eye(8, dtype=complex))
    assert music_far(r, lay, 0, np.linspace(-1, 1, 10)).angles == ()
    with pytest.raises(ValueError):
        music_far(r, lay, 8, np.linspace(-1, 1, 10))


def test_smoothing_full_subarray_equals_sample_covariance():
    lay = make_compact(12)
    scene = SourceScene(((0.3, math.inf, 5.0),))
    snap = _snap(lay, scene, 128, 1)
    full = spatial_smoothing(snap, 12).matrix
    plain = sample_covariance(snap).matrix
    assert np.allclose(full, plain, atol=1e-12)


def test_smoothing_rejects_nonuniform_layouts():
    lay = make_nested(4, 4)
    scene = SourceScene(((0.0, math.inf, 1.0),))
    with pytest.raises(ValueError, match="uniform"):
        spatial_smoothing(_snap(lay, scene, 16, 0), 4)


def test_smoothing_restores_rank_for_coherent_sources():
    lay = make_compact(16)
    scene = SourceScene(((math.asin(-0.2), math.inf, 10.0),
                         (math.asin(0.2), math.inf, 10.0)), coherent=True)
    snap = _snap(lay, scene, 1000, 2)
    # coherent pair leaves one dominant eigenvalue; smoothing restores two
    def top_ratio(r):
        w = np.linalg.eigvalsh(r)[::-1]
        return w[1] / w[0]
    assert top_ratio(sample_covariance(snap).matrix) < 0.02
    assert top_ratio(spatial_smoothing(snap, 8).matrix) > 0.1


def test_coarray_lag_sequence_matches_model():
    lay = make_nested(3, 3)
    u, p, noise = 0.37, 4.0, 0.5
    a = steer_far(lay, math.asin(u))
    r = Covariance(p * np.outer(a, a.conj()) + noise * np.eye(lay.m))
    z = coarray_lag_sequence(r, lay)
    expected = p * np.exp(1j * np.pi * np.arange(len(z)) * u)
    expected[0] += noise
    assert np.max(np.abs(z - expected)) < 1e-9


def test_coarray_music_matches_plain_music_single_source():
    lay = make_compact(10)
    scene = SourceScene(((math.asin(0.25), math.inf, 10.0),))
    snap = _snap(lay, scene, 2000, 9)
    grid = np.arange(-0.99, 0.9901, 1e-3)
    r = sample_covariance(snap)
    plain = music_far(r, lay, 1, grid).angles[0]
    virt = coarray_music(r, lay, 1, grid).angles[0]
    assert abs(plain - virt) < 2e-3


def test_coarray_music_beyond_physical_aperture():
    # 6 physical elements resolving 8 sources via the virtual array
    lay = make_nested(3, 3)
    sines = np.linspace(-0.8, 0.8, 8)
    scene = SourceScene(tuple((math.asin(u), math.inf, 10.0) for u in sines))
    snap = _snap(lay, scene, 2000, 12)
    grid = np.arange(-0.99, 0.9901, 1e-3)
    rep = coarray_music(sample_covariance(snap), lay, 8, grid)
    assert np.max(np.abs(np.sin(np.sort(rep.angles)) - sines)) < 0.01
    with pytest.raises(ValueError):
        coarray_music(sample_covariance(snap), lay, 12, grid)


def test_two_stage_near_deep_near_field():
    lay = make_usa(128, 4.1)
    scene = SourceScene(((0.0, 200.0, 10.0),))
    snap = _snap(lay, scene, 200, 4)
    grid = np.arange(-0.2, 0.2001, 5e-4)
    ranges = np.geomspace(50.0, 800.0, 65)
    rep = two_stage_near(snap, 1, grid, ranges)
    assert abs(rep.angles[0]) < 0.01
    assert abs(rep.ranges[0] - 200.0) < 20.0
    assert rep.notes == ()


def test_two_stage_flags_far_field_degenerate():
    lay = make_compact(16)      # tiny aperture: range unobservable at 200 m
    scene = SourceScene(((0.1, 200.0, 10.0),))
    snap = _snap(lay, scene, 500, 4)
    grid = np.arange(-0.9, 0.9001, 1e-3)
    rep = two_stage_near(snap, 1, grid, np.geomspace(50.0, 800.0, 33))
    assert any("far_field_degenerate" in n for n in rep.notes)


def test_polar_omp_recovers_grid_source():
    lay = make_usa(64, 4.1)
    rings = np.geomspace(50.0, 800.0, 17)
    r0 = float(rings[8])
    u0 = 0.125
    scene = SourceScene(((math.asin(u0), r0, 10.0),))
    snap = _snap(lay, scene, 100, 6, noise=1e-4)
    grid = np.arange(-0.5, 0.5001, 1e-3)
    rep = polar_omp(snap, 1, grid, rings)
    assert abs(math.sin(rep.angles[0]) - u0) < 2e-3
    assert rep.ranges[0] == r0


def test_polar_omp_residuals_decrease():
    lay = make_usa(64, 4.1)
    rings = np.geomspace(50.0, 800.0, 9)
    scene = SourceScene(((0.05, 150.0, 10.0), (-0.3, 300.0, 5.0)))
    snap = _snap(lay, scene, 100, 8)
    rep = polar_omp(snap, 2, np.arange(-0.5, 0.5001, 2e-3), rings)
    # initial residual plus one entry per extracted component
    assert len(rep.residual_norms) == 3
    assert rep.residual_norms[2] <= rep.residual_norms[1] <= \
        rep.residual_norms[0]


def test_user_projection_nulls_user_channels():
    rng = np.random.default_rng(0)
    h = rng.standard_normal((16, 3)) + 1j * rng.standard_normal((16, 3))
    q = user_projection_basis(h)
    assert q.shape == (16, 3)
    # projector annihilates the user span and is idempotent
    assert np.max(np.abs(project_out_users(h, q))) < 1e-12
    x = rng.standard_normal((16, 5)) + 1j * rng.standard_normal((16, 5))
    once = project_out_users(x, q)
    assert np.allclose(project_out_users(once, q), once, atol=1e-12)


def test_user_projection_rejects_duplicate_channels():
    h = np.ones((8, 2), dtype=complex)
    with pytest.raises(ValueError, match="rank"):
        user_projection_basis(h)


def test_zf_music_without_users_matches_music():
    lay = make_compact(16)
    scene = SourceScene(((math.asin(0.3), math.inf, 10.0),))
    snap = _snap(lay, scene, 500, 3)
    grid = np.arange(-0.99, 0.9901, 1e-3)
    plain = music_far(sample_covariance(snap), lay, 1, grid).angles[0]
    proj = zf_music(snap, np.zeros((16, 0), dtype=complex), 1, grid).angles[0]
    assert abs(plain - proj) < 1e-6


def test_zf_music_rejects_unobservable_target():
    lay = make_compact(16)
    ang = math.asin(0.3)
    a_t = steer_near(lay, LAM, 200.0, ang)
    scene = SourceScene(((ang, 200.0, 10.0),))
    snap = _snap(lay, scene, 500, 3)
    # the user channel IS the target channel: projection removes the echo
    with pytest.raises(EstimationFailure):
        zf_music(snap, a_t[:, None], 1, np.arange(-0.99, 0.9901, 1e-3))


def test_zf_music_polar_dictionary_path():
    lay = make_usa(128, 4.1)
    scene = SourceScene(((math.asin(0.4), 200.0, 30.0),))
    snap = _snap(lay, scene, 32, 5)
    grid = np.arange(-0.995, 0.9951, 5e-4)
    rings = np.geomspace(100.0, 400.0, 7)
    d = build_polar_dictionary(lay, LAM, grid, rings)
    rep = zf_music(snap, np.zeros((128, 0), dtype=complex), 1, grid,
                   dictionary=d, detection_ratio=0.0)
    assert abs(rep.angles[0] - math.asin(0.4)) < 1e-3


def test_nrmse_definition():
    assert nrmse([0.1, -0.1], 0.0) == pytest.approx(0.1 / math.pi)
    with pytest.raises(ValueError):
        nrmse([], 0.0)
