"""Snapshot simulation and the DOA estimation suite.

Covers plain MUSIC, spatial-smoothing MUSIC for coherent sources on uniform
arrays, co-array MUSIC on the hole-free virtual segment, a two-stage
angle-then-range near-field estimator, polar-domain OMP, and the projected
(ZF) MUSIC estimator used by the multi-user sensing harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .coarray import difference_coarray, max_contiguous
from .geometry import ElementLayout, integer_positions, make_compact


class EstimationFailure(RuntimeError):
    """An estimator could not produce the requested number of estimates."""


FAR_FIELD = math.inf


@dataclass(frozen=True)
class SourceScene:
    """Narrowband sources: (angle_rad, range_m or inf for far field, power)."""

    sources: tuple[tuple[float, float, float], ...]
    coherent: bool = False

    def __post_init__(self):
        for ang, rng, pwr in self.sources:
            if not -math.pi / 2 < ang < math.pi / 2:
                raise ValueError(f"angle {ang} outside (-pi/2, pi/2)")
            if not rng > 0:
                raise ValueError("source range must be positive (inf for far field)")
            if not pwr > 0:
                raise ValueError("source power must be positive")


@dataclass(frozen=True)
class SnapshotSet:
    """Complex M x T array observations with their generating geometry."""

    data: np.ndarray
    layout: ElementLayout
    wavelength: float

    def __post_init__(self):
        x = np.asarray(self.data, dtype=complex)
        if x.ndim != 2 or x.shape[0] != self.layout.m or x.shape[1] < 1:
            raise ValueError("data must be M x T with T >= 1")
        object.__setattr__(self, "data", x)

    @property
    def t(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class Covariance:
    """Hermitian sample covariance."""

    matrix: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.matrix, dtype=complex)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError("covariance must be square")
        if np.max(np.abs(r - r.conj().T)) > 1e-10 * max(1.0, np.abs(r).max()):
            raise ValueError("covariance must be Hermitian")
        object.__setattr__(self, "matrix", 0.5 * (r + r.conj().T))


@dataclass(frozen=True)
class EstimateReport:
    """Estimator output: sorted angles, matching ranges when available."""

    angles: tuple[float, ...]
    ranges: tuple[float, ...] = ()
    spectrum: np.ndarray | None = None
    grid: np.ndarray | None = None
    notes: tuple[str, ...] = ()
    residual_norms: tuple[float, ...] = ()

    def to_csv_rows(self, method: str, truth: float | None = None,
                    trial: int = 0) -> list[str]:
        rows = []
        for i, ang in enumerate(self.angles):
            rng = self.ranges[i] if i < len(self.ranges) else ""
            tr = f"{truth:.12g}" if truth is not None else ""
            rngtxt = f"{rng:.12g}" if rng != "" else ""
            rows.append(f"{trial},{tr},{ang:.12g},{rngtxt},{method}")
        return rows


# ---------------------------------------------------------------------------
# steering and snapshots


def steer_far(layout: ElementLayout, angle: float) -> np.ndarray:
    """Plane-wave steering vector exp(j pi p_m sin(angle)); norm sqrt(M)."""
    if not -math.pi / 2 < angle < math.pi / 2:
        raise ValueError(f"angle {angle} outside (-pi/2, pi/2)")
    p = np.asarray(layout.positions)
    return np.exp(1j * np.pi * p * math.sin(angle))


def steer_near(layout: ElementLayout, wavelength: float, range_m: float,
               angle: float) -> np.ndarray:
    """Spherical-wavefront steering vector, phase referenced to the origin element."""
    if range_m <= 0:
        raise ValueError("range must be positive")
    if math.isinf(range_m):
        return steer_far(layout, angle)
    x = np.asarray(layout.positions) * (wavelength / 2.0)
    r_m = np.sqrt(range_m**2 + x**2 - 2.0 * range_m * x * math.sin(angle))
    return np.exp(-2j * np.pi / wavelength * (r_m - range_m))


def _steer(layout, wavelength, angle, range_m):
    if math.isinf(range_m):
        return steer_far(layout, angle)
    return steer_near(layout, wavelength, range_m, angle)


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    """Circular complex Gaussian with unit variance per entry."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def simulate_snapshots(layout: ElementLayout, wavelength: float,
                       scene: SourceScene, t: int, noise_power: float,
                       rng_seed) -> SnapshotSet:
    """X = A S + N with circular Gaussian waveforms and white noise.

    Coherent scenes share one waveform across sources (scaled per source);
    the output is fully determined by the seed.
    """
    if t < 1:
        raise ValueError("need at least one snapshot")
    rng = np.random.default_rng(rng_seed)
    m = layout.m
    k = len(scene.sources)
    x = np.zeros((m, t), dtype=complex)
    if k:
        a = np.stack([_steer(layout, wavelength, ang, rng_m)
                      for ang, rng_m, _ in scene.sources], axis=1)
        powers = np.array([p for _, _, p in scene.sources])
        if scene.coherent:
            shared = _cn(rng, t)
            s = np.sqrt(powers)[:, None] * shared[None, :]
        else:
            s = np.sqrt(powers)[:, None] * _cn(rng, (k, t))
        x = a @ s
    if noise_power > 0:
        x = x + math.sqrt(noise_power) * _cn(rng, (m, t))
    return SnapshotSet(x, layout, wavelength)


def sample_covariance(snap: SnapshotSet) -> Covariance:
    """R = X X^H / T, Hermitian-symmetrized."""
    x = snap.data
    r = x @ x.conj().T / snap.t
    return Covariance(0.5 * (r + r.conj().T))


# ---------------------------------------------------------------------------
# MUSIC family


def _refine_peak(grid: np.ndarray, logspec: np.ndarray, i: int) -> float:
    """Parabolic interpolation of a local maximum on a uniform-ish grid."""
    if i == 0 or i == len(grid) - 1:
        return float(grid[i])
    y0, y1, y2 = logspec[i - 1], logspec[i], logspec[i + 1]
    denom = y0 - 2 * y1 + y2
    if denom >= 0:
        return float(grid[i])
    shift = 0.5 * (y0 - y2) / denom
    shift = min(max(shift, -1.0), 1.0)
    step = 0.5 * (grid[min(i + 1, len(grid) - 1)] - grid[max(i - 1, 0)])
    return float(grid[i] + shift * step)


def _pick_peaks(grid: np.ndarray, spectrum: np.ndarray, k: int) -> list[float]:
    """K largest strict local maxima with parabolic refinement; raises if short."""
    s = np.asarray(spectrum)
    idx = [i for i in range(len(s))
           if (i == 0 or s[i] >= s[i - 1]) and (i == len(s) - 1 or s[i] > s[i + 1])
           and s[i] > 0]
    idx.sort(key=lambda i: s[i], reverse=True)
    if len(idx) < k:
        raise EstimationFailure(f"found {len(idx)} peaks, need {k}")
    with np.errstate(divide="ignore"):
        logspec = np.log10(np.maximum(s, 1e-300))
    return [_refine_peak(grid, logspec, i) for i in idx[:k]]


def music_far(r: Covariance, layout: ElementLayout, k: int, grid) -> EstimateReport:
    """Classic MUSIC over a sin-domain grid; peaks refined between samples."""
    grid = np.asarray(grid, dtype=float)
    m = layout.m
    if k >= m:
        raise ValueError(f"source count {k} must be below element count {m}")
    if k == 0:
        return EstimateReport(angles=())
    _, vecs = np.linalg.eigh(r.matrix)
    en = vecs[:, :m - k]
    p = np.asarray(layout.positions)
    a = np.exp(1j * np.pi * np.outer(p, grid))          # (M, G)
    denom = np.sum(np.abs(en.conj().T @ a) ** 2, axis=0)
    spectrum = 1.0 / np.maximum(denom, 1e-300)
    sines = _pick_peaks(grid, spectrum, k)
    angles = tuple(sorted(math.asin(min(max(u, -1.0), 1.0)) for u in sines))
    return EstimateReport(angles=angles, spectrum=spectrum, grid=grid)


def spatial_smoothing(snap: SnapshotSet, subarray_len: int) -> Covariance:
    """Forward-averaged covariance over sliding subarrays of a uniform layout.

    Restores covariance rank for coherent sources; only defined for uniform
    (compact or USA) layouts since subarrays must share one manifold.
    """
    gaps = snap.layout.spacings
    if max(gaps) - min(gaps) > 1e-9:
        raise ValueError("spatial smoothing needs a uniform layout; "
                         "non-uniform sparse arrays have unequal spacings")
    m = snap.layout.m
    if not 1 <= subarray_len <= m:
        raise ValueError(f"subarray length must be in 1..{m}")
    r = sample_covariance(snap).matrix
    n_sub = m - subarray_len + 1
    acc = np.zeros((subarray_len, subarray_len), dtype=complex)
    for i in range(n_sub):
        acc += r[i:i + subarray_len, i:i + subarray_len]
    return Covariance(acc / n_sub)


def coarray_lag_sequence(r: Covariance, layout: ElementLayout) -> np.ndarray:
    """Lag-averaged virtual correlation over the hole-free segment 0..L."""
    pos = integer_positions(layout)
    profile = difference_coarray(layout)
    ell = max_contiguous(profile)
    acc = np.zeros(ell + 1, dtype=complex)
    cnt = np.zeros(ell + 1)
    for i, pi in enumerate(pos):
        for j, pj in enumerate(pos):
            lag = pi - pj
            if 0 <= lag <= ell:
                acc[lag] += r.matrix[i, j]
                cnt[lag] += 1
    return acc / cnt


def coarray_music(r: Covariance, layout: ElementLayout, k: int,
                  grid) -> EstimateReport:
    """MUSIC on the Toeplitz-augmented virtual array of the difference co-array.

    Entries of R sharing a lag are averaged into a correlation sequence over
    the hole-free segment -L..L; its Hermitian Toeplitz matrix is the
    covariance of a virtual compact array with L+1 elements, which supports
    up to L sources from M physical elements.
    """
    profile = difference_coarray(layout)
    ell = max_contiguous(profile)
    if k > ell:
        raise ValueError(f"requested {k} sources exceeds co-array DoF {ell}")
    if k == 0:
        return EstimateReport(angles=())
    z = coarray_lag_sequence(r, layout)
    t_aug = scipy.linalg.toeplitz(z, z.conj())
    virtual = make_compact(ell + 1)
    return music_far(Covariance(0.5 * (t_aug + t_aug.conj().T)), virtual, k, grid)


def two_stage_near(snap: SnapshotSet, k: int, angle_grid,
                   range_grid) -> EstimateReport:
    """Angles from far-field MUSIC, then a local polar sweep per angle.

    The plane-wave fit of stage 1 is biased by wavefront curvature for
    sources well inside the Rayleigh distance, so stage 2 scans the same
    noise subspace over the range grid jointly with a small sin-domain
    window around each stage-1 angle and keeps the best cell.  A range peak
    on the grid boundary or a flat range spectrum is flagged as far-field
    degenerate.
    """
    if k == 0:
        return EstimateReport(angles=())
    angle_grid = np.asarray(angle_grid, dtype=float)
    r = sample_covariance(snap)
    far = music_far(r, snap.layout, k, angle_grid)
    m = snap.layout.m
    _, vecs = np.linalg.eigh(r.matrix)
    en = vecs[:, :m - k]
    range_grid = np.asarray(range_grid, dtype=float)
    step = float(np.median(np.diff(angle_grid)))
    angles = []
    ranges = []
    notes = []
    for ang in far.angles:
        u0 = math.sin(ang)
        window = u0 + step * np.arange(-24, 25)
        window = window[np.abs(window) < 1.0]
        local = build_polar_dictionary(snap.layout, snap.wavelength,
                                       window, range_grid)
        denom = np.sum(np.abs(en.conj().T @ (local.atoms / math.sqrt(m))) ** 2,
                       axis=0)
        spec = (1.0 / np.maximum(denom, 1e-300)).reshape(window.size,
                                                         range_grid.size)
        i_a, i_r = np.unravel_index(int(np.argmax(spec)), spec.shape)
        angles.append(math.asin(float(window[i_a])))
        ranges.append(float(range_grid[i_r]))
        cut = spec[i_a]
        flat = cut.max() / max(cut.min(), 1e-300) < 2.0
        if i_r in (0, range_grid.size - 1) or flat:
            notes.append(f"far_field_degenerate(angle={ang:.6g})")
    order = np.argsort(angles)
    return EstimateReport(angles=tuple(angles[i] for i in order),
                          ranges=tuple(ranges[i] for i in order),
                          spectrum=far.spectrum, grid=far.grid,
                          notes=tuple(notes))


# ---------------------------------------------------------------------------
# greedy / projected estimators


def polar_omp(snap: SnapshotSet, k: int, angle_grid,
              range_rings) -> EstimateReport:
    """Orthogonal matching pursuit over a polar (sin-angle x range-ring) dictionary.

    The measurement is the dominant component of the snapshots (principal
    eigenvector of the sample covariance, which for T=1 is the snapshot
    itself); atoms are unit-norm near-field steering vectors on the
    sin-domain angle grid, matching the other estimators' conventions.
    """
    if k < 1:
        raise ValueError("need k >= 1")
    angle_grid = np.asarray(angle_grid, dtype=float)   # sin-domain samples
    range_rings = np.asarray(range_rings, dtype=float)
    n_atoms = angle_grid.size * range_rings.size
    if n_atoms < k:
        raise ValueError(f"dictionary of {n_atoms} atoms cannot support k={k}")
    m = snap.layout.m
    atoms = build_polar_dictionary(snap.layout, snap.wavelength,
                                   angle_grid, range_rings).atoms / math.sqrt(m)
    coords = [(float(u), float(rg)) for u in angle_grid for rg in range_rings]

    r = sample_covariance(snap)
    vals, vecs = np.linalg.eigh(r.matrix)
    y = vecs[:, -1] * math.sqrt(max(vals[-1], 0.0) * snap.t)

    residual = y.copy()
    chosen: list[int] = []
    res_norms = [float(np.linalg.norm(residual))]
    for _ in range(k):
        corr = np.abs(atoms.conj().T @ residual)
        corr[chosen] = -1.0
        chosen.append(int(np.argmax(corr)))
        basis = atoms[:, chosen]
        coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
        residual = y - basis @ coef
        res_norms.append(float(np.linalg.norm(residual)))
    picks = sorted(coords[i] for i in chosen)
    return EstimateReport(angles=tuple(math.asin(a) for a, _ in picks),
                          ranges=tuple(r_ for _, r_ in picks),
                          residual_norms=tuple(res_norms))


def user_projection_basis(user_channels: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the user-channel column space; raises if rank-deficient."""
    h = np.asarray(user_channels, dtype=complex)
    if h.size == 0:
        return np.zeros((h.shape[0], 0), dtype=complex)
    # near-collinear columns are fine for projection; reject only true
    # deficiency (e.g. duplicated channels), where the span is ill-defined
    s = np.linalg.svd(h, compute_uv=False)
    if s[-1] < 1e-13 * s[0]:
        raise ValueError("user channel matrix is rank-deficient")
    q, _ = np.linalg.qr(h)
    return q


def project_out_users(x: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Apply the orthogonal-complement projector I - Q Q^H to columns of x."""
    if q.shape[1] == 0:
        return x
    return x - q @ (q.conj().T @ x)


@dataclass(frozen=True)
class PolarDictionary:
    """Precomputed near-field steering atoms over an angle x range grid.

    ``atoms`` has shape (M, n_angles * n_ranges), range-major within each
    angle; reusing one dictionary across Monte Carlo trials avoids
    re-evaluating the steering phases.
    """

    sin_grid: np.ndarray
    range_grid: np.ndarray
    atoms: np.ndarray


def build_polar_dictionary(layout: ElementLayout, wavelength: float,
                           sin_grid, range_grid) -> PolarDictionary:
    sin_grid = np.asarray(sin_grid, dtype=float)
    range_grid = np.asarray(range_grid, dtype=float)
    x = np.asarray(layout.positions) * (wavelength / 2.0)
    angles = np.arcsin(np.clip(sin_grid, -1.0, 1.0))
    # distances: (n_angles, n_ranges, M)
    rr = range_grid[None, :, None]
    sin_a = np.sin(angles)[:, None, None]
    d = np.sqrt(rr**2 + x[None, None, :] ** 2 - 2.0 * rr * x[None, None, :] * sin_a)
    phase = -2.0 * np.pi / wavelength * (d - rr)
    atoms = np.exp(1j * phase).reshape(-1, x.size).T
    return PolarDictionary(sin_grid, range_grid, atoms)


def _projected_spectrum(q: np.ndarray, es: np.ndarray, atoms: np.ndarray,
                        m: int) -> np.ndarray:
    """Pseudo-spectrum of projected unit-modulus atoms against a signal subspace.

    Uses ||E_n^H a_p||^2 = ||a_p||^2 - ||E_s^H a_p||^2 on the projected atom
    a_p = (I - Q Q^H) a, so neither the projector nor the noise subspace is
    ever formed.  Atoms inside the user span (||a_p|| ~ 0) score 0.
    """
    k_u = q.shape[1]
    qh_a = q.conj().T @ atoms if k_u else np.zeros((0, atoms.shape[1]))
    n2 = m - np.sum(np.abs(qh_a) ** 2, axis=0)
    es_a = es.conj().T @ atoms
    if k_u:
        es_a = es_a - (es.conj().T @ q) @ qh_a
    s2 = np.sum(np.abs(es_a) ** 2, axis=0)
    valid = n2 > 1e-9 * m
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(valid, n2 / np.maximum(n2 - s2, 1e-300), 0.0)


def zf_music(snap: SnapshotSet, user_channels: np.ndarray, k_t: int, grid,
             range_grid=None, dictionary: PolarDictionary | None = None,
             detection_ratio: float = 3.0) -> EstimateReport:
    """Projected MUSIC: null the user channels, then locate the targets.

    The snapshots are projected onto the orthogonal complement of the user
    channel column space and the target angles are read from the projected
    pseudo-spectrum.  With a range grid (or precomputed polar dictionary)
    the scan uses near-field steering and takes the best range per angle,
    which breaks the grating ambiguities a plain far-field scan keeps.

    ``detection_ratio`` guards against unobservable targets (e.g. a target
    steering vector inside the user-channel span): a peak less than this
    factor above the median spectrum raises EstimationFailure.  Pass 0 to
    always return the best peak.
    """
    h = np.asarray(user_channels, dtype=complex).reshape(snap.layout.m, -1)
    k_u = h.shape[1]
    m = snap.layout.m
    if k_u + k_t >= m:
        raise ValueError(f"k_u + k_t = {k_u + k_t} must stay below M = {m}")
    if k_t == 0:
        return EstimateReport(angles=())
    q = user_projection_basis(h)
    xp = project_out_users(snap.data, q)
    # signal subspace of the projected data; SVD also covers T < M
    u, s, _ = np.linalg.svd(xp, full_matrices=False)
    es = u[:, :k_t]

    grid = np.asarray(grid, dtype=float)
    if dictionary is None and range_grid is not None:
        dictionary = build_polar_dictionary(snap.layout, snap.wavelength,
                                            grid, range_grid)
    if dictionary is not None:
        grid = dictionary.sin_grid
        atoms = dictionary.atoms
        n_rings = dictionary.range_grid.size
    else:
        p = np.asarray(snap.layout.positions)
        atoms = np.exp(1j * np.pi * np.outer(p, grid))
        n_rings = 1

    spec = _projected_spectrum(q, es, atoms, m)
    if n_rings > 1:
        spec = spec.reshape(grid.size, n_rings).max(axis=1)
    if not np.any(spec > 0):
        raise EstimationFailure("all steering vectors lie in the user-channel span")
    if detection_ratio > 0:
        med = float(np.median(spec[spec > 0]))
        if spec.max() < detection_ratio * med:
            raise EstimationFailure(
                "no confident target peak after user projection "
                f"(peak/median {spec.max() / med:.2f} < {detection_ratio})")
    sines = _pick_peaks(grid, spec, k_t)
    if dictionary is not None:
        # the coarse grid can undersample a large-aperture main lobe; rescan
        # a fine window around each coarse peak with fresh near-field atoms
        step = float(np.median(np.diff(grid)))
        refined = []
        for u in sines:
            fine = np.arange(u - 6 * step, u + 6 * step, step / 50.0)
            fine = fine[np.abs(fine) < 1.0]
            local = build_polar_dictionary(snap.layout, snap.wavelength,
                                           fine, dictionary.range_grid)
            fspec = _projected_spectrum(q, es, local.atoms, m)
            fspec = fspec.reshape(fine.size, -1).max(axis=1)
            with np.errstate(divide="ignore"):
                flog = np.log10(np.maximum(fspec, 1e-300))
            refined.append(_refine_peak(fine, flog, int(np.argmax(fspec))))
        sines = refined
    angles = tuple(sorted(math.asin(min(max(v, -1.0), 1.0)) for v in sines))
    return EstimateReport(angles=angles, spectrum=spec, grid=grid)


def nrmse(estimates, truth: float) -> float:
    """Root mean squared angle error over trials, normalized by the pi scan width."""
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        raise ValueError("need at least one trial")
    return float(np.sqrt(np.mean((est - truth) ** 2)) / math.pi)
