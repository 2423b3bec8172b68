"""Far-field beam patterns, near-field focusing patterns, and DFT codebooks.

Far-field gain is evaluated over the spatial-frequency offset
dtheta = sin(theta) - sin(theta0); with positions p_m in d0 units the
element phase is pi * p_m * dtheta.  Near-field gain uses exact spherical
wavefront distances (no Fresnel approximation) with matched-filter weights,
so the gain is 1 at the focus by construction.  All gains are amplitude
(not power) and normalized to the element count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import ElementLayout, integer_positions


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class PatternCurve:
    """Sampled far-field gain over sin-domain offsets."""

    delta_theta: np.ndarray
    gain: np.ndarray

    def __post_init__(self):
        dt = np.asarray(self.delta_theta, dtype=float)
        g = np.asarray(self.gain, dtype=float)
        if dt.size == 0 or dt.shape != g.shape:
            raise PatternError("empty or mismatched pattern samples")
        if np.any(np.diff(dt) <= 0):
            raise PatternError("delta_theta samples must be strictly increasing")
        object.__setattr__(self, "delta_theta", dt)
        object.__setattr__(self, "gain", g)

    def to_csv(self) -> str:
        lines = ["delta_theta,gain"]
        lines += [f"{d:.12g},{g:.12g}" for d, g in zip(self.delta_theta, self.gain)]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FocusGrid:
    """Sampled near-field gain over a (range, angle) grid around a focus point."""

    ranges: np.ndarray           # meters, ascending
    angles: np.ndarray           # radians, ascending
    gain: np.ndarray             # shape (len(ranges), len(angles))
    focus: tuple[float, float]   # (r0 meters, theta0 radians)

    def to_csv(self) -> str:
        lines = ["range_m,angle_rad,gain"]
        for i, r in enumerate(self.ranges):
            for j, a in enumerate(self.angles):
                lines.append(f"{r:.12g},{a:.12g},{self.gain[i, j]:.12g}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Codebook:
    """Unit-norm beamforming weight vectors with their steering targets."""

    codewords: np.ndarray        # shape (n_codewords, M)
    steering_targets: np.ndarray  # sin-domain offset per codeword

    def __post_init__(self):
        w = np.asarray(self.codewords, dtype=complex)
        norms = np.linalg.norm(w, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise PatternError("codewords must be unit norm")
        object.__setattr__(self, "codewords", w)


# ---------------------------------------------------------------------------
# far field


def farfield_pattern(layout: ElementLayout, grid) -> PatternCurve:
    """Normalized array gain (1/M)|sum_m exp(j pi p_m dtheta)| over the grid."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise PatternError("empty sample grid")
    p = np.asarray(layout.positions)
    phases = np.pi * np.outer(grid, p)
    gain = np.abs(np.exp(1j * phases).sum(axis=1)) / layout.m
    return PatternCurve(grid, gain)


def closed_form_compact_pattern(m: int, delta_theta) -> np.ndarray:
    """Dirichlet-kernel gain of a compact array; oracle for farfield_pattern.

    The removable singularities at dtheta in {0, +-2} (and any other point
    where sin(pi dtheta / 2) vanishes) evaluate to 1.
    """
    if m < 2:
        raise PatternError(f"need m >= 2, got {m}")
    dt = np.asarray(delta_theta, dtype=float)
    u = 0.5 * np.pi * dt
    den = np.sin(u)
    singular = np.isclose(den, 0.0, atol=1e-12)
    safe = np.where(singular, 1.0, den)
    out = np.abs(np.sin(m * u) / (m * safe))
    out = np.where(singular, 1.0, out)
    return out if out.ndim else float(out)


def angular_resolution(curve: PatternCurve) -> float:
    """Offset of the first null right of the main lobe.

    A null is a sample with gain below 1e-6, or a local minimum below 0.05
    for geometries whose patterns have no exact zeros (MRA/NA/CPA).
    """
    dt, g = curve.delta_theta, curve.gain
    right = np.nonzero(dt > 0)[0]
    if right.size == 0:
        raise PatternError("curve has no samples right of the main lobe")
    for i in right:
        if g[i] < 1e-6:
            return float(dt[i])
        if 0 < i < len(g) - 1 and g[i] < 0.05 and g[i] <= g[i - 1] and g[i] <= g[i + 1]:
            return float(dt[i])
    raise PatternError("no null found within the curve support")


def grating_lobe_positions(eta: float, within: float = 2.0) -> list[float]:
    """USA grating-lobe offsets {+-2k/eta} inside [-within, within]; empty for eta <= 1."""
    if eta <= 1:
        return []
    out = []
    k = 1
    while 2 * k / eta <= within + 1e-12:
        out.append(2 * k / eta)
        k += 1
    return sorted([-x for x in out]) + out


def peak_sidelobe(curve: PatternCurve, mainlobe_exclusion: float) -> tuple[float, float]:
    """Highest gain and its location outside +-mainlobe_exclusion."""
    mask = np.abs(curve.delta_theta) > mainlobe_exclusion
    if not np.any(mask):
        raise PatternError("main-lobe exclusion covers the whole curve")
    idx = np.nonzero(mask)[0]
    best = idx[np.argmax(curve.gain[idx])]
    return float(curve.gain[best]), float(curve.delta_theta[best])


# ---------------------------------------------------------------------------
# near field


def element_distances(layout: ElementLayout, wavelength: float,
                      r, theta) -> np.ndarray:
    """Exact source-to-element distances; r, theta broadcast against elements.

    Elements sit on the x axis at x_m = p_m * lambda / 2; a source at range
    r (from the origin element) and angle theta from broadside is at
    (r sin(theta), r cos(theta)).
    """
    x = np.asarray(layout.positions) * (wavelength / 2.0)
    r = np.asarray(r, dtype=float)[..., None]
    theta = np.asarray(theta, dtype=float)[..., None]
    return np.sqrt(r**2 + x**2 - 2.0 * r * x * np.sin(theta))


def nearfield_focus_pattern(layout: ElementLayout, wavelength: float,
                            focus: tuple[float, float],
                            ranges, angles) -> FocusGrid:
    """Matched-filter array gain over a (range, angle) grid for a focused beam."""
    ranges = np.asarray(ranges, dtype=float)
    angles = np.asarray(angles, dtype=float)
    if ranges.size == 0 or angles.size == 0:
        raise PatternError("empty range or angle grid")
    span_m = layout.max_position * wavelength / 2.0
    if np.any(ranges <= span_m):
        raise PatternError(f"all ranges must exceed the array span {span_m:.3g} m")
    r0, th0 = focus
    if r0 <= 0:
        raise PatternError("focus range must be positive")
    k = 2.0 * np.pi / wavelength
    d_focus = element_distances(layout, wavelength, r0, th0)  # (M,)
    rr, aa = np.meshgrid(ranges, angles, indexing="ij")
    d = element_distances(layout, wavelength, rr.ravel(), aa.ravel())
    gain = np.abs(np.exp(1j * k * (d - d_focus)).sum(axis=1)) / layout.m
    return FocusGrid(ranges, angles, gain.reshape(rr.shape), (float(r0), float(th0)))


DEPTH_UNBOUNDED = math.inf


def depth_3db(grid: FocusGrid) -> tuple[float, float]:
    """Contiguous 3-dB range interval around the focus at the focus angle.

    Returns (r_lo, r_hi); r_hi is inf when the gain never drops below
    1/sqrt(2) out to the far edge of the range grid.
    """
    r0, th0 = grid.focus
    j = int(np.argmin(np.abs(grid.angles - th0)))
    if abs(grid.angles[j] - th0) > 1e-9:
        raise PatternError("focus angle is not on the angle grid")
    cut = grid.gain[:, j]
    i0 = int(np.argmin(np.abs(grid.ranges - r0)))
    thr = 1.0 / math.sqrt(2.0)
    if cut[i0] < thr:
        raise PatternError("gain below 3 dB at the focus itself")
    lo = i0
    while lo > 0 and cut[lo - 1] >= thr:
        lo -= 1
    hi = i0
    while hi < len(cut) - 1 and cut[hi + 1] >= thr:
        hi += 1
    r_lo = float(grid.ranges[lo]) if lo > 0 else float(grid.ranges[0])
    r_hi = DEPTH_UNBOUNDED if hi == len(cut) - 1 else float(grid.ranges[hi])
    return r_lo, r_hi


# ---------------------------------------------------------------------------
# codebooks


def dft_hollow_codebook(layout: ElementLayout) -> Codebook:
    """DFT codebook of the same-aperture compact array, hollowed to the layout.

    With A the layout's max position, the (A+1)-point DFT codewords of a
    virtual compact array spanning 0..A are sampled at the layout's element
    positions and renormalized.  For a compact layout this reduces to the
    standard orthogonal DFT codebook.
    """
    pos = np.asarray(integer_positions(layout))
    n = int(pos[-1]) + 1
    bins = np.arange(n)
    # bin k steers to dtheta = 2k/n, wrapped into (-1, 1]
    targets = 2.0 * bins / n
    targets = np.where(targets > 1.0, targets - 2.0, targets)
    phases = np.pi * np.outer(targets, pos)
    w = np.exp(1j * phases)
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    order = np.argsort(targets, kind="stable")
    return Codebook(w[order], targets[order])


def codebook_coverage(cb: Codebook, layout: ElementLayout, grid) -> float:
    """Worst-case best-codeword gain over the offset grid.

    Per offset the gain is |a(dtheta)^H w| / sqrt(M) (1 for a perfectly
    matched codeword); the coverage is the minimum over the grid of the
    maximum over codewords.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or cb.codewords.size == 0:
        raise PatternError("empty codebook or grid")
    p = np.asarray(layout.positions)
    a = np.exp(1j * np.pi * np.outer(grid, p))          # (G, M)
    gains = np.abs(a @ cb.codewords.conj().T) / math.sqrt(layout.m)
    return float(gains.max(axis=1).min())
