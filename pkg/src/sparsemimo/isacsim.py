"""Multi-user uplink ISAC scenario engine.

Simulates user drops in a disk, builds far-/near-field channels, applies
MRC or ZF combining with grating-lobe-aware user grouping, and sweeps sum
rate versus user-spread radius and target-DOA error versus receive SNR.

Physical channels always follow the exact spherical-wavefront model; the
``channel_model`` knob selects which model the *combiner* assumes, so the
far-field curves quantify the mismatch of plane-wave beamforming against
near-field reality.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .estimation import (EstimationFailure, SourceScene, SnapshotSet,
                         build_polar_dictionary, simulate_snapshots, steer_far,
                         steer_near, zf_music)
from .geometry import ElementLayout

C_LIGHT = 299_792_458.0

FAR_FIELD = "far_field"
NEAR_FIELD = "near_field"


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of one ISAC experiment."""

    carrier_hz: float
    layout: ElementLayout
    k_users: int
    user_disk: tuple[float, float, float]     # (center_range m, center_angle rad, radius m)
    target: tuple[float, float]               # (r_t m, theta_t rad)
    snr_db: tuple[float, ...]
    channel_model: str = NEAR_FIELD
    combiner: str = "mrc"
    grouping_threshold: float = 0.5
    trials: int = 1
    master_seed: int = 0
    snapshots: int = 32
    user_rx_snr_db: float = 10.0              # per-antenna receive SNR per user
    radius_sweep: tuple[float, ...] = ()
    sin_grid_step: float = 1e-3
    range_rings: tuple[float, ...] = ()
    jobs: int = 1

    def __post_init__(self):
        if self.k_users < 1 or self.trials < 1:
            raise ValueError("need at least one user and one trial")
        if self.user_disk[2] < 0:
            raise ValueError("disk radius must be nonnegative")
        if self.channel_model not in (FAR_FIELD, NEAR_FIELD):
            raise ValueError(f"unknown channel model {self.channel_model!r}")
        if self.combiner not in ("mrc", "zf"):
            raise ValueError(f"unknown combiner {self.combiner!r}")
        if not 0.0 <= self.grouping_threshold <= 1.0:
            raise ValueError("grouping threshold must be in [0, 1]")

    @property
    def wavelength(self) -> float:
        return C_LIGHT / self.carrier_hz


@dataclass(frozen=True)
class GroupAssignment:
    """Group index per user plus the group count."""

    groups: tuple[int, ...]
    g: int

    def __post_init__(self):
        if self.g < 1 or any(not 0 <= gi < self.g for gi in self.groups):
            raise ValueError("invalid group assignment")


@dataclass(frozen=True)
class ResultRow:
    """One aggregated experiment record."""

    sweep_var: str
    sweep_value: float
    architecture: str
    metric: str
    mean: float
    stderr: float
    trials: int
    seed: int

    def to_csv(self) -> str:
        return (f"{self.sweep_var},{self.sweep_value:.12g},{self.architecture},"
                f"{self.metric},{self.mean:.12g},{self.stderr:.12g},"
                f"{self.trials},{self.seed}")


RESULT_CSV_HEADER = "sweep_var,sweep_value,architecture,metric,mean,stderr,trials,seed"


# ---------------------------------------------------------------------------
# scene construction


def drop_users(rng_seed, disk: tuple[float, float, float],
               k: int) -> list[tuple[float, float]]:
    """K area-uniform points in the disk, as (range, angle) about the array origin."""
    center_range, center_angle, radius = disk
    if center_range - radius <= 0:
        raise ValueError("user disk crosses the array (minimum range <= 0)")
    rng = np.random.default_rng(rng_seed)
    cx = center_range * math.sin(center_angle)
    cy = center_range * math.cos(center_angle)
    rho = radius * np.sqrt(rng.random(k))
    phi = 2.0 * np.pi * rng.random(k)
    x = cx + rho * np.cos(phi)
    y = cy + rho * np.sin(phi)
    r = np.hypot(x, y)
    theta = np.arctan2(x, y)
    return list(zip(r.tolist(), theta.tolist()))


def user_channels(layout: ElementLayout, wavelength: float, users,
                  model: str) -> np.ndarray:
    """M x K channel matrix; column k is g_k times the steering vector.

    The common free-space amplitude g_k = lambda / (4 pi r_k) is referenced
    to the origin element; ``model`` picks plane-wave or spherical phases.
    """
    cols = []
    for r, theta in users:
        g = wavelength / (4.0 * np.pi * r)
        if model == FAR_FIELD:
            a = steer_far(layout, theta)
        elif model == NEAR_FIELD:
            a = steer_near(layout, wavelength, r, theta)
        else:
            raise ValueError(f"unknown channel model {model!r}")
        cols.append(g * a)
    return np.stack(cols, axis=1)


def combiner(h: np.ndarray, kind: str) -> np.ndarray:
    """MRC (matched filter) or ZF (pseudo-inverse) combining matrix, M x K."""
    if kind == "mrc":
        return h.copy()
    if kind == "zf":
        m, k = h.shape
        if k > m:
            raise ValueError("zero forcing needs K <= M")
        gram = h.conj().T @ h
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > 1e12:
            raise ValueError("zero forcing needs a full-column-rank channel")
        return h @ np.linalg.inv(gram)
    raise ValueError(f"unknown combiner {kind!r}")


def sinr_per_user(w: np.ndarray, h: np.ndarray, tx_power: float,
                  noise_power: float, groups: GroupAssignment) -> list[float]:
    """Per-user SINR; users in other groups occupy orthogonal resource blocks."""
    if w.shape != h.shape:
        raise ValueError("combiner and channel shapes differ")
    k = h.shape[1]
    cross = w.conj().T @ h                      # cross[k, j] = w_k^H h_j
    out = []
    for i in range(k):
        sig = tx_power * abs(cross[i, i]) ** 2
        interf = sum(tx_power * abs(cross[i, j]) ** 2
                     for j in range(k)
                     if j != i and groups.groups[j] == groups.groups[i])
        noise = noise_power * float(np.linalg.norm(w[:, i]) ** 2)
        out.append(sig / (interf + noise))
    return out


def sum_rate(sinrs, groups: GroupAssignment) -> float:
    """Equal time-sharing sum rate: sum_k (1/G) log2(1 + SINR_k), bits/s/Hz."""
    return float(sum(math.log2(1.0 + s) for s in sinrs) / groups.g)


def group_users(h: np.ndarray, tau: float) -> GroupAssignment:
    """Greedy coloring of the channel-correlation conflict graph.

    Users whose normalized channel correlation exceeds tau (e.g. a user
    sitting in another's grating lobe) conflict and land in different
    groups; coloring order is descending conflict degree.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must be in [0, 1]")
    k = h.shape[1]
    norms = np.linalg.norm(h, axis=0)
    corr = np.abs(h.conj().T @ h) / np.outer(norms, norms)
    adj = (corr > tau) & ~np.eye(k, dtype=bool)
    degree = adj.sum(axis=1)
    order = sorted(range(k), key=lambda i: (-degree[i], i))
    colors = [-1] * k
    for i in order:
        used = {colors[j] for j in range(k) if adj[i, j] and colors[j] >= 0}
        c = 0
        while c in used:
            c += 1
        colors[i] = c
    return GroupAssignment(tuple(colors), max(colors) + 1)


# ---------------------------------------------------------------------------
# experiments


def _trial_seed(master_seed: int, sweep_index: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(sweep_index, trial))


def _run_trials(worker, n_trials: int, jobs: int) -> list:
    """Run worker(trial) for each trial; output order is by trial index."""
    if jobs <= 1:
        return [worker(t) for t in range(n_trials)]
    out = [None] * n_trials
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for t, res in zip(range(n_trials), pool.map(worker, range(n_trials))):
            out[t] = res
    return out


def _mean_stderr(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


def run_rate_experiment(config: ScenarioConfig) -> list[ResultRow]:
    """Sum rate versus user-spread radius under the configured combining model.

    Per radius and trial: drop users, build exact near-field channels, group
    them, combine with steering vectors from ``config.channel_model``, and
    record the equal-time-share sum rate.
    """
    sweep = config.radius_sweep or (config.user_disk[2],)
    lam = config.wavelength
    layout = config.layout
    # noise floor: unit tx power, reference user at the disk center hits
    # user_rx_snr_db per antenna after MRC
    g_ref = lam / (4.0 * np.pi * config.user_disk[0])
    tx_power = 1.0
    noise_power = (tx_power * layout.m * g_ref**2
                   / 10.0 ** (config.user_rx_snr_db / 10.0))
    rows = []
    for i_r, radius in enumerate(sweep):
        disk = (config.user_disk[0], config.user_disk[1], radius)

        def one_trial(trial, disk=disk, i_r=i_r):
            seed = _trial_seed(config.master_seed, i_r, trial)
            users = drop_users(seed, disk, config.k_users)
            h_true = user_channels(layout, lam, users, NEAR_FIELD)
            h_bf = (h_true if config.channel_model == NEAR_FIELD
                    else user_channels(layout, lam, users, FAR_FIELD))
            groups = group_users(h_true, config.grouping_threshold)
            w = combiner(h_bf, config.combiner)
            sinrs = sinr_per_user(w, h_true, tx_power, noise_power, groups)
            return sum_rate(sinrs, groups)

        rates = _run_trials(one_trial, config.trials, config.jobs)
        mean, se = _mean_stderr(rates)
        rows.append(ResultRow("radius_m", float(radius), layout.label,
                              f"sum_rate_{config.channel_model}_{config.combiner}",
                              mean, se, config.trials, config.master_seed))
    return rows


def run_sensing_experiment(config: ScenarioConfig) -> list[ResultRow]:
    """Target-DOA NRMSE versus receive SNR with the projected (ZF) MUSIC estimator.

    Each trial drops users, simulates uplink snapshots carrying the user
    signals plus the target echo, projects the known user channels out, and
    scans a near-field polar dictionary for the target angle.  The receive
    SNR is the per-antenna echo-to-noise power ratio.
    """
    lam = config.wavelength
    layout = config.layout
    r_t, theta_t = config.target
    sin_grid = np.arange(-0.995, 0.9951, config.sin_grid_step)
    rings = np.asarray(config.range_rings if config.range_rings
                       else tuple(np.geomspace(r_t / 4.0, r_t * 4.0, 9)))
    dictionary = build_polar_dictionary(layout, lam, sin_grid, rings)
    a_t = steer_near(layout, lam, r_t, theta_t)
    noise_power = 1.0
    rows = []
    for i_s, snr_db in enumerate(config.snr_db):
        echo_amp = math.sqrt(noise_power * 10.0 ** (snr_db / 10.0))

        def one_trial(trial, i_s=i_s, echo_amp=echo_amp):
            seed = _trial_seed(config.master_seed, i_s, trial)
            rng = np.random.default_rng(seed)
            users = drop_users(rng, config.user_disk, config.k_users)
            h = user_channels(layout, lam, users, NEAR_FIELD)
            t = config.snapshots
            # per-antenna user receive power fixed by user_rx_snr_db
            gains = np.linalg.norm(h, axis=0) / math.sqrt(layout.m)
            amps = (math.sqrt(10.0 ** (config.user_rx_snr_db / 10.0) * noise_power)
                    / gains)
            s_u = (amps[:, None]
                   * (rng.standard_normal((config.k_users, t))
                      + 1j * rng.standard_normal((config.k_users, t)))
                   / math.sqrt(2.0))
            s_t = (echo_amp * (rng.standard_normal(t) + 1j * rng.standard_normal(t))
                   / math.sqrt(2.0))
            noise = (math.sqrt(noise_power)
                     * (rng.standard_normal((layout.m, t))
                        + 1j * rng.standard_normal((layout.m, t)))
                     / math.sqrt(2.0))
            x = h @ s_u + np.outer(a_t, s_t) + noise
            snap = SnapshotSet(x, layout, lam)
            report = zf_music(snap, h, 1, sin_grid, dictionary=dictionary,
                              detection_ratio=0.0)
            return report.angles[0] - theta_t

        errors = np.asarray(_run_trials(one_trial, config.trials, config.jobs))
        value = float(np.sqrt(np.mean(errors**2)) / math.pi)
        sq = (errors / math.pi) ** 2
        se_sq = sq.std(ddof=1) / math.sqrt(sq.size) if sq.size > 1 else 0.0
        stderr = float(se_sq / (2.0 * value)) if value > 0 else 0.0
        rows.append(ResultRow("snr_db", float(snr_db), layout.label, "nrmse_doa",
                              value, stderr, config.trials, config.master_seed))
    return rows
