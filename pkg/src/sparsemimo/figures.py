"""Matplotlib rendering of pattern curves, focus grids, and sweep results.

Every CLI report path can drop a PNG next to its CSV; plotting is a side
output and never participates in the byte-determinism guarantees (those
cover the CSVs only).  The Agg backend is forced so rendering works
headless.
"""

from __future__ import annotations

import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .patterns import FocusGrid, PatternCurve

_DB_FLOOR_PATTERN = -60.0
_DB_FLOOR_FOCUS = -40.0


def _amp_to_db(gain, floor):
    g = np.maximum(np.asarray(gain, dtype=float), 10.0 ** (floor / 20.0))
    return 20.0 * np.log10(g)


def render_patterns(curves: dict[str, PatternCurve], path) -> None:
    """Overlaid far-field gain curves in dB versus sin-domain offset."""
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for label, curve in curves.items():
        ax.plot(curve.delta_theta, _amp_to_db(curve.gain, _DB_FLOOR_PATTERN),
                lw=0.9, label=label)
    ax.set_xlabel(r"$\Delta\theta = \sin\theta - \sin\theta_0$")
    ax.set_ylabel("array gain (dB)")
    ax.set_ylim(_DB_FLOOR_PATTERN, 2)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8, ncol=min(len(curves), 3))
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_focus(grid: FocusGrid, label: str, path) -> None:
    """Range-angle heat map of the focusing gain, dB scale, -40 dB floor."""
    fig, ax = plt.subplots(figsize=(6, 4.2))
    db = _amp_to_db(grid.gain, _DB_FLOOR_FOCUS)
    mesh = ax.pcolormesh(np.degrees(grid.angles), grid.ranges, db,
                         shading="nearest", cmap="viridis",
                         vmin=_DB_FLOOR_FOCUS, vmax=0.0)
    r0, th0 = grid.focus
    ax.plot(math.degrees(th0), r0, "r+", ms=10, mew=1.5)
    ax.set_xlabel("angle (deg)")
    ax.set_ylabel("range (m)")
    ax.set_title(label)
    fig.colorbar(mesh, ax=ax, label="gain (dB)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_nrmse(rows_by_label: dict[str, list], path) -> None:
    """NRMSE versus SNR on a log rate axis, one line per architecture."""
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    for label, rows in rows_by_label.items():
        x = [r.sweep_value for r in rows]
        y = [r.mean for r in rows]
        ax.semilogy(x, y, "o-", ms=4, label=label)
    ax.set_xlabel("receive SNR (dB)")
    ax.set_ylabel("DOA NRMSE")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_rates(rows_by_label: dict[str, list], path) -> None:
    """Sum rate versus user-spread radius; labels carry the channel model."""
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    for label, rows in rows_by_label.items():
        x = [r.sweep_value for r in rows]
        y = [r.mean for r in rows]
        err = [2.0 * r.stderr for r in rows]
        style = "--" if "far" in label else "-"
        ax.errorbar(x, y, yerr=err, fmt="o" + style, ms=4, capsize=2, label=label)
    ax.set_xlabel("user distribution radius (m)")
    ax.set_ylabel("sum rate (bits/s/Hz)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
