"""Linear sparse-array geometries and aperture bookkeeping.

Element positions are stored in units of d0 = lambda/2, the compact-array
pitch, as real numbers so that fractional sparsity parameters (e.g. the
4.1-pitch uniform sparse array) stay exact at double precision.  All
generators anchor the first element at 0 and return strictly increasing
position lists.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum


class LayoutError(ValueError):
    """Raised for invalid generator parameters or malformed layouts."""


@dataclass(frozen=True)
class ElementLayout:
    """Ordered element positions of a linear array, in half-wavelength units."""

    positions: tuple[float, ...]
    label: str = "custom"

    def __post_init__(self):
        pos = tuple(float(p) for p in self.positions)
        if len(pos) < 2:
            raise LayoutError("layout needs at least 2 elements")
        if not all(math.isfinite(p) for p in pos):
            raise LayoutError("positions must be finite")
        if pos[0] != 0.0:
            raise LayoutError("layout must be anchored at position 0")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise LayoutError("positions must be strictly increasing")
        object.__setattr__(self, "positions", pos)

    @property
    def m(self) -> int:
        """Number of physical elements."""
        return len(self.positions)

    @property
    def max_position(self) -> float:
        return self.positions[-1]

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.positions, self.positions[1:]))

    def to_text(self) -> str:
        """Serialize as a header line plus one position per line."""
        lines = [f"# layout {self.label}"]
        lines += [repr(p) for p in self.positions]
        return "\n".join(lines) + "\n"


def layout_from_text(text: str) -> ElementLayout:
    label = "custom"
    positions = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.startswith("# layout "):
                label = line[len("# layout "):].strip()
            continue
        positions.append(float(line))
    return ElementLayout(tuple(positions), label)


class ApertureConvention(Enum):
    """How a layout's aperture is translated to meters.

    span  -- (max - min) * d0
    count -- M * (mean adjacent gap) * d0
    """

    SPAN = "span"
    COUNT = "count"


# ---------------------------------------------------------------------------
# generators


def make_compact(m: int) -> ElementLayout:
    """Compact (half-wavelength pitch) uniform linear array."""
    if m < 2:
        raise LayoutError(f"need m >= 2, got {m}")
    return ElementLayout(tuple(float(i) for i in range(m)), label=f"ca(m={m})")


def make_usa(m: int, eta: float) -> ElementLayout:
    """Uniform sparse array with pitch eta * d0, eta >= 1."""
    if m < 2:
        raise LayoutError(f"need m >= 2, got {m}")
    if eta < 1:
        raise LayoutError(f"sparsity parameter must be >= 1, got {eta}")
    return ElementLayout(tuple(i * float(eta) for i in range(m)),
                         label=f"usa(m={m},eta={eta:g})")


def make_moa(n_mo: int, m_mo: int, gamma: float) -> ElementLayout:
    """Modular array: n_mo compact modules of m_mo elements at pitch gamma*d0."""
    if n_mo < 1 or m_mo < 1 or n_mo * m_mo < 2:
        raise LayoutError("modular array needs at least 2 elements in total")
    if gamma < m_mo:
        raise LayoutError(f"inter-module pitch {gamma} < module size {m_mo}")
    pos = tuple(n * float(gamma) + i for n in range(n_mo) for i in range(m_mo))
    return ElementLayout(pos, label=f"moa(nmo={n_mo},mmo={m_mo},gamma={gamma:g})")


def make_nested(m_in: int, m_ou: int) -> ElementLayout:
    """Two-level nested array: dense inner array plus outer array at pitch m_in+1."""
    if m_in < 1 or m_ou < 1:
        raise LayoutError("nested array needs m_in, m_ou >= 1")
    inner = [float(i) for i in range(m_in)]
    outer = [float(k * (m_in + 1) - 1) for k in range(1, m_ou + 1)]
    return ElementLayout(tuple(inner + outer), label=f"na(min={m_in},mou={m_ou})")


def make_coprime(m_f: int, m_s: int) -> ElementLayout:
    """Co-prime array: union of two uniform sub-arrays with swapped pitches.

    Sub-array 1 has m_f elements at pitch m_s*d0, sub-array 2 has m_s
    elements at pitch m_f*d0; the shared origin is counted once, giving
    m_f + m_s - 1 physical elements.
    """
    if m_f < 2 or m_s < 2:
        raise LayoutError("co-prime array needs both sub-array sizes >= 2")
    if math.gcd(m_f, m_s) != 1:
        raise LayoutError(f"sub-array sizes must be co-prime, gcd({m_f},{m_s}) != 1")
    pos = sorted({k * m_s for k in range(m_f)} | {k * m_f for k in range(m_s)})
    return ElementLayout(tuple(float(p) for p in pos),
                         label=f"cpa(mf={m_f},ms={m_s})")


# Minimum-redundancy rulers: origin-anchored integer layouts whose difference
# co-array is hole-free with the largest contiguous extent.  Entries for
# m <= 12 match the published optimal apertures (3, 6, 9, 13, 17, 23, 29, 36,
# 43, 50); 13..16 come from the same verified hole-free construction and are
# within a few lags of the best published apertures.  Hole-freeness of every
# entry is re-verified at import time below.
_MRA_TABLE: dict[int, tuple[int, ...]] = {
    3: (0, 1, 3),
    4: (0, 1, 4, 6),
    5: (0, 1, 4, 7, 9),
    6: (0, 1, 6, 9, 11, 13),
    7: (0, 1, 4, 10, 12, 15, 17),
    8: (0, 1, 4, 10, 16, 18, 21, 23),
    9: (0, 1, 4, 10, 16, 22, 24, 27, 29),
    10: (0, 1, 3, 6, 13, 20, 27, 31, 35, 36),
    11: (0, 1, 3, 6, 13, 20, 27, 34, 38, 42, 43),
    12: (0, 1, 3, 6, 13, 20, 27, 34, 41, 45, 49, 50),
    13: (0, 1, 3, 6, 13, 20, 27, 34, 41, 48, 52, 56, 57),
    14: (0, 1, 3, 6, 13, 20, 27, 34, 41, 48, 55, 59, 63, 64),
    15: (0, 1, 3, 6, 13, 20, 27, 34, 41, 48, 55, 62, 66, 70, 71),
    16: (0, 1, 3, 6, 13, 20, 27, 34, 41, 48, 55, 62, 69, 73, 77, 78),
}


def _difference_set(pos) -> set[int]:
    return {int(b - a) for a, b in itertools.combinations(pos, 2)}


def _is_hole_free(pos) -> bool:
    diffs = _difference_set(pos)
    return all(l in diffs for l in range(1, int(pos[-1]) + 1))


# paranoia: a corrupted table would silently break every co-array consumer
for _m, _pos in _MRA_TABLE.items():
    assert len(_pos) == _m and _is_hole_free(_pos), f"bad MRA table entry m={_m}"


def make_mra(m: int) -> ElementLayout:
    """Minimum-redundancy array from the embedded ruler table, 3 <= m <= 16."""
    if m not in _MRA_TABLE:
        raise LayoutError(f"minimum-redundancy table covers 3..16, got {m}")
    return ElementLayout(tuple(float(p) for p in _MRA_TABLE[m]),
                         label=f"mra(m={m})")


def mra_search(m: int, max_aperture: int) -> list[ElementLayout]:
    """Exhaustively enumerate maximal hole-free rulers with m marks.

    Returns every origin-anchored integer layout of m elements whose
    difference co-array is hole-free, restricted to the largest achievable
    aperture not exceeding ``max_aperture``.  Capped at m <= 8: the search
    space grows combinatorially.
    """
    if m > 8:
        raise LayoutError("exhaustive ruler search is capped at m <= 8")
    if m < 2:
        raise LayoutError(f"need m >= 2, got {m}")
    if max_aperture < m - 1:
        raise LayoutError("max_aperture too small to place all elements")
    if m == 2:
        return [ElementLayout((0.0, 1.0), label="mra-search(m=2)")]
    for length in range(max_aperture, m - 2, -1):
        found = []
        for mid in itertools.combinations(range(1, length), m - 2):
            pos = (0,) + mid + (length,)
            if _is_hole_free(pos):
                found.append(pos)
        if found:
            return [ElementLayout(tuple(float(p) for p in pos),
                                  label=f"mra-search(m={m})")
                    for pos in found]
    return []


def make_emra(n_sub: int, sub_m: int) -> ElementLayout:
    """Extended minimum-redundancy array: n_sub MRA copies tiled contiguously.

    Copy k is translated by k * (L_sub + 1) where L_sub is the sub-array's
    max position, so the composite stays on the integer grid with no overlap.
    """
    if n_sub < 1:
        raise LayoutError(f"need n_sub >= 1, got {n_sub}")
    sub = make_mra(sub_m)
    pitch = sub.max_position + 1
    pos = tuple(k * pitch + p for k in range(n_sub) for p in sub.positions)
    return ElementLayout(pos, label=f"emra(nsub={n_sub},subm={sub_m})")


# ---------------------------------------------------------------------------
# queries


def aperture(layout: ElementLayout, conv: ApertureConvention,
             wavelength: float) -> float:
    """Physical aperture in meters under the chosen convention."""
    d0 = wavelength / 2.0
    if conv is ApertureConvention.SPAN:
        return layout.max_position * d0
    gaps = layout.spacings
    return layout.m * (sum(gaps) / len(gaps)) * d0


def on_integer_grid(layout: ElementLayout, tol: float = 1e-9) -> bool:
    """True iff every position is within tol of an integer."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return all(abs(p - round(p)) <= tol for p in layout.positions)


def integer_positions(layout: ElementLayout, tol: float = 1e-9) -> list[int]:
    """Positions rounded to the integer grid; raises off-grid."""
    if not on_integer_grid(layout, tol):
        raise LayoutError(
            f"layout {layout.label} is not on the integer d0 grid "
            "(fractional pitches such as eta=4.1 have no co-array)")
    return [round(p) for p in layout.positions]
