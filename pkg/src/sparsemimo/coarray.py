"""Difference and sum co-arrays of integer-grid layouts.

The co-array of an M-element array collects pairwise position differences
(or sums) with their multiplicities.  Lags are stored one-sided: lag -l is
realized exactly when +l is, so the nonnegative half is lossless.
"""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import ElementLayout, integer_positions


@dataclass(frozen=True)
class LagProfile:
    """One-sided lag multiset: sorted lags with ordered-pair multiplicities."""

    lags: tuple[int, ...]
    weights: tuple[int, ...]
    source_m: int

    def __post_init__(self):
        if len(self.lags) != len(self.weights):
            raise ValueError("lags and weights length mismatch")
        if any(b <= a for a, b in zip(self.lags, self.lags[1:])):
            raise ValueError("lags must be strictly increasing")
        if not self.lags or self.lags[0] != 0:
            raise ValueError("lag 0 must be present")

    def weight_of(self, lag: int) -> int:
        try:
            return self.weights[self.lags.index(lag)]
        except ValueError:
            return 0

    def to_csv(self) -> str:
        lines = ["lag,weight"]
        lines += [f"{l},{w}" for l, w in zip(self.lags, self.weights)]
        return "\n".join(lines) + "\n"


def difference_coarray(layout: ElementLayout) -> LagProfile:
    """Nonnegative difference lags |p_i - p_j| with ordered-pair multiplicities."""
    pos = integer_positions(layout)
    counts: dict[int, int] = {}
    for pi in pos:
        for pj in pos:
            if pi >= pj:
                counts[pi - pj] = counts.get(pi - pj, 0) + 1
    lags = tuple(sorted(counts))
    return LagProfile(lags, tuple(counts[l] for l in lags), len(pos))


def sum_coarray(layout: ElementLayout) -> LagProfile:
    """Sum lags p_i + p_j over all ordered pairs."""
    pos = integer_positions(layout)
    counts: dict[int, int] = {}
    for pi in pos:
        for pj in pos:
            counts[pi + pj] = counts.get(pi + pj, 0) + 1
    lags = tuple(sorted(counts))
    return LagProfile(lags, tuple(counts[l] for l in lags), len(pos))


def max_contiguous(profile: LagProfile) -> int:
    """Largest L with {0, ..., L} all present."""
    present = set(profile.lags)
    l = 0
    while l + 1 in present:
        l += 1
    return l


def holes(profile: LagProfile) -> list[int]:
    """Missing lags strictly between 0 and the maximum lag."""
    present = set(profile.lags)
    return [l for l in range(1, profile.lags[-1]) if l not in present]


def sensing_dof(layout: ElementLayout) -> int:
    """One-sided extent of the hole-free virtual segment of the difference co-array.

    This is the resolvable-source budget available to co-array MUSIC; for
    nested-type geometries it scales as O(M^2) in the physical element count.
    """
    return max_contiguous(difference_coarray(layout))
