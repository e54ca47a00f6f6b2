"""Magnetization-sector bases for a spin-1/2 chain.

A configuration with n down spins on L sites is encoded as a strictly
increasing tuple of 1-based positions.  Sector bases are ordered
lexicographically and ranked through the combinatorial number system,
so the index of a configuration costs O(n) binomials instead of a scan.

The module also provides the gap coordinates used for a single droplet
of n down spins on the infinite chain (the spacings N_2..N_n between
consecutive particles, each >= 1, boxed at some n_max) and the
translation orbits of the ring used to block-diagonalize cyclic chains
by momentum.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

# Builders refuse sector or gap domains larger than this.
DIMENSION_GUARD = 5_000_000


class DimensionGuardError(ValueError):
    """Requested basis exceeds the hard dimension guard."""


def _check_config(config: tuple[int, ...], L: int) -> None:
    if any(x < 1 or x > L for x in config):
        raise ValueError(f"positions must lie in [1, {L}]: {config}")
    if any(a >= b for a, b in zip(config, config[1:])):
        raise ValueError(f"positions must be strictly increasing: {config}")


def sector_dimension(L: int, n: int) -> int:
    if L < 0 or n < 0 or n > L:
        raise ValueError(f"need 0 <= n <= L, got L={L}, n={n}")
    return math.comb(L, n)


def rank_config(config: tuple[int, ...], L: int) -> int:
    """Lexicographic index of ``config`` within the (L, n) sector.

    Uses the combinatorial number system: the count of sectors
    preceding the configuration is a telescoping sum of binomials
    (hockey-stick identity), so no enumeration is needed.
    """
    _check_config(config, L)
    n = len(config)
    rank = 0
    prev = 0
    for i, c in enumerate(config):
        # configurations agreeing up to i whose next position is < c
        rank += math.comb(L - prev, n - i) - math.comb(L - c + 1, n - i)
        prev = c
    return rank


def unrank_config(L: int, n: int, index: int) -> tuple[int, ...]:
    """Inverse of :func:`rank_config` (greedy digit extraction)."""
    dim = sector_dimension(L, n)
    if index < 0 or index >= dim:
        raise ValueError(f"index {index} out of range for dim {dim}")
    out = []
    prev = 0
    remaining = index
    for i in range(n):
        c = prev + 1
        while True:
            block = math.comb(L - c, n - i - 1)
            if remaining < block:
                break
            remaining -= block
            c += 1
        out.append(c)
        prev = c
    return tuple(out)


@dataclass(frozen=True)
class SectorBasis:
    """Ordered basis of the n-down-spin sector on L sites."""

    L: int
    n: int
    configs: tuple[tuple[int, ...], ...]
    _index: dict = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        if not self._index:
            self._index.update({c: i for i, c in enumerate(self.configs)})

    def __len__(self) -> int:
        return len(self.configs)

    def __iter__(self):
        return iter(self.configs)

    def __getitem__(self, i: int) -> tuple[int, ...]:
        return self.configs[i]

    def index(self, config: tuple[int, ...]) -> int:
        return self._index[config]


def enumerate_sector(L: int, n: int) -> SectorBasis:
    """All n-down configurations on L sites, lexicographically ordered."""
    dim = sector_dimension(L, n)
    if dim > DIMENSION_GUARD:
        raise DimensionGuardError(
            f"sector (L={L}, n={n}) has dimension {dim} > {DIMENSION_GUARD}"
        )
    configs = tuple(combinations(range(1, L + 1), n))
    return SectorBasis(L=L, n=n, configs=configs)


class GapDomain(Sequence):
    """Boxed gap coordinates (N_2..N_n), 1 <= N_k <= n_max, lexicographic.

    Acts as an ordered immutable sequence of gap tuples without
    materializing them; indexing is mixed-radix arithmetic in base
    n_max with digits N_k - 1.  For n = 1 the domain is the single
    empty tuple.
    """

    def __init__(self, n: int, n_max: int):
        if n < 1:
            raise ValueError(f"need n >= 1, got {n}")
        if n_max < 1:
            raise ValueError(f"need n_max >= 1, got {n_max}")
        dim = n_max ** (n - 1)
        if dim > DIMENSION_GUARD:
            raise DimensionGuardError(
                f"gap domain (n={n}, n_max={n_max}) has dimension "
                f"{dim} > {DIMENSION_GUARD}"
            )
        self.n = n
        self.n_max = n_max
        self.dim = dim
        self.width = n - 1
        # most-significant coordinate first, matching lexicographic order
        self.strides = tuple(n_max ** (n - 2 - j) for j in range(n - 1))
        self._digits = None

    def __len__(self) -> int:
        return self.dim

    def __getitem__(self, i: int) -> tuple[int, ...]:
        if i < 0:
            i += self.dim
        if i < 0 or i >= self.dim:
            raise IndexError(i)
        return tuple((i // s) % self.n_max + 1 for s in self.strides)

    def index(self, gaps: tuple[int, ...]) -> int:
        if len(gaps) != self.width:
            raise ValueError(f"expected {self.width} gaps, got {gaps}")
        if any(g < 1 or g > self.n_max for g in gaps):
            raise ValueError(f"gaps must lie in [1, {self.n_max}]: {gaps}")
        return sum((g - 1) * s for g, s in zip(gaps, self.strides))

    def digits(self) -> np.ndarray:
        """(dim, n-1) array of N_k - 1 values, row i = gap vector i."""
        if self._digits is None:
            idx = np.arange(self.dim, dtype=np.int64)
            cols = [
                (idx // s) % self.n_max for s in self.strides
            ]
            self._digits = (
                np.stack(cols, axis=1)
                if cols
                else np.zeros((self.dim, 0), dtype=np.int64)
            )
        return self._digits


def enumerate_gap_domain(n: int, n_max: int) -> GapDomain:
    return GapDomain(n, n_max)


def ring_translate(config: tuple[int, ...], L: int) -> tuple[int, ...]:
    """Shift every position by one around the ring of L sites."""
    return tuple(sorted(x % L + 1 for x in config))


@dataclass(frozen=True)
class MomentumOrbit:
    """One translation orbit of the ring sector.

    ``phase_step = L // size`` is the generator of admissible momentum
    indices: index k supports this orbit exactly when k is a multiple
    of phase_step (equivalently k * size = 0 mod L).
    """

    L: int
    representative: tuple[int, ...]
    size: int
    phase_step: int

    def admits(self, k: int) -> bool:
        return (k * self.size) % self.L == 0


def momentum_orbits(L: int, n: int) -> list[MomentumOrbit]:
    """Partition of the (L, n) sector into ring-translation orbits.

    Representatives are the lexicographically smallest members; orbit
    sizes divide L and sum to binomial(L, n).
    """
    basis = enumerate_sector(L, n)
    seen: set[tuple[int, ...]] = set()
    orbits = []
    for config in basis:
        if config in seen:
            continue
        orbit = [config]
        cur = ring_translate(config, L)
        while cur != config:
            orbit.append(cur)
            cur = ring_translate(cur, L)
        seen.update(orbit)
        size = len(orbit)
        orbits.append(
            MomentumOrbit(
                L=L,
                representative=min(orbit),
                size=size,
                phase_step=L // size,
            )
        )
    return orbits


def orbit_lookup(orbits: list[MomentumOrbit], L: int) -> dict:
    """Map each sector configuration to (orbit position, shift).

    shift l satisfies config = translate^l(representative).
    """
    table = {}
    for oi, orb in enumerate(orbits):
        cur = orb.representative
        for l in range(orb.size):
            table[cur] = (oi, l)
            cur = ring_translate(cur, L)
    return table
