"""Bracket bases, Temperley-Lieb moves, and the Ising intertwiner.

A bracket system on L sites is a set of n arcs [x_i, y_i] (x_i < y_i)
such that arcs pairwise nest or are disjoint (non-crossing) and no arc
has an unpaired site strictly inside it (non-spanning).  Arcs inside a
bracket are stored sorted by right endpoint; the basis is ordered by
the sorted right endpoints, then sorted left endpoints.  These systems
label the droplet levels of the kink chain: there are
binomial(L, n) - binomial(L, n-1) of them for n <= L/2.

Each bracket maps to the Ising sector through the 2^n-term expansion

    psi(b) = prod_i ( q^{-1/2} S-_{x_i} - q^{1/2} S-_{y_i} ) |all up>,

collected column-wise into the rectangular map R.  The kink bond terms
act on these vectors through local bracket moves generated by the
Temperley-Lieb operators U_x = -(q + 1/q) h^k_{x,x+1}: a bond covered
by an arc [x, x+1] contributes the bubble scalar -(q + 1/q); a bond
touching arcs in one or two sites rewires them; a bond touching none
annihilates.  Collecting moves over all bonds gives the (generally
non-symmetric) bracket-basis matrix A with H^k R = R A exactly, so the
droplet levels can be computed either from A directly or from the
symmetric pair (R^T H^k R, R^T R).

The quantum-group ladder operators

    S+ = sum_x q^{-2(S3_1+..+S3_{x-1})} S+_x,
    S-  = sum_x S-_x q^{2(S3_{x+1}+..+S3_L)}

commute with the kink chain; S+ annihilates every psi(b), which makes
the bracket vectors highest weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np
import scipy.sparse as sp

from .operators import Anisotropy, SparseOperator
from .sector_basis import SectorBasis, enumerate_sector, sector_dimension

Arc = tuple[int, int]
Bracket = tuple[Arc, ...]


def canonical_bracket(arcs) -> Bracket:
    """Arcs sorted by right endpoint."""
    return tuple(sorted((tuple(a) for a in arcs), key=lambda a: a[1]))


def bracket_sort_key(b: Bracket):
    return (tuple(sorted(y for _, y in b)), tuple(sorted(x for x, _ in b)))


def is_valid_bracket(arcs, L: int) -> bool:
    """Exclusion, non-crossing (nest or disjoint), non-spanning."""
    endpoints = [z for arc in arcs for z in arc]
    if len(set(endpoints)) != len(endpoints):
        return False
    if any(not (1 <= x < y <= L) for x, y in arcs):
        return False
    paired = set(endpoints)
    for x, y in arcs:
        if any(z not in paired for z in range(x + 1, y)):
            return False
    arcs = list(arcs)
    for i in range(len(arcs)):
        x1, y1 = arcs[i]
        for x2, y2 in arcs[i + 1 :]:
            if x1 < x2 < y1 < y2 or x2 < x1 < y2 < y1:
                return False
    return True


@lru_cache(maxsize=None)
def _perfect_matchings(a: int, b: int) -> tuple[Bracket, ...]:
    """Non-crossing perfect matchings of consecutive sites a..b."""
    if a > b:
        return ((),)
    out = []
    for c in range(a + 1, b + 1, 2):
        for left in _perfect_matchings(a + 1, c - 1):
            for right in _perfect_matchings(c + 1, b):
                out.append(((a, c),) + left + right)
    return tuple(out)


@lru_cache(maxsize=None)
def _enum_brackets(L: int, n: int) -> tuple[Bracket, ...]:
    # place arcs right to left: site L is either free or closes [x, L]
    # with the strict interior perfectly matched
    if n == 0:
        return ((),)
    if L < 2 * n:
        return ()
    out = list(_enum_brackets(L - 1, n))
    for m in range(n):
        x = L - 1 - 2 * m
        if x < 1:
            break
        for prefix in _enum_brackets(x - 1, n - 1 - m):
            for interior in _perfect_matchings(x + 1, L - 1):
                out.append(prefix + interior + ((x, L),))
    return tuple(out)


@dataclass(frozen=True)
class HighestWeightBasis:
    L: int
    n: int
    brackets: tuple[Bracket, ...]
    _index: dict = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        if not self._index:
            self._index.update({b: i for i, b in enumerate(self.brackets)})

    def __len__(self) -> int:
        return len(self.brackets)

    def __iter__(self):
        return iter(self.brackets)

    def __getitem__(self, i: int) -> Bracket:
        return self.brackets[i]

    def index(self, b: Bracket) -> int:
        return self._index[canonical_bracket(b)]


def enumerate_brackets(L: int, n: int) -> HighestWeightBasis:
    """All valid n-arc bracket systems on L sites, canonically ordered."""
    if L < 0 or n < 0:
        raise ValueError(f"need L, n >= 0, got L={L}, n={n}")
    found = [canonical_bracket(b) for b in _enum_brackets(L, n)]
    found.sort(key=bracket_sort_key)
    return HighestWeightBasis(L=L, n=n, brackets=tuple(found))


def hw_dimension(L: int, n: int) -> int:
    """binomial(L, n) - binomial(L, n-1), valid for 0 <= n <= L/2."""
    return sector_dimension(L, n) - (math.comb(L, n - 1) if n >= 1 else 0)


@dataclass(frozen=True)
class TLMove:
    """Result of one Temperley-Lieb generator applied to a bracket."""

    site: int
    source: Bracket
    result: Bracket
    scalar: float
    bubble: bool


def _role(z: int, b: Bracket):
    for arc in b:
        if arc[0] == z:
            return "left", arc
        if arc[1] == z:
            return "right", arc
    return "free", None


def tl_apply(x: int, b: Bracket, L: int, a: Anisotropy) -> TLMove | None:
    """Apply the generator at bond (x, x+1); None when it annihilates.

    The seven actionable patterns on a valid bracket: both sites free
    (null); the bubble [x, x+1]; one endpoint overlapping at x or at
    x+1; and three two-arc rewirings (adjacent fuse, nested at left
    endpoints, nested at right endpoints).  Any other pattern certifies
    the input was not a valid bracket.
    """
    if not 1 <= x <= L - 1:
        raise ValueError(f"bond index must lie in [1, {L - 1}]: {x}")
    b = canonical_bracket(b)
    role_x, arc_x = _role(x, b)
    role_y, arc_y = _role(x + 1, b)
    minus_two_delta = -a.two_delta

    if role_x == "free" and role_y == "free":
        return None
    if arc_x == arc_y:
        # exclusion leaves only [x, x+1] itself
        return TLMove(x, b, b, minus_two_delta, True)

    rest = tuple(arc for arc in b if arc not in (arc_x, arc_y))
    pair: Arc = (x, x + 1)
    if role_x == "free":
        if role_y == "left":
            # [x+1, z] slides onto the bond, freeing z
            result = canonical_bracket(rest + (pair,))
            return TLMove(x, b, result, 1.0, False)
        raise ValueError(f"site {x} unpaired inside {arc_y}: invalid bracket")
    if role_y == "free":
        if role_x == "right":
            result = canonical_bracket(rest + (pair,))
            return TLMove(x, b, result, 1.0, False)
        raise ValueError(f"site {x + 1} unpaired inside {arc_x}: invalid bracket")

    if role_x == "right" and role_y == "left":
        # adjacent arcs [w, x], [x+1, z] fuse into [w, z]
        new_arc = (arc_x[0], arc_y[1])
    elif role_x == "left" and role_y == "left":
        # [x+1, z] nested in [x, v]: leftover arc [z, v]
        new_arc = (arc_y[1], arc_x[1])
    elif role_x == "right" and role_y == "right":
        # [w, x] nested in [u, x+1]: leftover arc [u, w]
        new_arc = (arc_y[0], arc_x[0])
    else:
        raise ValueError(
            f"arcs {arc_x} and {arc_y} cross at bond {x}: invalid bracket"
        )
    result = canonical_bracket(rest + (pair, new_arc))
    return TLMove(x, b, result, 1.0, False)


def tl_matrix(x: int, basis: HighestWeightBasis, a: Anisotropy) -> SparseOperator:
    """Matrix of the generator at bond (x, x+1) on the bracket basis."""
    dim = len(basis)
    rows, cols, vals = [], [], []
    for j, b in enumerate(basis):
        move = tl_apply(x, b, basis.L, a)
        if move is None:
            continue
        rows.append(basis.index(move.result))
        cols.append(j)
        vals.append(move.scalar)
    mat = sp.coo_matrix(
        (np.array(vals, dtype=np.float64), (rows, cols)), shape=(dim, dim)
    ).tocsr()
    return SparseOperator(mat, "general")


def build_hw_matrix(
    L: int, n: int, a: Anisotropy
) -> tuple[SparseOperator, HighestWeightBasis]:
    """Kink-chain action on the bracket basis (generally non-symmetric).

    Column b collects, over all bonds, -(scalar)/(q + 1/q) at the moved
    bracket; bubbles contribute +1 to the diagonal.
    """
    basis = enumerate_brackets(L, n)
    dim = len(basis)
    rows, cols, vals = [], [], []
    for j, b in enumerate(basis):
        for x in range(1, L):
            move = tl_apply(x, b, L, a)
            if move is None:
                continue
            rows.append(basis.index(move.result))
            cols.append(j)
            vals.append(-move.scalar / a.two_delta)
    mat = sp.coo_matrix(
        (np.array(vals, dtype=np.float64), (rows, cols)), shape=(dim, dim)
    ).tocsr()
    return SparseOperator(mat, "general"), basis


def bracket_to_ising(
    b: Bracket, L: int, a: Anisotropy
) -> list[tuple[tuple[int, ...], float]]:
    """Expansion of one bracket vector over Ising configurations.

    2^n entries: each arc contributes its left endpoint with weight
    q^{-1/2} or its right endpoint with weight -q^{1/2}.  Weights are
    materialized as integer powers of sqrt(q) so equal-magnitude terms
    in downstream cancellations are the same float.
    """
    if not is_valid_bracket(b, L):
        raise ValueError(f"not a valid bracket on {L} sites: {b}")
    s = math.sqrt(a.q)
    entries = []
    arcs = canonical_bracket(b)
    for choice in product((0, 1), repeat=len(arcs)):
        positions = tuple(sorted(arc[c] for arc, c in zip(arcs, choice)))
        n_right = sum(choice)
        coeff = (-1.0) ** n_right * s ** (2 * n_right - len(arcs))
        entries.append((positions, coeff))
    return entries


def build_R(
    L: int, n: int, a: Anisotropy
) -> tuple[SparseOperator, SectorBasis, HighestWeightBasis]:
    """Rectangular intertwiner from bracket basis to the (L, n) sector.

    Column b is the Ising expansion of psi(b); every column 1-norm is
    exactly (q^{-1/2} + q^{1/2})^n.
    """
    sector = enumerate_sector(L, n)
    hw = enumerate_brackets(L, n)
    rows, cols, vals = [], [], []
    for j, b in enumerate(hw):
        for config, coeff in bracket_to_ising(b, L, a):
            rows.append(sector.index(config))
            cols.append(j)
            vals.append(coeff)
    mat = sp.coo_matrix(
        (np.array(vals, dtype=np.float64), (rows, cols)),
        shape=(len(sector), len(hw)),
    ).tocsr()
    return SparseOperator(mat, "general"), sector, hw


@dataclass(frozen=True)
class SuqGenerators:
    """Quantum-group ladder maps between adjacent sectors."""

    L: int
    anisotropy: Anisotropy

    def lowering(self, n: int) -> SparseOperator:
        """Map from the n-down sector to the (n+1)-down sector.

        Adding a down spin at free site x carries q^{#up(>x) - #down(>x)}.
        """
        L, q = self.L, self.anisotropy.q
        src = enumerate_sector(L, n)
        dst = enumerate_sector(L, n + 1)
        rows, cols, vals = [], [], []
        for j, config in enumerate(src):
            occ = set(config)
            for x in range(1, L + 1):
                if x in occ:
                    continue
                downs_right = sum(1 for p in config if p > x)
                expo = (L - x) - 2 * downs_right
                target = tuple(sorted(config + (x,)))
                rows.append(dst.index(target))
                cols.append(j)
                vals.append(q**expo)
        mat = sp.coo_matrix(
            (np.array(vals, dtype=np.float64), (rows, cols)),
            shape=(len(dst), len(src)),
        ).tocsr()
        return SparseOperator(mat, "general")

    def raising(self, n: int) -> SparseOperator:
        """Map from the n-down sector to the (n-1)-down sector.

        Removing the down spin at x carries q^{#down(<x) - #up(<x)}.
        """
        L, q = self.L, self.anisotropy.q
        src = enumerate_sector(L, n)
        dst = enumerate_sector(L, n - 1)
        rows, cols, vals = [], [], []
        for j, config in enumerate(src):
            for x in config:
                downs_left = sum(1 for p in config if p < x)
                expo = -(x - 1) + 2 * downs_left
                target = tuple(p for p in config if p != x)
                rows.append(dst.index(target))
                cols.append(j)
                vals.append(q**expo)
        mat = sp.coo_matrix(
            (np.array(vals, dtype=np.float64), (rows, cols)),
            shape=(len(dst), len(src)),
        ).tocsr()
        return SparseOperator(mat, "general")

    def s3(self, n: int) -> float:
        """Total S3 eigenvalue of the n-down sector."""
        return self.L / 2.0 - n


def su_q_generators(L: int, a: Anisotropy) -> SuqGenerators:
    return SuqGenerators(L=L, anisotropy=a)


def export_triplets(op: SparseOperator, path) -> None:
    """Plain-text sparse export: 'rows cols nnz', then 'i j value' lines.

    Indices are 0-based, values printed with 17 significant digits.
    Real matrices only.
    """
    coo = op.matrix.tocoo()
    if np.iscomplexobj(coo.data):
        raise ValueError("triplet export supports real matrices only")
    with open(path, "w") as fh:
        fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {v:.17g}\n")


def read_triplets(path) -> sp.csr_matrix:
    with open(path) as fh:
        header = fh.readline().split()
        rows, cols, nnz = (int(t) for t in header)
        i, j, v = [], [], []
        for _ in range(nnz):
            ti, tj, tv = fh.readline().split()
            i.append(int(ti))
            j.append(int(tj))
            v.append(float(tv))
    return sp.coo_matrix(
        (np.array(v), (np.array(i, dtype=int), np.array(j, dtype=int))),
        shape=(rows, cols),
    ).tocsr()
