"""Hamiltonians for the ferromagnetic XXZ chain in the Ising basis.

Conventions.  The anisotropy is parametrized by q in (0, 1] through
Delta = (q + 1/q)/2; alpha = (1 - q^2)/(1 + q^2) satisfies
alpha^2 + Delta^-2 = 1.  Every bond carries the normalized term

    h = 1/4 - S3 S3 - (S1 S1 + S2 S2)/Delta,

so aligned pairs cost nothing and the chain Hamiltonian is nonnegative
with ground energy exactly 0.  Four boundary conditions are supported:

* ``open``      -- bonds 1..L-1, no extra terms;
* ``kink``      -- each bond additionally carries
                   -(alpha/2)(S3_x - S3_{x+1}); the per-bond kink term
                   is an orthogonal projector, and the boundary fields
                   telescope to -(alpha/2)(S3_1 - S3_L);
* ``droplet``   -- open bonds plus the global diagonal field
                   (delta/2)(1 - S3_1 - S3_L);
* ``cyclic``    -- open bonds plus the wrap bond (L, 1), also carrying
                   the 1/4 shift so the all-up ring has energy 0.

All operators are assembled over a magnetization sector (conserved
down-spin number) as scipy CSR matrices wrapped in SparseOperator.

The reduced kernel describes a single n-droplet on the infinite chain
at total momentum theta in gap coordinates (N_2..N_n): the diagonal
counts 1 + #{k : N_k >= 2} and each particle hops left/right with
amplitude -e^{+-i theta}/(2 Delta).  Truncation to the box
[1, n_max]^{n-1} drops out-of-box hops (Dirichlet), which keeps the
kernel Hermitian and makes its lowest eigenvalue decrease monotonically
to the infinite-volume energy as n_max grows.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .sector_basis import (
    GapDomain,
    SectorBasis,
    enumerate_gap_domain,
    enumerate_sector,
    momentum_orbits,
    orbit_lookup,
)

BOUNDARY_TAGS = ("open", "kink", "droplet", "cyclic")


@dataclass(frozen=True)
class Anisotropy:
    """Anisotropy data derived from q in (0, 1]."""

    q: float

    def __post_init__(self):
        if not (0.0 < self.q <= 1.0):
            raise ValueError(f"need 0 < q <= 1, got q={self.q}")

    @property
    def two_delta(self) -> float:
        return self.q + 1.0 / self.q

    @property
    def delta(self) -> float:
        return self.two_delta / 2.0

    @property
    def alpha(self) -> float:
        q2 = self.q * self.q
        return (1.0 - q2) / (1.0 + q2)

    @property
    def hop(self) -> float:
        """Magnitude 1/(2 Delta) of the transverse matrix element."""
        return 1.0 / self.two_delta


@dataclass(frozen=True)
class BoundaryCondition:
    tag: str
    delta: float | None = None

    def __post_init__(self):
        if self.tag not in BOUNDARY_TAGS:
            raise ValueError(f"unknown boundary tag {self.tag!r}")
        if self.tag == "droplet":
            if self.delta is None or not math.isfinite(self.delta):
                raise ValueError("droplet boundary needs a finite delta")
            if self.delta < 1.0:
                # below delta = 1 the boundary field no longer dominates
                # the droplet energy scale; results may not converge
                warnings.warn(
                    f"droplet field delta={self.delta} < 1; "
                    "boundary pinning is weak",
                    stacklevel=2,
                )
        elif self.delta is not None:
            raise ValueError(f"delta is only meaningful for droplet, not {self.tag}")

    @classmethod
    def open(cls) -> "BoundaryCondition":
        return cls("open")

    @classmethod
    def kink(cls) -> "BoundaryCondition":
        return cls("kink")

    @classmethod
    def droplet(cls, delta: float) -> "BoundaryCondition":
        return cls("droplet", delta)

    @classmethod
    def cyclic(cls) -> "BoundaryCondition":
        return cls("cyclic")


@dataclass
class SparseOperator:
    """CSR matrix plus a symmetry tag.

    symmetry is one of 'symmetric' (real), 'hermitian' (complex), or
    'general' (no structure assumed; may be rectangular).
    """

    matrix: sp.csr_matrix
    symmetry: str

    def __post_init__(self):
        if self.symmetry not in ("symmetric", "hermitian", "general"):
            raise ValueError(f"unknown symmetry tag {self.symmetry!r}")
        self.matrix = sp.csr_matrix(self.matrix)
        self.matrix.sum_duplicates()
        self.matrix.sort_indices()

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def dim(self) -> int:
        r, c = self.matrix.shape
        if r != c:
            raise ValueError(f"operator is rectangular: {self.matrix.shape}")
        return r

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """(columns, values) of row i, columns ascending."""
        lo, hi = self.matrix.indptr[i], self.matrix.indptr[i + 1]
        return self.matrix.indices[lo:hi], self.matrix.data[lo:hi]

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


def matvec(op: SparseOperator, v: np.ndarray) -> np.ndarray:
    """Apply op to v.

    CSR rows are kept with ascending column indices, so each row is
    accumulated in a fixed order and repeated calls are bit-identical.
    """
    v = np.asarray(v)
    if v.shape[0] != op.shape[1]:
        raise ValueError(f"operand length {v.shape[0]} != {op.shape[1]}")
    return op.matrix @ v


def _m3(down: bool) -> float:
    """S3 eigenvalue of a single site."""
    return -0.5 if down else 0.5


@dataclass(frozen=True)
class BondTerm:
    """Action of one bond term h (or its kink variant) on configurations."""

    x: int
    y: int
    kink: bool
    anisotropy: Anisotropy

    def apply(
        self, config: tuple[int, ...]
    ) -> tuple[float, list[tuple[tuple[int, ...], float]]]:
        """Diagonal weight and off-diagonal hops out of ``config``."""
        a = self.anisotropy
        occupied = set(config)
        down_x = self.x in occupied
        down_y = self.y in occupied
        diag = 0.0 if down_x == down_y else 0.5
        if self.kink:
            diag += -(a.alpha / 2.0) * (_m3(down_x) - _m3(down_y))
        hops: list[tuple[tuple[int, ...], float]] = []
        if down_x != down_y:
            src, dst = (self.x, self.y) if down_x else (self.y, self.x)
            moved = tuple(sorted(dst if p == src else p for p in config))
            hops.append((moved, -a.hop))
        return diag, hops


def build_bond_term(
    x: int, bc: BoundaryCondition, a: Anisotropy, L: int
) -> BondTerm:
    """Bond term on sites (x, x+1), or the wrap bond (L, 1) when x = L.

    Only the kink boundary modifies the bond itself; droplet fields are
    global diagonals added by the sector builder, and the cyclic wrap
    bond is a plain bond including the 1/4 shift.
    """
    if bc.tag == "cyclic":
        if not 1 <= x <= L:
            raise ValueError(f"cyclic bond index must lie in [1, {L}]: {x}")
    elif not 1 <= x <= L - 1:
        raise ValueError(f"bond index must lie in [1, {L - 1}]: {x}")
    y = x % L + 1
    return BondTerm(x=x, y=y, kink=(bc.tag == "kink"), anisotropy=a)


def droplet_field(config: tuple[int, ...], L: int, delta: float) -> float:
    """(delta/2)(1 - m_1 - m_L) for one configuration."""
    down_1 = 1 in config
    down_L = L in config
    return (delta / 2.0) * (1.0 - _m3(down_1) - _m3(down_L))


def build_sector_hamiltonian(
    L: int, n: int, bc: BoundaryCondition, a: Anisotropy
) -> tuple[SparseOperator, SectorBasis]:
    """Chain Hamiltonian restricted to the n-down sector.

    Returns the operator together with the basis that orders its rows.
    Real symmetric; hop entries are written once per direction with the
    same literal amplitude, so symmetry is exact.
    """
    basis = enumerate_sector(L, n)
    n_bonds = L if bc.tag == "cyclic" else L - 1
    bonds = [build_bond_term(x, bc, a, L) for x in range(1, n_bonds + 1)]
    rows, cols, vals = [], [], []
    for i, config in enumerate(basis):
        diag = 0.0
        for bond in bonds:
            d, hops = bond.apply(config)
            diag += d
            for moved, amp in hops:
                rows.append(i)
                cols.append(basis.index(moved))
                vals.append(amp)
        if bc.tag == "droplet":
            diag += droplet_field(config, L, bc.delta)
        rows.append(i)
        cols.append(i)
        vals.append(diag)
    dim = len(basis)
    mat = sp.coo_matrix(
        (np.array(vals), (np.array(rows), np.array(cols))), shape=(dim, dim)
    ).tocsr()
    return SparseOperator(mat, "symmetric"), basis


def _ring_phases(L: int, k: int) -> np.ndarray:
    """Table of e^{2 pi i k l / L}, l = 0..L-1, with exact conjugate pairs."""
    table = np.empty(L, dtype=np.complex128)
    for m in range(L // 2 + 1):
        val = np.exp(2j * np.pi * m / L)
        table[m] = val
        table[(L - m) % L] = np.conj(val)
    return table[(k * np.arange(L)) % L]


def build_momentum_block(
    L: int, n: int, k: int, a: Anisotropy
) -> tuple[SparseOperator, list]:
    """Momentum-k block of the cyclic sector Hamiltonian.

    Basis states are phase-summed orbits |o, k> = s^{-1/2} *
    sum_l e^{-i theta l} T^l |rep_o| with theta = 2 pi k / L; only
    orbits whose size s satisfies k s = 0 mod L admit the phase.  The
    union of all block spectra over k is the full sector spectrum.
    Returns the block and the list of admissible orbits ordering it.
    """
    if not 0 <= k < L:
        raise ValueError(f"momentum index must lie in [0, {L - 1}]: {k}")
    orbits = momentum_orbits(L, n)
    lookup = orbit_lookup(orbits, L)
    admissible = [oi for oi, orb in enumerate(orbits) if orb.admits(k)]
    col_of = {oi: j for j, oi in enumerate(admissible)}
    phases = _ring_phases(L, k)
    sqrt_size = {oi: math.sqrt(orbits[oi].size) for oi in admissible}
    bc = BoundaryCondition.cyclic()
    bonds = [build_bond_term(x, bc, a, L) for x in range(1, L + 1)]
    dim = len(admissible)
    block = np.zeros((dim, dim), dtype=np.complex128)
    for oi in admissible:
        j = col_of[oi]
        rep = orbits[oi].representative
        diag = 0.0
        for bond in bonds:
            d, hops = bond.apply(rep)
            diag += d
            for moved, amp in hops:
                ti, shift = lookup[moved]
                if ti not in col_of:
                    # target orbit does not admit this momentum; its
                    # phase-summed projection vanishes identically
                    continue
                block[col_of[ti], j] += (
                    amp * phases[shift] * sqrt_size[oi] / sqrt_size[ti]
                )
        block[j, j] += diag
    # the phase table rounds; averaging restores exact Hermiticity
    block = (block + block.conj().T) / 2.0
    op = SparseOperator(sp.csr_matrix(block), "hermitian")
    return op, [orbits[oi] for oi in admissible]


@dataclass
class ReducedKernel:
    """Truncated droplet kernel at fixed particle number and momentum."""

    anisotropy: Anisotropy
    n: int
    theta: float
    n_max: int
    domain: GapDomain
    op: SparseOperator

    @property
    def dim(self) -> int:
        return self.op.dim


def build_reduced_kernel(
    n: int, theta: float, a: Anisotropy, n_max: int
) -> ReducedKernel:
    """Gap-coordinate kernel of an n-droplet at momentum theta.

    Real symmetric at theta = 0, complex Hermitian otherwise.  Each of
    the 2n single-particle hops appears with amplitude
    -e^{+-i theta}/(2 Delta); moves leaving the box are dropped.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    domain = enumerate_gap_domain(n, n_max)
    real = theta == 0.0
    dtype = np.float64 if real else np.complex128
    dim = len(domain)

    if n == 1:
        # no gap coordinates; both hops act on the single state
        val = 1.0 - 2.0 * a.hop * math.cos(theta)
        mat = sp.csr_matrix(np.array([[val]], dtype=dtype))
        op = SparseOperator(mat, "symmetric" if real else "hermitian")
        return ReducedKernel(a, n, theta, n_max, domain, op)

    digits = domain.digits()
    idx = np.arange(dim, dtype=np.int64)
    strides = np.array(domain.strides, dtype=np.int64)
    width = n - 1

    amp_left = -np.exp(1j * theta) * a.hop
    amp_right = np.conj(amp_left)
    if real:
        amp_left, amp_right = -a.hop, -a.hop

    diag = 1.0 + (digits >= 1).sum(axis=1).astype(np.float64)
    rows = [idx]
    cols = [idx]
    vals = [diag.astype(dtype)]

    # moves as (coordinate lowered, coordinate raised, amplitude);
    # particle p moving left lowers N_p and raises N_{p+1}
    moves = [(None, 0, amp_left), (width - 1, None, amp_left)]
    moves += [(p - 2, p - 1, amp_left) for p in range(2, n)]
    moves += [(0, None, amp_right), (None, width - 1, amp_right)]
    moves += [(p - 1, p - 2, amp_right) for p in range(2, n)]

    for j_down, j_up, amp in moves:
        mask = np.ones(dim, dtype=bool)
        shift = np.zeros(dim, dtype=np.int64)
        if j_down is not None:
            mask &= digits[:, j_down] >= 1
            shift -= strides[j_down]
        if j_up is not None:
            mask &= digits[:, j_up] <= n_max - 2
            shift += strides[j_up]
        src = idx[mask]
        rows.append(src)
        cols.append(src + shift[mask])
        vals.append(np.full(src.shape, amp, dtype=dtype))

    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    op = SparseOperator(mat, "symmetric" if real else "hermitian")
    return ReducedKernel(a, n, theta, n_max, domain, op)
