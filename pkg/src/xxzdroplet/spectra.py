"""Eigensolvers and spectral checks shared by the scan drivers.

Dense paths go through LAPACK and refuse dimensions above a guard.
The iterative path is a Lanczos iteration with full
reorthogonalization, a deterministic all-ones start, and fixed-seed
restart directions, so repeated runs are bit-identical; it reports a
diagnostic error rather than returning an unconverged value silently.

pf_check certifies a positive eigenvector: a nonnegative kernel with a
strictly positive eigenvector has that eigenvalue as its spectral
radius, which is confirmed against deterministic power iteration.
wielandt_check certifies domination: any entrywise-dominated restriction
of a nonnegative kernel has a spectral radius no larger than the full
kernel's.  fit_limit extrapolates a geometrically converging energy
sequence with the Aitken delta-squared formula and never extrapolates
above the monotone bound.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .operators import SparseOperator, matvec
from .sector_basis import DimensionGuardError

DENSE_GUARD = 4000


class ConvergenceError(RuntimeError):
    """Iterative solver hit its cap; carries the best estimates."""

    def __init__(self, message, values=None, bounds=None, iterations=None):
        super().__init__(message)
        self.values = values
        self.bounds = bounds
        self.iterations = iterations


class NotPositiveDefiniteError(RuntimeError):
    """Gram matrix failed Cholesky; the basis is degenerate."""


@dataclass
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray | None
    residuals: np.ndarray | None
    method: str
    iterations: int | None = None
    tol: float | None = None


def _as_matrix(obj) -> np.ndarray:
    if isinstance(obj, SparseOperator):
        return obj.to_dense()
    return np.asarray(obj)


def rowsum_norm(op: SparseOperator) -> float:
    """Max row 1-norm; an upper bound for the spectral radius."""
    return float(np.abs(op.matrix).sum(axis=1).max())


def dense_spectrum(
    op: SparseOperator,
    k: int | None = None,
    compute_vectors: bool = False,
    dim_guard: int = DENSE_GUARD,
    imag_tol: float = 1e-9,
) -> EigenResult:
    """Full dense spectrum, ascending.

    Symmetric/Hermitian operators use eigh.  General operators use eig;
    eigenvalues are expected real here (bracket-basis matrices are
    similar to symmetric ones), so imaginary parts beyond ``imag_tol``
    raise a warning before being dropped.
    """
    dim = op.dim
    if dim > dim_guard:
        raise DimensionGuardError(f"dense path refuses dim {dim} > {dim_guard}")
    dense = op.to_dense()
    vectors = None
    if op.symmetry in ("symmetric", "hermitian"):
        if compute_vectors:
            values, vectors = np.linalg.eigh(dense)
        else:
            values = np.linalg.eigvalsh(dense)
    else:
        if compute_vectors:
            values, vectors = np.linalg.eig(dense)
        else:
            values = np.linalg.eigvals(dense)
        scale = max(1.0, float(np.abs(values).max(initial=0.0)))
        worst = float(np.abs(values.imag).max(initial=0.0))
        if worst > imag_tol * scale:
            warnings.warn(
                f"dropping imaginary parts up to {worst:g} from a "
                "general spectrum",
                stacklevel=2,
            )
        order = np.argsort(values.real, kind="stable")
        values = values.real[order]
        if vectors is not None:
            vectors = vectors[:, order].real
    if k is not None:
        values = values[:k]
        if vectors is not None:
            vectors = vectors[:, :k]
    residuals = None
    if compute_vectors:
        prod = dense @ vectors
        residuals = np.linalg.norm(prod - vectors * values, axis=0)
    return EigenResult(
        values=np.asarray(values, dtype=float),
        vectors=vectors,
        residuals=residuals,
        method="dense",
        tol=None,
    )


class _GrowingBasis:
    """Row-wise orthonormal basis with geometric reallocation."""

    def __init__(self, dim: int, dtype):
        self._buf = np.empty((16, dim), dtype=dtype)
        self.count = 0

    def push(self, v: np.ndarray) -> None:
        if self.count == self._buf.shape[0]:
            new = np.empty(
                (2 * self._buf.shape[0], self._buf.shape[1]),
                dtype=self._buf.dtype,
            )
            new[: self.count] = self._buf[: self.count]
            self._buf = new
        self._buf[self.count] = v
        self.count += 1

    def rows(self) -> np.ndarray:
        return self._buf[: self.count]

    def __getitem__(self, i: int) -> np.ndarray:
        return self._buf[i]


def _restart_direction(basis: _GrowingBasis, dim: int, dtype, attempt: int):
    # deterministic replacement direction when the Krylov space closes
    rng = np.random.default_rng(900_000_000 + attempt)
    v = rng.standard_normal(dim).astype(np.float64)
    v = v.astype(dtype)
    rows = basis.rows()
    v -= rows.conj().dot(v).dot(rows)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ConvergenceError("could not generate a restart direction")
    return v / norm


def lanczos_lowest(
    op: SparseOperator,
    k: int = 1,
    tol: float = 1e-10,
    maxiter: int | None = None,
) -> EigenResult:
    """k lowest eigenpairs by Lanczos with full reorthogonalization.

    Start vector is all-ones; exhausted Krylov spaces restart from
    fixed-seed perturbations, so runs are deterministic.  Convergence
    is declared when the Lanczos residual bound beta |s_last| of every
    requested Ritz pair falls below tol times the row-sum norm.  Small
    operators fall through to the dense path.
    """
    if op.symmetry == "general":
        raise ValueError("lanczos_lowest needs a symmetric or Hermitian operator")
    dim = op.dim
    k = min(k, dim)
    if dim <= max(32, 2 * k + 2):
        res = dense_spectrum(op, k=k, compute_vectors=True)
        res.method = "lanczos-dense-fallback"
        res.tol = tol
        return res
    if maxiter is None:
        maxiter = min(dim, 300)
    scale = max(1.0, rowsum_norm(op))
    dtype = np.complex128 if op.matrix.dtype.kind == "c" else np.float64
    basis = _GrowingBasis(dim, dtype)
    v = np.ones(dim, dtype=dtype) / math.sqrt(dim)
    basis.push(v)
    alphas: list[float] = []
    betas: list[float] = []
    restarts = 0
    theta = svec = None
    for j in range(maxiter):
        w = op.matrix @ basis[j]
        alpha = float(np.vdot(basis[j], w).real)
        alphas.append(alpha)
        w = w - alpha * basis[j]
        if j > 0 and betas[j - 1] != 0.0:
            w = w - betas[j - 1] * basis[j - 1]
        # full reorthogonalization; repeat once on heavy cancellation
        pre = np.linalg.norm(w)
        rows = basis.rows()
        w = w - rows.conj().dot(w).dot(rows)
        if np.linalg.norm(w) < 0.5 * pre:
            w = w - rows.conj().dot(w).dot(rows)
        beta = float(np.linalg.norm(w))
        if beta <= 1e-13 * scale:
            betas.append(0.0)
            if basis.count >= dim:
                theta, svec = scipy.linalg.eigh_tridiagonal(
                    alphas, betas[:-1] if len(betas) > 1 else []
                )
                break
            restarts += 1
            basis.push(_restart_direction(basis, dim, dtype, restarts))
        else:
            betas.append(beta)
            basis.push(w / beta)
        if j + 1 >= k:
            theta, svec = scipy.linalg.eigh_tridiagonal(alphas, betas[:-1])
            bound = betas[-1] * np.abs(svec[-1, :k])
            if np.all(bound <= tol * scale):
                break
    else:
        theta, svec = scipy.linalg.eigh_tridiagonal(alphas, betas[:-1])
        raise ConvergenceError(
            f"lanczos did not converge in {maxiter} iterations; "
            f"best values {theta[:k]}, bounds {betas[-1] * np.abs(svec[-1, :k])}",
            values=theta[:k],
            bounds=betas[-1] * np.abs(svec[-1, :k]),
            iterations=maxiter,
        )
    m = len(alphas)
    vectors = (svec[:, :k].T @ basis.rows()[:m]).T
    prod = op.matrix @ vectors
    residuals = np.linalg.norm(prod - vectors * theta[:k], axis=0)
    return EigenResult(
        values=theta[:k].copy(),
        vectors=vectors,
        residuals=residuals,
        method="lanczos",
        iterations=m,
        tol=tol,
    )


def generalized_lowest(
    a_sym, gram, k: int = 1, dim_guard: int = DENSE_GUARD
) -> EigenResult:
    """Lowest eigenpairs of A v = lambda G v with G positive definite.

    Dense Cholesky-based solve; a non-positive-definite G is a hard
    error because it means the underlying basis was degenerate.
    """
    A = _as_matrix(a_sym)
    G = _as_matrix(gram)
    dim = A.shape[0]
    if dim > dim_guard:
        raise DimensionGuardError(f"generalized path refuses dim {dim} > {dim_guard}")
    try:
        values, vectors = scipy.linalg.eigh(A, G)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        raise NotPositiveDefiniteError(
            f"Gram matrix is not positive definite: {exc}"
        ) from exc
    values = values[:k]
    vectors = vectors[:, :k]
    residuals = np.linalg.norm(A @ vectors - (G @ vectors) * values, axis=0)
    return EigenResult(
        values=values,
        vectors=vectors,
        residuals=residuals,
        method="generalized-cholesky",
    )


def spectral_radius(
    op: SparseOperator, tol: float = 1e-12, maxiter: int = 200_000
) -> tuple[float, int]:
    """Spectral radius of a nonnegative kernel by power iteration.

    Deterministic all-ones start; the Rayleigh quotient must settle
    within tol on two consecutive iterations.
    """
    dim = op.dim
    x = np.ones(dim) / math.sqrt(dim)
    est_prev = math.inf
    settled = 0
    for it in range(1, maxiter + 1):
        y = op.matrix @ x
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            return 0.0, it
        est = float(np.real(np.vdot(x, y)))
        x = y / norm
        if abs(est - est_prev) <= tol * max(1.0, abs(est)):
            settled += 1
            if settled >= 2:
                return est, it
        else:
            settled = 0
        est_prev = est
    raise ConvergenceError(
        f"power iteration did not settle in {maxiter} iterations "
        f"(last estimate {est_prev})",
        iterations=maxiter,
    )


@dataclass(frozen=True)
class PFReport:
    entrywise_nonnegative: bool
    vector_positive: bool
    eigenpair_residual: float
    eigenpair_ok: bool
    value: float
    spectral_radius: float
    radius_gap: float
    radius_ok: bool
    iterations: int
    passed: bool
    message: str

    def summary(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        return (
            f"{verdict}: value={self.value:.12g} "
            f"radius={self.spectral_radius:.12g} gap={self.radius_gap:.3g} "
            f"eig_resid={self.eigenpair_residual:.3g} {self.message}"
        )


def pf_check(
    op: SparseOperator,
    vec: np.ndarray,
    value: float,
    eig_tol: float = 1e-10,
    radius_tol: float = 1e-8,
) -> PFReport:
    """Positive-eigenvector certificate for a nonnegative kernel.

    Hypotheses: every stored entry of the kernel is >= 0 and the vector
    is strictly positive with ||K v - value v|| small (an eigenpair to
    eig_tol, relative).  Conclusion checked: the spectral radius equals
    the eigenvalue, confirmed by power iteration to radius_tol.
    """
    mat = op.matrix
    nonneg = bool(mat.nnz == 0 or float(mat.data.min()) >= 0.0)
    v = np.asarray(vec, dtype=float)
    positive = bool(v.size and float(v.min()) > 0.0)
    resid = float(
        np.linalg.norm(mat @ v - value * v)
        / (max(1.0, abs(value)) * np.linalg.norm(v))
    )
    eig_ok = resid <= eig_tol
    rho, iterations = spectral_radius(op)
    gap = abs(rho - value)
    radius_ok = gap <= radius_tol * max(1.0, abs(value))
    failures = []
    if not nonneg:
        failures.append("kernel has negative entries")
    if not positive:
        failures.append("vector is not strictly positive")
    if not eig_ok:
        failures.append(f"eigenpair residual {resid:g} > {eig_tol:g}")
    if not radius_ok:
        failures.append(f"radius gap {gap:g} > tolerance")
    return PFReport(
        entrywise_nonnegative=nonneg,
        vector_positive=positive,
        eigenpair_residual=resid,
        eigenpair_ok=eig_ok,
        value=float(value),
        spectral_radius=rho,
        radius_gap=gap,
        radius_ok=radius_ok,
        iterations=iterations,
        passed=nonneg and positive and eig_ok and radius_ok,
        message="; ".join(failures),
    )


def _radius_any(op: SparseOperator) -> float:
    if op.dim <= 2000:
        dense = op.to_dense()
        if op.symmetry in ("symmetric", "hermitian"):
            return float(np.linalg.eigvalsh(dense).max())
        return float(np.abs(np.linalg.eigvals(dense)).max())
    rho, _ = spectral_radius(op)
    return rho


@dataclass(frozen=True)
class WielandtReport:
    radius_full: float
    radius_sub: float
    slack: float
    passed: bool


def wielandt_check(
    op: SparseOperator,
    subset,
    sub_op: SparseOperator | None = None,
    tol: float = 1e-10,
) -> WielandtReport:
    """Domination certificate rho(J) <= rho(K) for nonnegative kernels.

    J defaults to the restriction of K to ``subset``; an explicit J
    must be entrywise dominated by it (0 <= J <= K[subset, subset]).
    """
    mat = op.matrix
    if mat.nnz and float(mat.data.min()) < 0.0:
        raise ValueError("wielandt_check needs a nonnegative kernel")
    subset = np.asarray(sorted(set(int(i) for i in subset)), dtype=int)
    if subset.size == 0:
        raise ValueError("subset must be nonempty")
    if subset[0] < 0 or subset[-1] >= op.dim:
        raise ValueError("subset indices out of range")
    restriction = mat[subset][:, subset].tocsr()
    if sub_op is None:
        sub = SparseOperator(restriction, op.symmetry)
    else:
        sub = sub_op
        if sub.shape != (subset.size, subset.size):
            raise ValueError(f"sub-kernel shape {sub.shape} != subset size")
        if sub.matrix.nnz and float(sub.matrix.data.min()) < 0.0:
            raise ValueError("sub-kernel must be nonnegative")
        excess = (sub.matrix - restriction).toarray()
        if excess.size and float(excess.max(initial=0.0)) > 1e-12:
            raise ValueError("sub-kernel is not dominated by the restriction")
    rho_full = _radius_any(op)
    rho_sub = _radius_any(sub)
    slack = rho_full - rho_sub
    return WielandtReport(
        radius_full=rho_full,
        radius_sub=rho_sub,
        slack=slack,
        passed=bool(rho_sub <= rho_full + tol * max(1.0, abs(rho_full))),
    )


@dataclass(frozen=True)
class ExtrapolationFit:
    points: tuple
    limit: float | None
    ratio: float | None
    residual: float | None
    monotone: bool
    ok: bool
    model: str
    message: str


def _aitken_pass(es: list[float], scale: float) -> list[float]:
    """One delta-squared sweep over every consecutive triple."""
    out = []
    for e1, e2, e3 in zip(es, es[1:], es[2:]):
        d1 = e2 - e1
        d2 = e3 - e2
        denom = d2 - d1
        if abs(denom) <= 1e-15 * scale:
            # flat triple: already converged at working precision
            out.append(e3)
        else:
            out.append(e3 - d2 * d2 / denom)
    return out


def fit_limit(points) -> ExtrapolationFit:
    """Limit of a monotone tail by the iterated Aitken delta-squared table.

    Input: (parameter, energy) pairs with uniform parameter spacing and
    non-increasing energies; at least three points.  Each sweep forms
    the three-point ratio estimate on every consecutive triple of the
    current sequence; sweeps repeat until fewer than three values
    remain and the corner value is the reported limit.  One sweep is
    exact for a geometric tail e + c r^k; iterating also strips the
    slowly varying ratios of algebraic tails.  The fit never reports a
    limit above the smallest observed energy, and the residual is the
    spread at the deepest table level.
    """
    pts = [(float(x), float(e)) for x, e in points]
    if len(pts) < 3:
        raise ValueError("need at least three points")
    xs = [x for x, _ in pts]
    es = [e for _, e in pts]
    steps = [b - a for a, b in zip(xs, xs[1:])]
    if min(steps) <= 0:
        raise ValueError("parameters must be strictly increasing")
    if max(steps) - min(steps) > 1e-9 * max(steps):
        raise ValueError("parameter spacing must be uniform")
    scale = max(1.0, max(abs(e) for e in es))
    if any(b - a > 1e-14 * scale for a, b in zip(es, es[1:])):
        return ExtrapolationFit(
            points=tuple(pts),
            limit=None,
            ratio=None,
            residual=None,
            monotone=False,
            ok=False,
            model="aitken-iterated",
            message="sequence is not non-increasing; fit skipped",
        )
    d1 = es[-2] - es[-3]
    d2 = es[-1] - es[-2]
    if d1 == 0.0 and d2 == 0.0:
        return ExtrapolationFit(
            points=tuple(pts),
            limit=es[-1],
            ratio=0.0,
            residual=0.0,
            monotone=True,
            ok=True,
            model="aitken-iterated",
            message="constant tail",
        )
    ratio = d2 / d1 if d1 != 0.0 else 0.0
    if not 0.0 <= ratio < 1.0:
        return ExtrapolationFit(
            points=tuple(pts),
            limit=None,
            ratio=ratio,
            residual=None,
            monotone=True,
            ok=False,
            model="aitken-iterated",
            message=f"tail is not contracting (ratio {ratio:g}); fit skipped",
        )
    table = [list(es)]
    while len(table[-1]) >= 3:
        nxt = _aitken_pass(table[-1], scale)
        if not all(math.isfinite(v) for v in nxt):
            break
        table.append(nxt)
    deepest = table[-1]
    limit = min(deepest[-1], min(es))
    if len(deepest) >= 2:
        residual = abs(deepest[-1] - deepest[-2])
    else:
        residual = abs(deepest[-1] - table[-2][-1])
    return ExtrapolationFit(
        points=tuple(pts),
        limit=limit,
        ratio=ratio,
        residual=residual,
        monotone=True,
        ok=True,
        model="aitken-iterated",
        message="",
    )
