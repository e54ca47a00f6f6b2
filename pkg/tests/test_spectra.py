"""Eigensolvers, positivity certificates, and tail extrapolation."""

import math

import numpy as np
import pytest
import scipy.sparse as sp

from xxzdroplet.bethe import bethe_energy, bethe_vector, xi_factors
from xxzdroplet.operators import Anisotropy, SparseOperator, build_reduced_kernel
from xxzdroplet.sector_basis import DimensionGuardError
from xxzdroplet.spectra import (
    ConvergenceError,
    NotPositiveDefiniteError,
    dense_spectrum,
    fit_limit,
    generalized_lowest,
    lanczos_lowest,
    pf_check,
    rowsum_norm,
    spectral_radius,
    wielandt_check,
)


def random_symmetric(rng, dim, density=0.2):
    dense = rng.standard_normal((dim, dim))
    dense[rng.random((dim, dim)) > density] = 0.0
    dense = (dense + dense.T) / 2.0
    return SparseOperator(sp.csr_matrix(dense), "symmetric")


def test_rowsum_norm():
    op = SparseOperator(sp.csr_matrix(np.array([[1.0, -2.0], [0.5, 0.0]])), "general")
    assert rowsum_norm(op) == 3.0


def test_dense_spectrum_frozen():
    mat = np.array([[2.0, 1.0], [1.0, 2.0]])
    res = dense_spectrum(SparseOperator(sp.csr_matrix(mat), "symmetric"))
    assert np.allclose(res.values, [1.0, 3.0], atol=1e-14)
    res1 = dense_spectrum(
        SparseOperator(sp.csr_matrix(mat), "symmetric"), k=1, compute_vectors=True
    )
    assert res1.values.shape == (1,)
    assert res1.residuals[0] < 1e-14


def test_dense_spectrum_general_real():
    # non-symmetric but similar to symmetric: spectrum must come out real
    mat = np.array([[2.0, -0.8], [-0.4, 1.0]])
    res = dense_spectrum(SparseOperator(sp.csr_matrix(mat), "general"))
    disc = math.sqrt((2.0 - 1.0) ** 2 + 4 * 0.32)
    assert np.allclose(res.values, [(3.0 - disc) / 2, (3.0 + disc) / 2], atol=1e-14)


def test_dense_guard():
    op = SparseOperator(sp.identity(4001, format="csr"), "symmetric")
    with pytest.raises(DimensionGuardError):
        dense_spectrum(op)
    with pytest.raises(DimensionGuardError):
        generalized_lowest(np.eye(2), np.eye(2), dim_guard=1)


def test_lanczos_agrees_with_dense():
    rng = np.random.default_rng(7)
    for dim in (80, 200):
        op = random_symmetric(rng, dim)
        lan = lanczos_lowest(op, k=3)
        den = dense_spectrum(op, k=3)
        assert np.abs(lan.values - den.values).max() < 1e-9
        assert lan.method in ("lanczos", "lanczos-dense-fallback")


def test_lanczos_small_falls_back_to_dense():
    rng = np.random.default_rng(3)
    op = random_symmetric(rng, 12, density=1.0)
    res = lanczos_lowest(op, k=2)
    assert res.method == "lanczos-dense-fallback"
    assert np.abs(res.values - dense_spectrum(op, k=2).values).max() < 1e-12


def test_lanczos_handles_degenerate_operator():
    # Krylov space of the identity collapses immediately; restarts must
    # still deliver k distinct basis vectors
    op = SparseOperator(sp.identity(100, format="csr"), "symmetric")
    res = lanczos_lowest(op, k=3)
    assert np.allclose(res.values, 1.0, atol=1e-12)


def test_lanczos_hermitian():
    a = Anisotropy(0.5)
    kernel = build_reduced_kernel(2, math.pi / 3, a, 90)
    lan = lanczos_lowest(kernel.op, k=2)
    den = dense_spectrum(kernel.op, k=2)
    assert np.abs(lan.values - den.values).max() < 1e-9


def test_lanczos_rejects_general():
    op = SparseOperator(sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]])), "general")
    with pytest.raises(ValueError):
        lanczos_lowest(op)


def test_lanczos_deterministic():
    rng = np.random.default_rng(11)
    op = random_symmetric(rng, 150)
    v1 = lanczos_lowest(op, k=2).values
    v2 = lanczos_lowest(op, k=2).values
    assert np.array_equal(v1, v2)


def test_generalized_lowest():
    a = np.diag([1.0, 2.0, 3.0])
    g = np.eye(3)
    res = generalized_lowest(a, g, k=2)
    assert np.allclose(res.values, [1.0, 2.0], atol=1e-14)
    with pytest.raises(NotPositiveDefiniteError):
        generalized_lowest(a, np.diag([1.0, -1.0, 1.0]))


def test_spectral_radius():
    op = SparseOperator(sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 1.0]])), "symmetric")
    rho, iters = spectral_radius(op)
    assert abs(rho - 3.0) < 1e-10
    assert iters >= 2
    zero = SparseOperator(sp.csr_matrix((3, 3)), "symmetric")
    assert spectral_radius(zero)[0] == 0.0
    with pytest.raises(ConvergenceError):
        spectral_radius(op, maxiter=2)


def test_pf_check_on_shifted_kernel():
    q, n, n_max = 0.5, 2, 110
    a = Anisotropy(q)
    kernel = build_reduced_kernel(n, 0.0, a, n_max)
    shifted = SparseOperator(
        (sp.identity(kernel.dim, format="csr") * n - kernel.op.matrix).tocsr(),
        "symmetric",
    )
    sol = xi_factors(q, n, 0.0)
    vec = bethe_vector(sol, kernel.domain)
    value = n - bethe_energy(q, n, 0.0)
    report = pf_check(shifted, vec, value)
    assert report.passed, report.summary()
    assert report.entrywise_nonnegative and report.vector_positive
    assert abs(report.spectral_radius - value) < 1e-8


def test_pf_check_flags_violations():
    mat = sp.csr_matrix(np.array([[1.0, -0.5], [-0.5, 1.0]]))
    report = pf_check(SparseOperator(mat, "symmetric"), np.ones(2), 0.5)
    assert not report.passed
    assert "negative" in report.message
    pos = sp.csr_matrix(np.array([[1.0, 0.5], [0.5, 1.0]]))
    report = pf_check(SparseOperator(pos, "symmetric"), np.array([1.0, -1.0]), 0.5)
    assert not report.passed and not report.vector_positive


def test_wielandt_restriction():
    rng = np.random.default_rng(23)
    for _ in range(10):
        dim = int(rng.integers(5, 60))
        dense = np.abs(rng.standard_normal((dim, dim)))
        dense = (dense + dense.T) / 2.0
        op = SparseOperator(sp.csr_matrix(dense), "symmetric")
        subset = rng.choice(dim, size=int(rng.integers(1, dim + 1)), replace=False)
        rep = wielandt_check(op, subset)
        assert rep.passed
        assert rep.radius_sub <= rep.radius_full + 1e-10


def test_wielandt_explicit_subkernel_and_validation():
    dense = np.array([[1.0, 0.5], [0.5, 1.0]])
    op = SparseOperator(sp.csr_matrix(dense), "symmetric")
    sub = SparseOperator(sp.csr_matrix(dense * 0.5), "symmetric")
    rep = wielandt_check(op, [0, 1], sub)
    assert rep.passed and rep.slack > 0
    with pytest.raises(ValueError):
        wielandt_check(op, [])
    with pytest.raises(ValueError):
        wielandt_check(op, [0, 5])
    big = SparseOperator(sp.csr_matrix(dense * 2.0), "symmetric")
    with pytest.raises(ValueError):
        wielandt_check(op, [0, 1], big)
    neg = SparseOperator(sp.csr_matrix(np.array([[-1.0]])), "symmetric")
    with pytest.raises(ValueError):
        wielandt_check(neg, [0])


def test_fit_limit_exact_on_geometric_tail():
    pts = [(k, 1.0 / 6.0 + 0.3 * 0.4**k) for k in range(1, 9)]
    fit = fit_limit(pts)
    assert fit.ok and fit.monotone
    assert abs(fit.limit - 1.0 / 6.0) < 1e-12
    assert abs(fit.ratio - 0.4) < 1e-9
    assert fit.model == "aitken-iterated"


def test_fit_limit_algebraic_tail():
    # 1/L^2 tails are the slowest case in practice; the iterated table
    # must still land within a few parts in 1e4
    pts = [(L, 0.25 + 1.7 / L**2) for L in range(4, 17)]
    fit = fit_limit(pts)
    assert fit.ok
    assert abs(fit.limit - 0.25) < 5e-4


def test_fit_limit_never_above_observed_minimum():
    pts = [(k, 0.5 + 0.2 * 0.5**k) for k in range(1, 7)]
    fit = fit_limit(pts)
    assert fit.limit <= min(e for _, e in pts)


def test_fit_limit_constant_tail():
    fit = fit_limit([(1, 2.0), (2, 2.0), (3, 2.0), (4, 2.0)])
    assert fit.ok and fit.limit == 2.0 and fit.ratio == 0.0
    assert "constant" in fit.message


def test_fit_limit_flags_non_monotone():
    fit = fit_limit([(1, 1.0), (2, 0.5), (3, 0.8), (4, 0.4)])
    assert not fit.ok and not fit.monotone
    assert fit.limit is None


def test_fit_limit_flags_non_contracting():
    fit = fit_limit([(1, 4.0), (2, 3.9), (3, 3.7), (4, 3.3)])
    assert not fit.ok and fit.monotone
    assert fit.ratio == pytest.approx(2.0, rel=1e-12)


def test_fit_limit_input_validation():
    with pytest.raises(ValueError):
        fit_limit([(1, 1.0), (2, 0.9)])
    with pytest.raises(ValueError):
        fit_limit([(1, 1.0), (2, 0.9), (4, 0.85)])
    with pytest.raises(ValueError):
        fit_limit([(2, 1.0), (1, 0.9), (0, 0.85)])
