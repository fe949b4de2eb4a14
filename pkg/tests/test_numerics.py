import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp

from deepstokes.errors import DomainError, SingularMatrixError
from deepstokes.numerics import (BandedMatrix, banded_lu_solve, bordered_solve, factorize,
                                 sturm_count, tridiag_eig_smallest)


def laplacian(n):
    h = 1.0 / (n + 1)
    A = (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)) / h**2
    return A, h


def random_banded(rng, n, kl, ku, dominant=True):
    A = np.zeros((n, n))
    for d in range(-kl, ku + 1):
        A += np.diag(rng.standard_normal(n - abs(d)), d)
    if dominant:
        A += np.diag(np.abs(A).sum(axis=1) + 1.0)
    return A


def test_identity_system():
    b = np.arange(5.0)
    assert np.array_equal(banded_lu_solve(BandedMatrix.from_dense(np.eye(5)), b), b)


def test_laplacian_with_sinusoid():
    n = 200
    A, h = laplacian(n)
    x = np.arange(1, n + 1) * h
    exact = np.sin(np.pi * x)
    rhs = A @ exact  # the discrete operator applied to the sampled solution
    sol = banded_lu_solve(BandedMatrix.from_dense(A), rhs)
    assert np.max(np.abs(sol - exact)) < 1e-10


def test_zero_matrix_is_singular():
    with pytest.raises(SingularMatrixError):
        banded_lu_solve(BandedMatrix(4, 1, 1), np.ones(4))


def test_band_is_respected_on_write():
    M = BandedMatrix(5, 1, 2)
    M[0, 2] = 1.0
    with pytest.raises(DomainError):
        M[3, 0] = 1.0


def test_random_dominant_systems_have_small_residual():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        n, kl, ku = rng.integers(5, 60), rng.integers(0, 4), rng.integers(0, 4)
        A = random_banded(rng, n, kl, ku)
        b = rng.standard_normal(n)
        x = banded_lu_solve(BandedMatrix.from_dense(A, kl, ku), b)
        worst = max(worst, np.linalg.norm(A @ x - b) / np.linalg.norm(b))
    assert worst <= 1e-12


def test_pivoting_handles_zero_diagonal():
    A = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    b = np.array([1.0, 2.0, 3.0])
    assert np.allclose(banded_lu_solve(BandedMatrix.from_dense(A), b), np.linalg.solve(A, b))


def test_sparse_input_and_backends_agree():
    rng = np.random.default_rng(3)
    A = random_banded(rng, 80, 3, 2)
    b = rng.standard_normal(80)
    x1 = factorize(sp.csr_matrix(A)).solve(b)
    x2 = factorize(sp.csr_matrix(A), backend="sparse").solve(b)
    assert np.allclose(x1, x2, rtol=1e-12, atol=1e-14)


def test_bordered_reduces_to_plain_solve():
    A, _ = laplacian(30)
    f = np.ones(30)
    x, y = bordered_solve(A, np.zeros(30), np.zeros(30), 1.0, f, 2.0)
    assert np.allclose(x, np.linalg.solve(A, f), rtol=1e-12)
    assert y == pytest.approx(2.0)


def test_bordered_matches_dense_oracle():
    rng = np.random.default_rng(7)
    n = 49
    A = random_banded(rng, n, 2, 2)
    B, C = rng.standard_normal(n), rng.standard_normal(n)
    D = 0.3
    f, g = rng.standard_normal(n), 0.7
    x, y = bordered_solve(BandedMatrix.from_dense(A, 2, 2), B, C, D, f, g)
    full = np.block([[A, B[:, None]], [C[None, :], np.array([[D]])]])
    ref = np.linalg.solve(full, np.append(f, g))
    assert np.allclose(np.append(x, y), ref, rtol=1e-10, atol=1e-12)


def test_bordered_with_singular_block():
    # Neumann Laplacian has the constant kernel; the border removes it
    n = 40
    A = np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)
    A[0, 0] = A[-1, -1] = 1.0
    ones = np.ones(n)
    f = np.sin(np.linspace(0, 2 * np.pi, n))
    f -= f.mean()
    x, y = bordered_solve(A, ones, ones, 0.0, f, 0.0)
    full = np.block([[A, ones[:, None]], [ones[None, :], np.zeros((1, 1))]])
    ref = np.linalg.solve(full, np.append(f, 0.0))
    assert np.allclose(np.append(x, y), ref, atol=1e-10)
    assert np.linalg.norm(A @ x + y * ones - f) <= 1e-9 * np.linalg.norm(f)


def test_singular_bordered_system_raises():
    A = np.zeros((3, 3))
    with pytest.raises(SingularMatrixError):
        bordered_solve(A, np.zeros(3), np.zeros(3), 1.0, np.ones(3), 0.0)


def test_tridiagonal_eigen_diagonal():
    mu, v = tridiag_eig_smallest(np.array([1.0, 2.0, 3.0]), np.zeros(2), np.ones(3))
    assert mu == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(np.abs(v), [1.0, 0.0, 0.0], atol=1e-10)


def test_tridiagonal_eigen_laplacian_second_order():
    errs = []
    for n in (50, 100):
        A, h = laplacian(n)
        mu, _ = tridiag_eig_smallest(np.diag(A).copy(), np.diag(A, 1).copy(), np.ones(n))
        errs.append(abs(mu - np.pi**2))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_tridiagonal_eigen_matches_dense_generalized():
    rng = np.random.default_rng(11)
    n = 60
    d, e = rng.standard_normal(n), rng.standard_normal(n - 1)
    b = rng.uniform(0.5, 2.0, n)
    mu, v = tridiag_eig_smallest(d, e, b)
    A = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    ref = sla.eigh(A, np.diag(b), eigvals_only=True)[0]
    assert mu == pytest.approx(ref, abs=1e-10)
    assert v @ (b * v) == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.norm(A @ v - mu * b * v) < 1e-8


def test_mass_with_zero_entry_rejected():
    with pytest.raises(DomainError):
        tridiag_eig_smallest(np.ones(3), np.zeros(2), np.array([1.0, 0.0, 1.0]))


def test_sturm_count_counts_eigenvalues_below():
    d = np.array([1.0, 2.0, 3.0])
    assert [sturm_count(d, np.zeros(2), np.ones(3), x) for x in (0.5, 1.5, 2.5, 3.5)] == [0, 1, 2, 3]


def test_kernels_are_bitwise_deterministic():
    rng = np.random.default_rng(5)
    A = random_banded(rng, 100, 3, 3)
    b = rng.standard_normal(100)
    M = BandedMatrix.from_dense(A, 3, 3)
    assert banded_lu_solve(M, b).tobytes() == banded_lu_solve(M, b).tobytes()


def test_inverse_iteration_survives_exact_zero_pivot():
    from deepstokes.numerics import _ldl_solve

    x = _ldl_solve(np.array([1.0, 2.0, 3.0]), np.array([0.5, 0.5]), 1.0, np.ones(3))
    assert np.all(np.isfinite(x))
