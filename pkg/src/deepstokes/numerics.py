"""Deterministic banded and tridiagonal linear algebra kernels.

Banded matrices use LAPACK-style packed storage: entry A[i, j] with
-kl <= j - i <= ku lives at ``data[ku + i - j, j]``.  The LU kernel is the
unblocked partial-pivoting algorithm; a pivot smaller than ``1e-14 * scale``
is clamped to ``scale`` and recorded, which makes the computed factors an
exact factorization of a rank-one-per-clamp modification of the input.
:func:`bordered_solve` undoes those modifications with extra border columns.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from numba import njit

from .errors import DomainError, NumericalFailure, SingularMatrixError

PIVOT_RTOL = 1e-14


# ---------------------------------------------------------------------------
# banded storage
# ---------------------------------------------------------------------------
class BandedMatrix:
    """Square band matrix with lower/upper bandwidths ``kl``/``ku``."""

    def __init__(self, n: int, kl: int, ku: int, data=None):
        if n < 1 or kl < 0 or ku < 0:
            raise DomainError("invalid band shape")
        self.n, self.kl, self.ku = int(n), int(kl), int(ku)
        if data is None:
            data = np.zeros((kl + ku + 1, n))
        data = np.asarray(data, dtype=float)
        if data.shape != (kl + ku + 1, n):
            raise DomainError(f"packed storage must have shape {(kl + ku + 1, n)}")
        self.data = data

    def _slot(self, i, j):
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError((i, j))
        if not (-self.kl <= j - i <= self.ku):
            return None
        return self.ku + i - j, j

    def __getitem__(self, ij):
        slot = self._slot(*ij)
        return 0.0 if slot is None else float(self.data[slot])

    def __setitem__(self, ij, value):
        slot = self._slot(*ij)
        if slot is None:
            if value != 0:
                raise DomainError(f"write at {ij} outside the band ({self.kl}, {self.ku})")
            return
        self.data[slot] = value

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0

    @classmethod
    def from_dense(cls, A, kl=None, ku=None) -> "BandedMatrix":
        A = np.asarray(A, dtype=float)
        n = A.shape[0]
        if A.shape != (n, n):
            raise DomainError("matrix must be square")
        i, j = np.nonzero(A)
        kl = int(max(0, np.max(i - j))) if kl is None and i.size else (kl or 0)
        ku = int(max(0, np.max(j - i))) if ku is None and i.size else (ku or 0)
        if i.size and (np.max(i - j) > kl or np.max(j - i) > ku):
            raise DomainError("matrix has entries outside the requested band")
        M = cls(n, kl, ku)
        M.data[ku + i - j, j] = A[i, j]
        return M

    @classmethod
    def from_sparse(cls, S, kl=None, ku=None) -> "BandedMatrix":
        S = sp.coo_matrix(S)
        n = S.shape[0]
        i, j, v = S.row, S.col, S.data
        if kl is None:
            kl = int(max(0, np.max(i - j))) if i.size else 0
        if ku is None:
            ku = int(max(0, np.max(j - i))) if i.size else 0
        if i.size and (np.max(i - j) > kl or np.max(j - i) > ku):
            raise DomainError("matrix has entries outside the requested band")
        M = cls(n, kl, ku)
        np.add.at(M.data, (ku + i - j, j), v)
        return M

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for d in range(-self.kl, self.ku + 1):
            row = self.ku - d
            j = np.arange(max(0, d), min(self.n, self.n + d))
            A[j - d, j] = self.data[row, j]
        return A

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return _band_matvec(self.data, self.kl, self.ku, x.reshape(self.n, -1)).reshape(x.shape)

    __matmul__ = matvec


@njit(cache=True)
def _band_matvec(data, kl, ku, x):
    n = data.shape[1]
    y = np.zeros_like(x)
    for j in range(n):
        lo = max(0, j - ku)
        hi = min(n, j + kl + 1)
        for i in range(lo, hi):
            a = data[ku + i - j, j]
            if a != 0.0:
                for c in range(x.shape[1]):
                    y[i, c] += a * x[j, c]
    return y


@njit(cache=True)
def _gbtrf(ab, kl, ku, tol, clamp):
    """In-place banded LU with partial pivoting (unblocked).

    ``ab`` has 2*kl+ku+1 rows, A stored from row kl.  Returns the pivot
    vector and the indices of clamped pivots with their shifts.
    """
    n = ab.shape[1]
    kv = ku + kl
    ipiv = np.zeros(n, dtype=np.int64)
    perm = np.arange(n)
    cl_col = np.zeros(n, dtype=np.int64)
    cl_row = np.zeros(n, dtype=np.int64)
    cl_shift = np.zeros(n)
    ncl = 0
    ju = 0
    for j in range(n):
        km = min(kl, n - 1 - j)
        jp = 0
        best = abs(ab[kv, j])
        for r in range(1, km + 1):
            v = abs(ab[kv + r, j])
            if v > best:
                best = v
                jp = r
        ipiv[j] = j + jp
        if jp != 0:
            tmp = perm[j]
            perm[j] = perm[j + jp]
            perm[j + jp] = tmp
        ju = max(ju, min(j + ku + jp, n - 1))
        if jp != 0:
            for c in range(j, ju + 1):
                a = kv + j - c
                b = kv + j + jp - c
                t = ab[a, c]
                ab[a, c] = ab[b, c]
                ab[b, c] = t
        piv = ab[kv, j]
        if abs(piv) < tol:
            new = clamp if piv >= 0 else -clamp
            cl_col[ncl] = j
            cl_row[ncl] = perm[j]
            cl_shift[ncl] = new - piv
            ncl += 1
            ab[kv, j] = new
            piv = new
        inv = 1.0 / piv
        for r in range(1, km + 1):
            ab[kv + r, j] *= inv
        for c in range(j + 1, ju + 1):
            u = ab[kv + j - c, c]
            if u != 0.0:
                for r in range(1, km + 1):
                    ab[kv + j + r - c, c] -= ab[kv + r, j] * u
    return ipiv, cl_col[:ncl], cl_row[:ncl], cl_shift[:ncl]


@njit(cache=True)
def _gbtrs(ab, kl, ku, ipiv, b):
    n = ab.shape[1]
    kv = ku + kl
    nrhs = b.shape[1]
    for j in range(n):
        km = min(kl, n - 1 - j)
        p = ipiv[j]
        if p != j:
            for c in range(nrhs):
                t = b[j, c]
                b[j, c] = b[p, c]
                b[p, c] = t
        for r in range(1, km + 1):
            l = ab[kv + r, j]
            if l != 0.0:
                for c in range(nrhs):
                    b[j + r, c] -= l * b[j, c]
    for j in range(n - 1, -1, -1):
        d = ab[kv, j]
        for c in range(nrhs):
            b[j, c] /= d
        lo = max(0, j - kv)
        for i in range(lo, j):
            u = ab[kv + i - j, j]
            if u != 0.0:
                for c in range(nrhs):
                    b[i, c] -= u * b[j, c]
    return b


class Factorization:
    """LU factors of a square matrix, possibly with clamped pivots.

    ``corrections`` holds tuples ``(col, row, shift)`` such that the factors
    represent ``M + sum shift * e_row e_col^T``.
    """

    def __init__(self, solve, matvec, n, corrections=()):
        self._solve = solve
        self.matvec = matvec
        self.n = n
        self.corrections = list(corrections)

    @property
    def singular(self) -> bool:
        return bool(self.corrections)

    def solve(self, rhs) -> np.ndarray:
        return self._solve(np.asarray(rhs, dtype=float))


def banded_factor(M: BandedMatrix) -> Factorization:
    """Partial-pivoting LU of a BandedMatrix."""
    kl, ku, n = M.kl, M.ku, M.n
    ab = np.zeros((2 * kl + ku + 1, n))
    ab[kl:, :] = M.data
    scale = M.scale
    if not np.isfinite(scale):
        raise NumericalFailure("non-finite matrix entries")
    clamp = scale if scale > 0 else 1.0
    tol = max(PIVOT_RTOL * scale, np.finfo(float).tiny)
    ipiv, cc, cr, cs = _gbtrf(ab, kl, ku, tol, clamp)

    def solve(rhs):
        b = np.array(rhs, dtype=float, order="C").reshape(n, -1)
        return _gbtrs(ab, kl, ku, ipiv, b).reshape(np.shape(rhs))

    corr = list(zip(cc.tolist(), cr.tolist(), cs.tolist()))
    return Factorization(solve, M.matvec, n, corr)


def sparse_factor(S) -> Factorization:
    """SuperLU factorization; falls back to the banded kernel when singular."""
    from scipy.sparse.linalg import splu

    S = sp.csc_matrix(S)
    try:
        lu = splu(S, permc_spec="COLAMD")
    except RuntimeError:
        return banded_factor(BandedMatrix.from_sparse(S))
    diag = np.abs(lu.U.diagonal())
    scale = abs(S).max() if S.nnz else 0.0
    if scale == 0 or np.min(diag) < PIVOT_RTOL * scale:
        return banded_factor(BandedMatrix.from_sparse(S))
    return Factorization(lambda r: lu.solve(r), lambda x: S @ x, S.shape[0])


def factorize(M, backend: str = "banded") -> Factorization:
    """Factor a BandedMatrix, a scipy sparse matrix or a dense array."""
    if isinstance(M, Factorization):
        return M
    if backend == "sparse":
        if isinstance(M, BandedMatrix):
            M = sp.csc_matrix(M.to_dense())
        return sparse_factor(M)
    if backend != "banded":
        raise DomainError(f"unknown linear-solver backend {backend!r}")
    if isinstance(M, BandedMatrix):
        return banded_factor(M)
    if sp.issparse(M):
        return banded_factor(BandedMatrix.from_sparse(M))
    return banded_factor(BandedMatrix.from_dense(M))


def banded_lu_solve(M, rhs) -> np.ndarray:
    """Solve M x = rhs; raises SingularMatrixError on a vanishing pivot."""
    F = factorize(M)
    if F.singular:
        raise SingularMatrixError(f"singular pivot at column(s) {[c for c, _, _ in F.corrections]}")
    return F.solve(rhs)


def bordered_solve(M, B, C, D, f, g, backend: str = "banded", refine: int = 1):
    """Solve the bordered system [[M, B], [C^T, D]] [x; y] = [f; g].

    ``B`` and ``C`` are n-by-m (or length-n vectors for m = 1), ``D`` is
    m-by-m.  ``M`` may be singular provided the bordered matrix is not.
    Returns ``(x, y)`` with ``y`` shaped like ``g``.
    """
    F = factorize(M, backend)
    n = F.n
    B = np.asarray(B, dtype=float).reshape(n, -1)
    C = np.asarray(C, dtype=float).reshape(n, -1)
    m = B.shape[1]
    D = np.asarray(D, dtype=float).reshape(m, m)
    f = np.asarray(f, dtype=float).reshape(n)
    g_shape = np.shape(g)
    g = np.asarray(g, dtype=float).reshape(m)

    # clamped pivots: M = Mt - sum shift e_row e_col^T, Mt is what F factors
    k = len(F.corrections)
    Bx = np.zeros((n, m + k))
    Cx = np.zeros((n, m + k))
    Dx = np.zeros((m + k, m + k))
    Bx[:, :m], Cx[:, :m], Dx[:m, :m] = B, C, D
    for t, (col, row, shift) in enumerate(F.corrections):
        Bx[row, m + t] = -1.0
        Cx[col, m + t] = shift
        Dx[m + t, m + t] = -1.0

    X = F.solve(np.column_stack([f, Bx]))
    S = Dx - Cx.T @ X[:, 1:]
    if not np.all(np.isfinite(S)):
        raise SingularMatrixError("non-finite Schur complement")
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > 1e15:
        raise SingularMatrixError("bordered system is singular")

    def _solve(rf, rg):
        Xr = F.solve(rf)
        rhs = np.concatenate([rg, np.zeros(k)]) - Cx.T @ Xr
        Y = np.linalg.solve(S, rhs)
        return Xr - X[:, 1:] @ Y, Y[:m]

    Y = np.linalg.solve(S, np.concatenate([g, np.zeros(k)]) - Cx.T @ X[:, 0])
    x, y = X[:, 0] - X[:, 1:] @ Y, Y[:m]
    for _ in range(refine):
        rf = f - F.matvec(x) - B @ y
        rg = g - C.T @ x - D @ y
        dx, dy = _solve(rf, rg)
        x, y = x + dx, y + dy
    return x, y.reshape(g_shape)


# ---------------------------------------------------------------------------
# symmetric tridiagonal pencils
# ---------------------------------------------------------------------------
@njit(cache=True)
def _sturm_count(c, e2, x):
    """Number of eigenvalues of the symmetric tridiagonal (c, e) below x."""
    n = c.shape[0]
    count = 0
    d = c[0] - x
    if d == 0.0:
        d = -1e-300
    if d < 0.0:
        count += 1
    for i in range(1, n):
        d = (c[i] - x) - e2[i - 1] / d
        if d == 0.0:
            d = -1e-300
        if d < 0.0:
            count += 1
    return count


@njit(cache=True)
def _bisect_smallest(c, e2, lo, hi, rtol, max_iter):
    it = 0
    while hi - lo > rtol * max(1.0, abs(lo), abs(hi)):
        if it >= max_iter:
            return lo, hi, -1
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _sturm_count(c, e2, mid) >= 1:
            hi = mid
        else:
            lo = mid
        it += 1
    return lo, hi, it


@njit(cache=True)
def _ldl_solve(c, e, sigma, b):
    """Solve (T - sigma I) x = b for symmetric tridiagonal T via LDL^T."""
    n = c.shape[0]
    d = np.empty(n)
    l = np.empty(max(n - 1, 1))
    tiny = 2.2e-16
    d[0] = c[0] - sigma
    if d[0] == 0.0:  # shift exactly on an eigenvalue of a leading block
        d[0] = tiny * (abs(c[0]) + abs(sigma) + 1.0)
    for i in range(1, n):
        l[i - 1] = e[i - 1] / d[i - 1]
        d[i] = c[i] - sigma - l[i - 1] * e[i - 1]
        if d[i] == 0.0:
            d[i] = tiny * (abs(c[i]) + abs(sigma) + abs(e[i - 1]) + 1.0)
    y = b.copy()
    for i in range(1, n):
        y[i] -= l[i - 1] * y[i - 1]
    for i in range(n):
        y[i] /= d[i]
    for i in range(n - 2, -1, -1):
        y[i] -= l[i] * y[i + 1]
    return y


def sturm_count(diag, off, bdiag, x) -> int:
    """Number of generalized eigenvalues of (A, B) below ``x``."""
    c, e = _reduce(diag, off, bdiag)
    return int(_sturm_count(c, e * e, float(x)))


def _reduce(diag, off, bdiag):
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    bdiag = np.asarray(bdiag, dtype=float)
    n = diag.size
    if off.size != max(n - 1, 0) or bdiag.size != n:
        raise DomainError("inconsistent tridiagonal sizes")
    if not np.all(bdiag > 0):
        raise DomainError("B must be a positive diagonal")
    s = 1.0 / np.sqrt(bdiag)
    return diag * s * s, off * s[:-1] * s[1:]


def tridiag_eig_smallest(diag, off, bdiag, rtol: float = 1e-12, max_iter: int = 400):
    """Smallest generalized eigenpair of a symmetric tridiagonal pencil.

    Parameters
    ----------
    diag, off : array_like
        Diagonal and first off-diagonal of the symmetric matrix A.
    bdiag : array_like
        Positive diagonal of B.

    Returns
    -------
    mu : float
        Smallest eigenvalue, located by inertia bisection to a relative
        interval of ``rtol`` and polished by the Rayleigh quotient.
    vec : ndarray
        B-normalized eigenvector whose largest-magnitude entry is positive.
    """
    c, e = _reduce(diag, off, bdiag)
    n = c.size
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(e))):
        raise NumericalFailure("non-finite pencil entries")
    ae = np.abs(e)
    rad = np.zeros(n)
    rad[:-1] += ae
    rad[1:] += ae
    lo = float(np.min(c - rad))
    hi = float(np.min(c + rad))
    span = max(1.0, abs(lo), abs(hi))
    lo -= 1e-9 * span
    hi += 1e-9 * span
    if n == 1:
        lo = hi = float(c[0])
        it = 0
    else:
        lo, hi, it = _bisect_smallest(c, e * e, lo, hi, rtol, max_iter)
    if it < 0:
        raise NumericalFailure("inertia bisection did not converge")
    sigma = lo - rtol * max(1.0, abs(lo))
    x = np.ones(n)
    for _ in range(2):
        x = _ldl_solve(c, e, sigma, x) if n > 1 else x
        nrm = np.linalg.norm(x)
        if not np.isfinite(nrm) or nrm == 0:
            raise NumericalFailure("inverse iteration broke down")
        x = x / nrm
    # Rayleigh quotient in the reduced symmetric form
    tx = c * x
    tx[:-1] += e * x[1:]
    tx[1:] += e * x[:-1]
    mu = float(np.clip(x @ tx, lo, hi)) if n > 1 else float(c[0])
    vec = x / np.sqrt(np.asarray(bdiag, dtype=float))
    vec = vec / np.sqrt(np.sum(np.asarray(bdiag) * vec * vec))
    if vec[np.argmax(np.abs(vec))] < 0:
        vec = -vec
    return mu, vec
