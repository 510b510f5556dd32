"""Tridiagonal linear algebra: Thomas solves, Sturm counts, bisection and inverse iteration.

Symmetric tridiagonal matrices are passed as ``(diag, off)`` with ``len(off) == len(diag) - 1``.
"""
import numba
import numpy as np

from .errors import SolverBreakdown


@numba.njit(cache=True)
def _thomas(lower, diag, upper, rhs, out):
    n = diag.shape[0]
    cp = np.empty(n, dtype=out.dtype)
    b = diag[0]
    if b == 0:
        return 0
    cp[0] = upper[0] / b if n > 1 else 0
    out[0] = rhs[0] / b
    for i in range(1, n):
        b = diag[i] - lower[i - 1] * cp[i - 1]
        if b == 0:
            return i
        if i < n - 1:
            cp[i] = upper[i] / b
        out[i] = (rhs[i] - lower[i - 1] * out[i - 1]) / b
    for i in range(n - 2, -1, -1):
        out[i] -= cp[i] * out[i + 1]
    return -1


def thomas_solve(lower, diag, upper, rhs):
    """Solve a tridiagonal system by forward elimination and back substitution.

    ``lower[i]`` couples row i+1 to column i, ``upper[i]`` couples row i to column i+1.
    No pivoting: raises SolverBreakdown on an exactly zero pivot.
    """
    diag = np.asarray(diag)
    dtype = np.result_type(lower, diag, upper, rhs, np.float64)
    lower, diag, upper, rhs = (np.ascontiguousarray(a, dtype=dtype) for a in (lower, diag, upper, rhs))
    out = np.empty_like(rhs)
    status = _thomas(lower, diag, upper, rhs, out)
    if status >= 0:
        raise SolverBreakdown(f"zero pivot at row {status}")
    if not np.all(np.isfinite(out)):
        raise SolverBreakdown("non-finite solution")
    return out


@numba.njit(cache=True)
def _sturm_count(diag, off, lam):
    tiny = 1e-300
    count = 0
    q = diag[0] - lam
    if q < 0:
        count += 1
    for i in range(1, diag.shape[0]):
        if q == 0:
            q = tiny
        q = diag[i] - lam - off[i - 1] * off[i - 1] / q
        if q < 0:
            count += 1
    return count


def sturm_count(diag, off, lam):
    """Number of eigenvalues strictly below ``lam``."""
    return int(_sturm_count(np.asarray(diag, float), np.asarray(off, float), float(lam)))


def gershgorin_bounds(diag, off):
    diag = np.asarray(diag, float)
    r = np.zeros_like(diag)
    a = np.abs(off)
    r[:-1] += a
    r[1:] += a
    return float(np.min(diag - r)), float(np.max(diag + r))


@numba.njit(cache=True)
def _bisect(diag, off, k, lo, hi):
    # k-th smallest eigenvalue (0-based) lies in [lo, hi)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _sturm_count(diag, off, mid) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def eigenvalues_bisect(diag, off, indices):
    """Selected eigenvalues (by ascending index) to full double precision."""
    diag = np.asarray(diag, float)
    off = np.asarray(off, float)
    lo, hi = gershgorin_bounds(diag, off)
    span = max(hi - lo, 1.0)
    lo -= 1e-6 * span
    hi += 1e-6 * span
    return np.array([_bisect(diag, off, int(k), lo, hi) for k in indices])


def inverse_iteration(diag, off, lam, iterations=3, seed_vector=None):
    """Unit eigenvector for eigenvalue estimate ``lam`` by shifted inverse iteration.

    Exact zero pivots are nudged by a relative epsilon, as usual for this method.
    """
    diag = np.asarray(diag, float)
    off = np.asarray(off, float)
    n = diag.shape[0]
    shifted = diag - lam
    scale = np.max(np.abs(diag)) + abs(lam)
    y = np.ones(n) if seed_vector is None else np.asarray(seed_vector, float).copy()
    y /= np.linalg.norm(y)
    for _ in range(iterations):
        try:
            z = thomas_solve(off, shifted, off, y)
        except SolverBreakdown:
            shifted = shifted + np.finfo(float).eps * scale
            z = thomas_solve(off, shifted, off, y)
        y = z / np.linalg.norm(z)
    # fix the sign so the largest-magnitude component is positive
    if y[np.argmax(np.abs(y))] < 0:
        y = -y
    return y
