"""Pure-numpy Sturm-sequence bisection for symmetric tridiagonal matrices.

Fallback for the compiled kernel; all shifts of one bisection sweep are
processed together so the Python-level loop runs over matrix rows only.
"""
from __future__ import annotations

import numpy as np


def _pivmin(e2):
    return np.finfo(float).tiny * max(1.0, float(np.max(e2)) if e2.size else 1.0)


def sturm_count(d, e2, sigma):
    """Number of eigenvalues below each shift in ``sigma``.

    Parameters
    ----------
    d : ndarray
        Diagonal, length n.
    e2 : ndarray
        Squared off-diagonal, length n - 1.
    sigma : array_like
        Shifts.
    """
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    pivmin = _pivmin(e2)
    q = d[0] - sigma
    q = np.where(np.abs(q) < pivmin, -pivmin, q)
    count = (q < 0).astype(np.int64)
    for i in range(1, d.size):
        q = d[i] - sigma - e2[i - 1] / q
        q = np.where(np.abs(q) < pivmin, -pivmin, q)
        count += q < 0
    return count


def bisect_eigenvalues(d, e, k_lo, k_hi, lo, hi, tol):
    """Eigenvalues with indices ``k_lo..k_hi - 1`` (ascending) inside ``[lo, hi]``."""
    d = np.ascontiguousarray(d, dtype=float)
    e2 = np.ascontiguousarray(e, dtype=float) ** 2
    k = np.arange(k_lo, k_hi)
    a = np.full(k.size, float(lo))
    b = np.full(k.size, float(hi))
    for _ in range(2000):
        width = b - a
        if np.all(width <= tol * (1 + np.abs(a) + np.abs(b))):
            break
        mid = 0.5 * (a + b)
        if np.all((mid <= a) | (mid >= b)):
            break
        c = sturm_count(d, e2, mid)
        below = c > k  # eigenvalue k lies below mid
        b = np.where(below, mid, b)
        a = np.where(below, a, mid)
    return 0.5 * (a + b)
