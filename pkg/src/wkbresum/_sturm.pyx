# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Sturm-sequence bisection (same interface as ``_sturm_py``)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs
from libc.float cimport DBL_MIN

cnp.import_array()


cdef inline long _count(const double[::1] d, const double[::1] e2, double sigma, double pivmin) nogil:
    cdef Py_ssize_t i, n = d.shape[0]
    cdef double q = d[0] - sigma
    cdef long c = 0
    if fabs(q) < pivmin:
        q = -pivmin
    if q < 0:
        c += 1
    for i in range(1, n):
        q = d[i] - sigma - e2[i - 1] / q
        if fabs(q) < pivmin:
            q = -pivmin
        if q < 0:
            c += 1
    return c


def _pivmin(double[::1] e2):
    cdef double m = 1.0
    cdef Py_ssize_t i
    for i in range(e2.shape[0]):
        if e2[i] > m:
            m = e2[i]
    return DBL_MIN * m


def sturm_count(d, e2, sigma):
    cdef const double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef const double[::1] ev = np.ascontiguousarray(e2, dtype=np.float64)
    cdef double[::1] s = np.ascontiguousarray(np.atleast_1d(sigma), dtype=np.float64)
    cdef double pm = _pivmin(np.ascontiguousarray(e2, dtype=np.float64))
    out = np.empty(s.shape[0], dtype=np.int64)
    cdef long long[::1] o = out
    cdef Py_ssize_t j
    with nogil:
        for j in range(s.shape[0]):
            o[j] = _count(dv, ev, s[j], pm)
    return out


def bisect_eigenvalues(d, e, long k_lo, long k_hi, double lo, double hi, double tol):
    cdef const double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    e2_arr = np.ascontiguousarray(e, dtype=np.float64) ** 2
    cdef const double[::1] ev = e2_arr
    cdef double pm = _pivmin(e2_arr)
    cdef long m = k_hi - k_lo
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    cdef long j
    cdef double a, b, mid
    with nogil:
        for j in range(m):
            a = lo
            b = hi
            while b - a > tol * (1 + fabs(a) + fabs(b)):
                mid = 0.5 * (a + b)
                if mid <= a or mid >= b:
                    break
                if _count(dv, ev, mid, pm) > k_lo + j:
                    b = mid
                else:
                    a = mid
            o[j] = 0.5 * (a + b)
    return out
