# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same signatures as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, fabs, M_PI

from prcs_tomo._pykernels import I0E_A, I0E_B

cnp.import_array()

cdef double[30] _A
cdef double[25] _B
cdef int _i
for _i in range(30):
    _A[_i] = I0E_A[_i]
for _i in range(25):
    _B[_i] = I0E_B[_i]

cdef double _psi0_norm = (2.0 / M_PI) ** 0.25


cdef inline double _chbevl(double t, const double* c, int n) noexcept nogil:
    cdef double b0 = c[0], b1 = 0.0, b2 = 0.0
    cdef int i
    for i in range(1, n):
        b2 = b1
        b1 = b0
        b0 = t * b1 - b2 + c[i]
    return 0.5 * (b0 - b2)


cdef inline double _i0e(double x) noexcept nogil:
    x = fabs(x)
    if x <= 8.0:
        return _chbevl(x / 2.0 - 2.0, _A, 30)
    return _chbevl(32.0 / x - 2.0, _B, 25) / sqrt(x)


def i0e(x):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xa = np.ascontiguousarray(
        np.ravel(x), dtype=np.float64)
    cdef Py_ssize_t n = xa.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    with nogil:
        for i in range(n):
            out[i] = _i0e(xa[i])
    return out.reshape(np.shape(x))


def _recurrence(int kmax):
    k = np.arange(kmax, dtype=np.float64)
    return np.sqrt(2.0 / (k + 1)), np.sqrt(k / (k + 1))


def fock_density_table(x, int kmax):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xa.shape[0], i
    cdef int k
    cdef cnp.ndarray[cnp.float64_t, ndim=2] table = np.empty((kmax + 1, n))
    a_np, b_np = _recurrence(kmax)
    cdef double[::1] a = a_np, b = b_np
    cdef double y, prev, cur, nxt
    with nogil:
        for i in range(n):
            y = sqrt(2.0) * xa[i]
            prev = 0.0
            cur = _psi0_norm * exp(-xa[i] * xa[i])
            table[0, i] = cur * cur
            for k in range(kmax):
                nxt = a[k] * y * cur - b[k] * prev
                prev = cur
                cur = nxt
                table[k + 1, i] = cur * cur
    return table


def fock_mixture(x, coeffs):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] c = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t n = xa.shape[0], i
    cdef int k, kmax = c.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    a_np, b_np = _recurrence(kmax)
    cdef double[::1] a = a_np, b = b_np
    cdef double y, prev, cur, nxt, acc
    with nogil:
        for i in range(n):
            y = sqrt(2.0) * xa[i]
            prev = 0.0
            cur = _psi0_norm * exp(-xa[i] * xa[i])
            acc = c[0] * cur * cur
            for k in range(kmax):
                nxt = a[k] * y * cur - b[k] * prev
                prev = cur
                cur = nxt
                acc += c[k + 1] * cur * cur
            out[i] = acc
    return out
