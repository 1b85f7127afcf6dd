"""Compiled time-stepping kernel: repeated tridiagonal solves with fixed bands."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef Py_ssize_t _factor(const double[::1] lower, const double[::1] diag,
                        const double[::1] upper, double[::1] cp,
                        double[::1] inv_m) noexcept nogil:
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    cdef double m
    m = diag[0]
    if m == 0.0:
        return 1
    inv_m[0] = 1.0 / m
    cp[0] = upper[0] * inv_m[0]
    for i in range(1, n):
        m = diag[i] - lower[i] * cp[i - 1]
        if m == 0.0:
            return i + 1
        inv_m[i] = 1.0 / m
        cp[i] = upper[i] * inv_m[i]
    return 0


cdef void _sweep(const double[::1] lower, const double[::1] cp,
                 const double[::1] inv_m, double[::1] F) noexcept nogil:
    cdef Py_ssize_t n = F.shape[0]
    cdef Py_ssize_t i
    F[0] = F[0] * inv_m[0]
    for i in range(1, n):
        F[i] = (F[i] - lower[i] * F[i - 1]) * inv_m[i]
    for i in range(n - 2, -1, -1):
        F[i] = F[i] - cp[i] * F[i + 1]


def thomas(const double[::1] lower, const double[::1] diag,
           const double[::1] upper, const double[::1] rhs):
    """Solve one tridiagonal system; returns (solution, status)."""
    cdef Py_ssize_t n = diag.shape[0]
    cp = np.empty(n)
    inv_m = np.empty(n)
    out = np.array(rhs, dtype=np.float64, copy=True)
    cdef Py_ssize_t status = _factor(lower, diag, upper, cp, inv_m)
    if status == 0:
        _sweep(lower, cp, inv_m, out)
    return out, status


def advance(const double[::1] lower, const double[::1] diag,
            const double[::1] upper, double[::1] F, Py_ssize_t nsteps):
    """Apply ``nsteps`` implicit steps in place. Returns 0 or 1+index of a zero pivot."""
    cdef Py_ssize_t n = diag.shape[0]
    cdef double[::1] cp = np.empty(n)
    cdef double[::1] inv_m = np.empty(n)
    cdef Py_ssize_t status, s
    with nogil:
        status = _factor(lower, diag, upper, cp, inv_m)
        if status == 0:
            for s in range(nsteps):
                _sweep(lower, cp, inv_m, F)
    return status
