"""NumPy/SciPy implementation of the stepping kernel, used when the
compiled extension is unavailable."""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack


def thomas(lower, diag, upper, rhs):
    n = diag.size
    cp = np.empty(n)
    out = np.array(rhs, dtype=float)
    m = diag[0]
    if m == 0.0:
        return out, 1
    cp[0] = upper[0] / m
    out[0] = out[0] / m
    for i in range(1, n):
        m = diag[i] - lower[i] * cp[i - 1]
        if m == 0.0:
            return out, i + 1
        cp[i] = upper[i] / m
        out[i] = (out[i] - lower[i] * out[i - 1]) / m
    for i in range(n - 2, -1, -1):
        out[i] -= cp[i] * out[i + 1]
    return out, 0


def advance(lower, diag, upper, F, nsteps):
    # LAPACK's banded LU: one factorisation, then a cheap solve per step
    dl, d, du, du2, ipiv, info = lapack.dgttrf(lower[1:], diag, upper[:-1])
    if info > 0:
        return int(info)
    x = F
    for _ in range(nsteps):
        x, info = lapack.dgttrs(dl, d, du, du2, ipiv, x)
    F[:] = x
    return 0
