"""Selects the stepping kernel at import time.

Set ``CDFDRIFT_BACKEND=python`` to force the NumPy/SciPy fallback, or
``cython`` to require the compiled extension.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import SolverError
from . import _fallback

_requested = os.environ.get("CDFDRIFT_BACKEND", "auto").lower()

_compiled = None
if _requested != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:
        if _requested == "cython":
            raise
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def _impl(name: str | None):
    name = name or BACKEND
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernel cdfdrift._kernels is not built")
        return _compiled
    if name == "python":
        return _fallback
    raise ValueError(f"unknown backend {name!r}")


def _bands(lower, diag, upper):
    return (
        np.ascontiguousarray(lower, dtype=np.float64),
        np.ascontiguousarray(diag, dtype=np.float64),
        np.ascontiguousarray(upper, dtype=np.float64),
    )


def thomas(lower, diag, upper, rhs, backend: str | None = None) -> np.ndarray:
    lower, diag, upper = _bands(lower, diag, upper)
    out, status = _impl(backend).thomas(lower, diag, upper, np.ascontiguousarray(rhs, dtype=np.float64))
    if status:
        raise SolverError(f"zero pivot in tridiagonal elimination at row {status - 1}")
    return np.asarray(out)


def advance(lower, diag, upper, F: np.ndarray, nsteps: int, backend: str | None = None) -> np.ndarray:
    """Advance F in place by ``nsteps`` solves of the fixed tridiagonal system."""
    if F.dtype != np.float64 or not F.flags.c_contiguous:
        raise TypeError("F must be a contiguous float64 array")
    if nsteps <= 0:
        return F
    lower, diag, upper = _bands(lower, diag, upper)
    status = _impl(backend).advance(lower, diag, upper, F, int(nsteps))
    if status:
        raise SolverError(f"zero pivot in tridiagonal elimination at row {status - 1}")
    return F
