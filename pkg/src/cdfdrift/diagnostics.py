"""Conserved quantities, fixation errors, error norms and power-law exponents."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ModelError
from .model import CdfState, DriftModel, GridSpec, PureDrift, Selection, theta_weight


@dataclass(frozen=True)
class DiagnosticsReport:
    t: float
    total_prob: float
    expectation: float
    theta_moment: Optional[float]
    jump_left: float
    jump_right: float


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    tau: float
    error_l2: float
    error_linf: float
    order_l2: Optional[float] = None
    order_linf: Optional[float] = None


def _h(state: CdfState, grid: GridSpec | None) -> float:
    K = state.F.size - 1
    if grid is not None and grid.K != K:
        raise ModelError("state does not match the grid")
    return 1.0 / K


def total_probability(state: CdfState) -> float:
    return float(state.F[-1] - state.F[0])


def discrete_expectation(state: CdfState, grid: GridSpec | None = None) -> float:
    """1 - trapezoid(F): the mean allele frequency."""
    h = _h(state, grid)
    F = state.F
    return float(1.0 - h * F[1:-1].sum() - 0.5 * h * (F[0] + F[-1]))


def discrete_theta_moment(state: CdfState, grid: GridSpec | None, model: DriftModel) -> float:
    """Discrete analogue of the integral of theta against the density.

    Both the weighted integral of F and the normaliser A use the trapezoid
    rule on the state's own grid.
    """
    if not isinstance(model, Selection):
        raise ModelError("theta moment needs a selection model")
    h = _h(state, grid)
    x = np.arange(state.F.size) * h
    w = theta_weight(model, x)
    A = h * w[1:-1].sum() + 0.5 * h * (w[0] + w[-1])
    F = state.F
    weighted = h * (F[1:-1] * w[1:-1]).sum() + 0.5 * h * (F[0] * w[0] + F[-1] * w[-1])
    return float(1.0 - weighted / A)


def report(state: CdfState, grid: GridSpec | None, model: DriftModel | None = None) -> DiagnosticsReport:
    F = state.F
    if isinstance(model, Selection):
        tm = discrete_theta_moment(state, grid, model)
    elif isinstance(model, PureDrift):
        tm = discrete_expectation(state, grid)
    else:
        tm = None
    return DiagnosticsReport(
        t=float(state.t),
        total_prob=total_probability(state),
        expectation=discrete_expectation(state, grid),
        theta_moment=tm,
        jump_left=float(F[1] - F[0]),
        jump_right=float(F[-1] - F[-2]),
    )


def fixation_errors(state: CdfState, a_inf: float, b_inf: float) -> tuple[float, float]:
    F = state.F
    return abs(F[1] - F[0] - a_inf), abs(F[-1] - F[-2] - b_inf)


def window_indices(K: int, window: tuple[float, float]) -> tuple[int, int]:
    """First and last node indices with x_i inside the closed window."""
    lo, hi = window
    # small slack so nodes that sit on the window edges are kept
    k1 = math.ceil(lo * K - 1e-9)
    k2 = math.floor(hi * K + 1e-9)
    if k1 > k2:
        raise ModelError(f"window {window} holds no nodes of a K={K} grid")
    return k1, k2


def local_error(
    numeric: CdfState,
    reference: CdfState,
    window: tuple[float, float] = (0.3, 0.7),
) -> tuple[float, float]:
    """Discrete L2 and max-norm error of F on an interior window.

    The reference must live on a grid nested in the numeric one
    (K_ref a multiple of K); it is restricted to the coarse nodes.
    """
    K = numeric.F.size - 1
    K_ref = reference.F.size - 1
    if K_ref % K:
        raise ModelError(f"reference grid K={K_ref} is not nested in K={K}")
    ref = reference.F[:: K_ref // K]
    k1, k2 = window_indices(K, window)
    e = numeric.F[k1 : k2 + 1] - ref[k1 : k2 + 1]
    l2 = math.sqrt(float(np.sum(e * e)) / K)
    return l2, float(np.max(np.abs(e)))


def convergence_order(e_coarse: float, e_fine: float, ratio: float = 2.0) -> float:
    if not (e_coarse > 0 and e_fine > 0):
        raise ModelError("convergence order needs positive errors")
    return math.log(e_coarse / e_fine) / math.log(ratio)


def convergence_table(rows: list[tuple[float, float, float, float]]) -> list[ConvergenceRow]:
    """(h, tau, l2, linf) tuples, coarse to fine, into rows with orders."""
    out = []
    for n, (h, tau, l2, linf) in enumerate(rows):
        if n == 0:
            out.append(ConvergenceRow(h, tau, l2, linf))
            continue
        ph = rows[n - 1][0]
        ratio = ph / h
        out.append(
            ConvergenceRow(
                h, tau, l2, linf,
                convergence_order(rows[n - 1][2], l2, ratio),
                convergence_order(rows[n - 1][3], linf, ratio),
            )
        )
    return out


def power_law_exponents(coarse: CdfState, fine: CdfState) -> tuple[float, float]:
    """Boundary exponents from one spatial halving.

    F(x) ~ x^gamma near 0 gives F_1 proportional to h^gamma, so
    gamma = log2(F_1(h) / F_1(h/2)); likewise for 1 - F near 1 using
    F_K - F_{K-1}.
    """
    Kc = coarse.F.size - 1
    Kf = fine.F.size - 1
    if Kf != 2 * Kc:
        raise ModelError(f"fine grid must have exactly twice the intervals ({Kf} vs {Kc})")
    left_c, left_f = coarse.F[1] - coarse.F[0], fine.F[1] - fine.F[0]
    right_c, right_f = coarse.F[-1] - coarse.F[-2], fine.F[-1] - fine.F[-2]
    if min(left_c, left_f, right_c, right_f) <= 0:
        raise ModelError("power-law exponents need positive boundary increments")
    ln2 = math.log(2.0)
    return math.log(left_c / left_f) / ln2, math.log(right_c / right_f) / ln2


def loglog_slopes(state: CdfState, n_nodes: int = 10) -> tuple[float, float]:
    """Least-squares slopes of ln F vs ln x near 0 and ln(1-F) vs ln(1-x) near 1."""
    F = state.F
    K = F.size - 1
    if n_nodes < 2 or n_nodes >= K:
        raise ModelError("need 2 <= n_nodes < K")
    x = np.arange(K + 1) / K
    i = np.arange(1, n_nodes + 1)
    left = np.polyfit(np.log(x[i]), np.log(F[i]), 1)[0]
    j = K - i
    right = np.polyfit(np.log1p(-x[j]), np.log1p(-F[j]), 1)[0]
    return float(left), float(right)


def boundary_loglog_samples(state: CdfState, n_nodes: int = 50):
    """(ln x, ln F) near 0 and (ln(1-x), ln(1-F)) near 1 for plotting."""
    F = state.F
    K = F.size - 1
    n = min(n_nodes, K - 1)
    x = np.arange(K + 1) / K
    i = np.arange(1, n + 1)
    j = K - i
    with np.errstate(divide="ignore"):
        return (
            np.log(x[i]), np.log(F[i]),
            np.log1p(-x[j]), np.log1p(-F[j]),
        )
