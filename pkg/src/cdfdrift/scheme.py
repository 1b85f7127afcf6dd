"""Implicit finite-difference stepping for the CDF form of the drift equation.

Two variants share one assembly routine:

* ``RFDM``: the revised scheme, in which the diffusion coefficient on the two
  boundary faces is set to zero (a_{1/2} = a_{K-1/2} = 0) so the pinned
  boundary values never diffuse into the interior.
* ``SFDM``: the standard scheme with a(x_{1/2}) and a(x_{K-1/2}) kept.

Every interior row of the matrix has a positive diagonal, nonpositive
off-diagonals and a diagonal-dominance margin of exactly one, so each step
is an M-matrix solve: unconditionally stable and bounded by [0, 1].
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _backend
from .errors import ModelError, SolverError
from .model import (
    CdfState,
    DriftModel,
    GridSpec,
    InitialCondition,
    Selection,
    TimeSpec,
    build_initial_cdf,
    eval_diffusion,
    eval_drift,
)


class SchemeVariant(enum.Enum):
    RFDM = "rfdm"
    SFDM = "sfdm"


RFDM = SchemeVariant.RFDM
SFDM = SchemeVariant.SFDM

CONVECTION_RULES = ("upwind", "downwind")


def default_convection(model: DriftModel) -> str:
    """One-sided difference used for M(x) F_x when none is requested.

    Selection drifts vanish at both ends of [0, 1]; differencing them
    towards the interior keeps the pinned boundary values out of the
    convection term, which keeps the fixation jumps accurate. All
    other models difference upwind.
    """
    return "downwind" if isinstance(model, Selection) else "upwind"


@dataclass
class TridiagonalSystem:
    """Bands of the (K+1)x(K+1) step matrix plus right-hand side.

    ``lower[i]`` multiplies F_{i-1} in row i, ``upper[i]`` multiplies F_{i+1};
    ``lower[0]`` and ``upper[K]`` are always zero.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray = field(default=None)

    @property
    def size(self) -> int:
        return self.diag.size

    def dense(self) -> np.ndarray:
        n = self.size
        A = np.diag(self.diag)
        A[np.arange(1, n), np.arange(n - 1)] = self.lower[1:]
        A[np.arange(n - 1), np.arange(1, n)] = self.upper[:-1]
        return A

    def matvec(self, F: np.ndarray) -> np.ndarray:
        out = self.diag * F
        out[1:] += self.lower[1:] * F[:-1]
        out[:-1] += self.upper[:-1] * F[1:]
        return out

    def margin(self) -> np.ndarray:
        """diag - |lower| - |upper| on interior rows."""
        s = slice(1, self.size - 1)
        return self.diag[s] - np.abs(self.lower[s]) - np.abs(self.upper[s])


def face_diffusion(grid: GridSpec, variant: SchemeVariant) -> np.ndarray:
    """a_{i-1/2} for i = 0..K+1; entries 1 and K are the boundary faces."""
    a = eval_diffusion(grid.half_nodes())
    if variant is SchemeVariant.RFDM:
        a[1] = 0.0
        a[grid.K] = 0.0
    return a


def assemble_matrix(
    model: DriftModel,
    grid: GridSpec,
    tau: float,
    variant: SchemeVariant = RFDM,
    convection: str | None = None,
) -> TridiagonalSystem:
    """Step matrix without right-hand side (it does not depend on time)."""
    if not isinstance(grid, GridSpec):
        grid = GridSpec(grid)
    if grid.K < 4:
        raise ModelError("need K >= 4")
    if not tau > 0:
        raise ModelError(f"tau must be positive, got {tau}")
    variant = SchemeVariant(variant)
    rule = convection or default_convection(model)
    if rule not in CONVECTION_RULES:
        raise ModelError(f"unknown convection rule {rule!r}")

    K, h = grid.K, grid.h
    r = tau / h**2
    q = tau / h
    a = face_diffusion(grid, variant)
    i = np.arange(1, K)
    a_left, a_right = a[i], a[i + 1]
    M = eval_drift(model, grid.x[i])

    lower = np.zeros(K + 1)
    upper = np.zeros(K + 1)
    diag = np.ones(K + 1)
    lower[i] = -r * a_left
    upper[i] = -r * a_right
    diag[i] = 1.0 + r * (a_left + a_right)

    backward = M >= 0
    if rule == "downwind":
        # reversed difference, kept only where diffusion still dominates so
        # the off-diagonals stay nonpositive
        reversed_ok = np.where(M > 0, a_right >= h * M, a_left >= -h * M)
        backward = np.where(reversed_ok, M < 0, M >= 0)

    qM = q * M
    bw = backward
    fw = ~backward
    diag[i[bw]] += qM[bw]
    lower[i[bw]] -= qM[bw]
    diag[i[fw]] -= qM[fw]
    upper[i[fw]] += qM[fw]
    return TridiagonalSystem(lower, diag, upper)


def assemble(
    prev: CdfState,
    model: DriftModel,
    grid: GridSpec,
    tau: float,
    variant: SchemeVariant = RFDM,
    convection: str | None = None,
) -> TridiagonalSystem:
    """Linear system whose solution is the CDF one step after ``prev``."""
    if prev.F.size != grid.K + 1:
        raise ModelError(f"state has {prev.F.size} nodes, grid has {grid.K + 1}")
    sys = assemble_matrix(model, grid, tau, variant, convection)
    rhs = np.array(prev.F, dtype=float)
    rhs[0] = 0.0
    rhs[-1] = 1.0
    sys.rhs = rhs
    return sys


def thomas_solve(sys: TridiagonalSystem, backend: str | None = None) -> np.ndarray:
    """Forward elimination and back substitution, no pivoting."""
    F = _backend.thomas(sys.lower, sys.diag, sys.upper, sys.rhs, backend=backend)
    resid = np.max(np.abs(sys.matvec(F) - sys.rhs))
    if not resid <= 1e-10 * (1.0 + np.max(np.abs(sys.rhs))):
        raise SolverError(f"tridiagonal residual {resid:.3e} too large")
    return F


def _enforce_bounds(F: np.ndarray, tol: float = 1e-12) -> None:
    """Fail if F left [0, 1] by more than ``tol``; clip roundoff in place."""
    if F[0] != 0.0 or F[-1] != 1.0:
        raise SolverError("boundary values drifted from F_0 = 0, F_K = 1")
    lo, hi = F.min(), F.max()
    if lo < -tol or hi > 1.0 + tol or not np.all(np.isfinite(F)):
        raise SolverError(f"CDF left [0, 1]: min={lo!r}, max={hi!r}")
    if lo < 0.0 or hi > 1.0:
        np.clip(F, 0.0, 1.0, out=F)


def step(
    prev: CdfState,
    model: DriftModel,
    grid: GridSpec,
    tau: float,
    variant: SchemeVariant = RFDM,
    convection: str | None = None,
) -> CdfState:
    sys = assemble(prev, model, grid, tau, variant, convection)
    F = thomas_solve(sys)
    _enforce_bounds(F)
    return CdfState(prev.t + tau, F)


Observer = Callable[[int, CdfState], None]


@dataclass
class RunResult:
    final: CdfState
    reports: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)


def run(
    ic: InitialCondition | CdfState,
    model: DriftModel,
    grid: GridSpec,
    time: TimeSpec,
    variant: SchemeVariant = RFDM,
    observers: Sequence[Observer] = (),
    *,
    stride: int | None = None,
    snapshot_times: Iterable[float] = (),
    convection: str | None = None,
    diagnostics: bool = True,
    backend: str | None = None,
) -> RunResult:
    """Advance ``time.N`` steps from the initial data.

    Diagnostics reports (and the ``observers``) are produced at step 0, every
    ``stride`` steps, at each requested snapshot and at the final step.
    """
    from .diagnostics import report

    state = ic.copy() if isinstance(ic, CdfState) else build_initial_cdf(ic, grid)
    if state.F.size != grid.K + 1:
        raise ModelError("initial state does not match the grid")
    N = time.N
    sys = assemble_matrix(model, grid, time.tau, variant, convection)

    stops = {0, N}
    if stride:
        if stride < 1:
            raise ModelError("stride must be >= 1")
        stops.update(range(0, N + 1, stride))
    snap_steps = {}
    for t in snapshot_times:
        n = int(round(t / time.tau))
        if not 0 <= n <= N:
            raise ModelError(f"snapshot time {t} outside [0, {time.T}]")
        snap_steps[n] = t
    stops.update(snap_steps)

    result = RunResult(state)
    F = np.ascontiguousarray(state.F, dtype=np.float64)
    t0 = state.t
    done = 0
    for n in sorted(stops):
        if n > done:
            _backend.advance(sys.lower, sys.diag, sys.upper, F, n - done, backend=backend)
            done = n
            _enforce_bounds(F)
        cur = CdfState(t0 + n * time.tau, F)
        if diagnostics:
            result.reports.append(report(cur, grid, model))
        for obs in observers:
            obs(n, cur)
        if n in snap_steps:
            result.snapshots[snap_steps[n]] = cur.copy()
    result.final = CdfState(t0 + N * time.tau, F.copy())
    return result


def lambda_terms(F: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Extra left-hand-side terms of sFDM relative to rFDM, per row.

    Row 1 gains a(x_{1/2}) D_h F_1 / h = (1 - h/2) D_h F_1 / 2, an artificial
    B -> A mutation; row K-1 gains -a(x_{K-1/2}) D_h F_K / h
    = -x_{K-1/2} D_h F_K / 2, an artificial A -> B mutation. Zero elsewhere.
    """
    K, h = grid.K, grid.h
    out = np.zeros(K + 1)
    out[1] = 0.5 * (1 - h / 2) * (F[1] - F[0]) / h
    out[K - 1] = -0.5 * (1 - h / 2) * (F[K] - F[K - 1]) / h
    return out


def recover_pdf(state: CdfState, grid: GridSpec | None = None, two_way_mode: bool = False) -> np.ndarray:
    """Density at the nodes from the CDF.

    Central differences inside, one-sided at the two nodes nearest each end
    so a boundary jump is not smeared into the interior. With
    ``two_way_mode`` nodes 1 and K-1 also use central differences.
    """
    F = np.asarray(state.F, dtype=float)
    K = F.size - 1
    if grid is not None and grid.K != K:
        raise ModelError("state does not match the grid")
    h = 1.0 / K
    f = np.empty(K + 1)
    f[1:K] = (F[2:] - F[:-2]) / (2 * h)
    f[0] = (F[1] - F[0]) / h
    f[K] = (F[K] - F[K - 1]) / h
    if not two_way_mode:
        f[1] = (F[2] - F[1]) / h
        f[K - 1] = (F[K - 1] - F[K - 2]) / h
    return f
