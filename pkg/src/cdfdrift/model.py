"""Continuous problem: drift terms, diffusion, fixation function, initial data.

The unknown is the cumulative distribution F(t, x) of the allele frequency,
which solves

    F_t - (x(1-x) F_x)_x + M(x) F_x = 0,   F(t, 0-) = 0,  F(t, 1+) = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import betainc, betaln, ndtr

from .errors import ModelError

_trapezoid = getattr(np, "trapezoid", None) or np.trapz  # NumPy < 2 spelling


@dataclass(frozen=True)
class PureDrift:
    kind = "pure"


@dataclass(frozen=True)
class Selection:
    """Frequency-dependent selection, M(x) = x(1-x)(eta*x + beta)."""

    eta: float
    beta: float
    kind = "selection"


@dataclass(frozen=True)
class OneWayMutation:
    """Mutation B -> A only, M(x) = gamma*(1-x)."""

    gamma: float
    kind = "oneway"

    def __post_init__(self):
        if not self.gamma > 0:
            raise ModelError(f"one-way mutation rate must be positive, got {self.gamma}")


@dataclass(frozen=True)
class TwoWayMutation:
    """M(x) = gamma*(1-x) - mu*x with both rates in (0, 1)."""

    gamma: float
    mu: float
    kind = "twoway"

    def __post_init__(self):
        for name in ("gamma", "mu"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ModelError(f"two-way mutation {name} must lie in (0, 1), got {v}")


DriftModel = Union[PureDrift, Selection, OneWayMutation, TwoWayMutation]


@dataclass(frozen=True)
class GridSpec:
    """Uniform mesh x_i = i/K, i = 0..K."""

    K: int

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 4:
            raise ModelError(f"grid needs an integer K >= 4, got {self.K}")

    @property
    def h(self) -> float:
        return 1.0 / self.K

    @property
    def x(self) -> np.ndarray:
        # i/K rather than i*h keeps x_K == 1 exactly
        return np.arange(self.K + 1) / self.K

    def half_nodes(self) -> np.ndarray:
        """x_{i-1/2} for i = 0..K+1 (index i holds the face left of node i)."""
        return (np.arange(self.K + 2) - 0.5) / self.K


@dataclass(frozen=True)
class TimeSpec:
    tau: float
    T: float

    def __post_init__(self):
        if not (self.tau > 0 and self.T >= 0):
            raise ModelError(f"need tau > 0 and T >= 0, got tau={self.tau}, T={self.T}")
        n = round(self.T / self.tau)
        if abs(n * self.tau - self.T) > 1e-9 * max(self.T, self.tau):
            raise ModelError(f"T={self.T} is not a whole number of steps of tau={self.tau}")

    @property
    def N(self) -> int:
        return int(round(self.T / self.tau))


@dataclass(frozen=True)
class GaussianPdf:
    """Normal density with mean x0 and standard deviation sigma.

    ``sampling`` selects how the CDF is placed on the mesh:

    ``"cell"`` (default)
        F_i is the mass of [0, x_i + h/2], i.e. the running sum of nodal
        masses f(x_j) h. This matches the reference
        fixation tables (it makes h * sum(F_1..F_{K-1}) equal 1 - x0).
    ``"node"``
        F_i = F(x_i), the exact CDF sampled at the nodes.
    """

    x0: float
    sigma: float
    sampling: str = "cell"

    def __post_init__(self):
        if not 0 < self.x0 < 1:
            raise ModelError(f"x0 must lie in (0, 1), got {self.x0}")
        if not self.sigma > 0:
            raise ModelError(f"sigma must be positive, got {self.sigma}")
        if self.sampling not in ("cell", "node"):
            raise ModelError(f"unknown sampling {self.sampling!r}")


@dataclass(frozen=True)
class DeltaAtZero:
    pass


@dataclass(frozen=True)
class UniformPdf:
    pass


InitialCondition = Union[GaussianPdf, DeltaAtZero, UniformPdf]


@dataclass
class CdfState:
    """CDF values F_0..F_K at time t."""

    t: float
    F: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return self.F.size - 1

    @property
    def cell_mass(self) -> np.ndarray:
        """p_i = F_i - F_{i-1}, i = 1..K."""
        return np.diff(self.F)

    def copy(self) -> CdfState:
        return CdfState(self.t, self.F.copy())


def eval_drift(model: DriftModel, x):
    """M(x) for the given model; works on scalars and arrays."""
    x = np.asarray(x, dtype=float)
    if isinstance(model, PureDrift):
        out = np.zeros_like(x)
    elif isinstance(model, Selection):
        out = x * (1 - x) * (model.eta * x + model.beta)
    elif isinstance(model, OneWayMutation):
        out = model.gamma * (1 - x)
    elif isinstance(model, TwoWayMutation):
        out = model.gamma * (1 - x) - model.mu * x
    else:
        raise ModelError(f"unknown drift model {model!r}")
    return out[()] if out.ndim == 0 else out


def eval_diffusion(x):
    x = np.asarray(x, dtype=float)
    out = x * (1 - x)
    return out[()] if out.ndim == 0 else out


def theta_weight(model: DriftModel, x):
    """theta'(x) up to normalisation: exp(-eta x^2/2 - beta x)."""
    if isinstance(model, PureDrift):
        return np.ones_like(np.asarray(x, dtype=float))
    if isinstance(model, Selection):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * model.eta * x * x - model.beta * x)
    raise ModelError(f"fixation function is only defined for pure drift and selection, not {model!r}")


def theta_profile(model: DriftModel, quad_points: int = 100_000) -> tuple[np.ndarray, np.ndarray]:
    """Fixation function on quad_points+1 equispaced samples of [0, 1].

    Uses a cumulative trapezoid so all nodes come from one pass.
    """
    if quad_points < 100:
        raise ModelError("theta needs at least 100 quadrature intervals")
    s = np.arange(quad_points + 1) / quad_points
    if isinstance(model, PureDrift):
        return s, s.copy()
    w = theta_weight(model, s)
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (w[1:] + w[:-1]))))
    return s, cum / cum[-1]


def theta(model: DriftModel, x: float, quad_points: int = 100_000) -> float:
    """Fixation probability theta(x) solving x(1-x) theta'' + M theta' = 0."""
    if not 0 <= x <= 1:
        raise ModelError(f"x must lie in [0, 1], got {x}")
    if isinstance(model, PureDrift):
        return float(x)
    if not isinstance(model, Selection):
        raise ModelError(f"fixation function is only defined for pure drift and selection, not {model!r}")
    if quad_points < 100:
        raise ModelError("theta needs at least 100 quadrature intervals")
    if x == 0:
        return 0.0
    n = quad_points
    sx = np.linspace(0.0, x, n + 1)
    s1 = np.linspace(0.0, 1.0, n + 1)
    num = _trapezoid(theta_weight(model, sx), sx)
    den = _trapezoid(theta_weight(model, s1), s1)
    return float(num / den)


def steady_state_two_way(model: TwoWayMutation, x):
    """Stationary density x^(gamma-1) (1-x)^(mu-1) / B(gamma, mu)."""
    if not isinstance(model, TwoWayMutation):
        raise ModelError("steady state density is defined for two-way mutation only")
    x = np.asarray(x, dtype=float)
    if np.any((x <= 0) | (x >= 1)):
        raise ModelError("steady two-way density has poles at x = 0 and x = 1")
    g, m = model.gamma, model.mu
    logf = (g - 1) * np.log(x) + (m - 1) * np.log1p(-x) - betaln(g, m)
    out = np.exp(logf)
    return out[()] if out.ndim == 0 else out


def steady_cdf_two_way(model: TwoWayMutation, x):
    """Stationary CDF (regularised incomplete beta function)."""
    return betainc(model.gamma, model.mu, np.asarray(x, dtype=float))


def build_initial_cdf(ic: InitialCondition, grid: GridSpec) -> CdfState:
    x = grid.x
    if isinstance(ic, GaussianPdf):
        shift = 0.5 * grid.h if ic.sampling == "cell" else 0.0
        F = ndtr((x + shift - ic.x0) / ic.sigma)
    elif isinstance(ic, DeltaAtZero):
        F = np.ones(grid.K + 1)
    elif isinstance(ic, UniformPdf):
        F = x.copy()
    else:
        raise ModelError(f"unknown initial condition {ic!r}")
    F[0] = 0.0
    F[-1] = 1.0
    return CdfState(0.0, F)


def beta_normaliser(model: TwoWayMutation) -> float:
    """C = 1/B(gamma, mu)."""
    return math.exp(-betaln(model.gamma, model.mu))
