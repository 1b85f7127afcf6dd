"""Discrete Wright-Fisher chain used to cross-check PDE fixation probabilities.

Each generation the allele count is redrawn as Binomial(N, p) with
p = x + M(x) / (2N), clipped to [0, 1]. Binomial sampling has variance
x(1-x)/N per generation, so 2N generations make one time unit of the
diffusion F_t = (x(1-x) F_x)_x - M F_x, and the drift is scaled to match.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError
from .model import DriftModel, PureDrift, eval_drift

BLOCK = 1024  # replicates per random substream


@dataclass(frozen=True)
class WfConfig:
    pop_size: int
    replicates: int
    seed: int
    model: DriftModel = field(default_factory=PureDrift)
    init_freq: float = 0.5
    generations: int | None = None  # default cap: 100 * pop_size

    def __post_init__(self):
        if self.pop_size < 10:
            raise ModelError("pop_size must be >= 10")
        if self.replicates < 1:
            raise ModelError("need at least one replicate")
        if not 0 <= self.init_freq <= 1:
            raise ModelError("init_freq must lie in [0, 1]")

    @property
    def cap(self) -> int:
        return self.generations if self.generations is not None else 100 * self.pop_size


@dataclass(frozen=True)
class FixationResult:
    fix_at_1: float
    fix_at_0: float
    unresolved: float
    replicates: int

    def __iter__(self):
        return iter((self.fix_at_1, self.fix_at_0, self.unresolved))

    def stderr(self, p: float | None = None) -> float:
        """Binomial standard error of a fraction estimated from the replicates."""
        p = self.fix_at_1 if p is None else p
        return float(np.sqrt(p * (1 - p) / self.replicates))


def _transition_probs(model: DriftModel, N: int) -> np.ndarray:
    x = np.arange(N + 1) / N
    return np.clip(x + eval_drift(model, x) / (2 * N), 0.0, 1.0)


def _run_block(rng: np.random.Generator, p_of: np.ndarray, N: int, n: int, start: int, cap: int) -> np.ndarray:
    """Final allele counts of ``n`` replicates (or -1 if still segregating)."""
    # a count is absorbing when the binomial draw is certain to return it
    is_abs = np.zeros(N + 1, dtype=bool)
    is_abs[0] = p_of[0] == 0.0
    is_abs[N] = p_of[N] == 1.0
    counts = np.full(n, start, dtype=np.int64)
    live = np.flatnonzero(~is_abs[counts])
    for _ in range(cap):
        if live.size == 0:
            break
        counts[live] = rng.binomial(N, p_of[counts[live]])
        live = live[~is_abs[counts[live]]]
    out = counts.copy()
    out[live] = -1
    return out


def final_counts(cfg: WfConfig) -> np.ndarray:
    """Allele count of every replicate at absorption, or -1 if unresolved.

    Replicates are processed in blocks of ``BLOCK``; block b draws from a
    generator seeded by (seed, b). Complete blocks therefore come out the
    same whatever the total replicate count; a trailing partial block does
    not, since its draws interleave over fewer replicates.
    """
    N = cfg.pop_size
    start = int(round(cfg.init_freq * N))
    p_of = _transition_probs(cfg.model, N)
    finals = []
    for b, lo in enumerate(range(0, cfg.replicates, BLOCK)):
        n = min(BLOCK, cfg.replicates - lo)
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, b]))
        finals.append(_run_block(rng, p_of, N, n, start, cfg.cap))
    return np.concatenate(finals)


def simulate_fixation(cfg: WfConfig) -> FixationResult:
    """Fractions of replicates absorbed at frequency 1, at 0, and unresolved."""
    N = cfg.pop_size
    final = final_counts(cfg)
    R = cfg.replicates
    at1 = np.count_nonzero(final == N) / R
    at0 = np.count_nonzero(final == 0) / R
    return FixationResult(at1, at0, np.count_nonzero(final < 0) / R, R)
