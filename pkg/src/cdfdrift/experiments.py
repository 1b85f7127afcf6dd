"""Sweeps behind the CLI tables: fixation jumps, local convergence, boundary
power laws, rFDM/sFDM comparison and the Wright-Fisher cross-check."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from . import diagnostics as dg
from .model import (
    CdfState,
    DriftModel,
    GaussianPdf,
    GridSpec,
    InitialCondition,
    OneWayMutation,
    PureDrift,
    Selection,
    TimeSpec,
    UniformPdf,
    build_initial_cdf,
    theta,
)
from .oracle import WfConfig, simulate_fixation
from .scheme import RFDM, SFDM, SchemeVariant, TridiagonalSystem, assemble_matrix, lambda_terms, run

log = logging.getLogger(__name__)

T_ = TypeVar("T_")


def pmap(fn: Callable[..., T_], items: Iterable, jobs: int = 1) -> list[T_]:
    """Ordered map; the compiled kernel drops the GIL, so threads help."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def final_state(
    ic: InitialCondition,
    model: DriftModel,
    K: int,
    tau: float,
    T: float,
    variant: SchemeVariant = RFDM,
    convection: str | None = None,
    extra_steps: int = 0,
) -> CdfState:
    grid = GridSpec(K)
    time = TimeSpec(tau, T)
    if extra_steps:
        time = TimeSpec(tau, (time.N + extra_steps) * tau)
    return run(ic, model, grid, time, variant, convection=convection, diagnostics=False).final


def fixation_limits(model: DriftModel, ic: InitialCondition, K_star: int = 10000) -> tuple[float, float]:
    """(a_inf, b_inf) for models whose fixation is predicted.

    Pure drift has theta(x) = x, so b_inf is the exact mean of the initial
    density. Selection uses the discrete theta-moment of the initial data on
    a grid with ``K_star`` intervals. One-way mutation fixes at 1.
    """
    if isinstance(model, OneWayMutation):
        return 0.0, 1.0
    if isinstance(model, PureDrift):
        if isinstance(ic, GaussianPdf):
            b = ic.x0  # mass outside [0, 1] is neglected, as in the CDF itself
        elif isinstance(ic, UniformPdf):
            b = 0.5
        else:
            b = 0.0
        return 1.0 - b, b
    if isinstance(model, Selection):
        grid = GridSpec(K_star)
        b = dg.discrete_theta_moment(build_initial_cdf(ic, grid), grid, model)
        return 1.0 - b, b
    raise ValueError("fixation limits are not defined for two-way mutation")


def fixation_sweep(
    model: DriftModel,
    ic: InitialCondition,
    grids: Sequence[int],
    tau: float,
    T: float,
    a_inf: float,
    b_inf: float,
    variant: SchemeVariant = RFDM,
    convection: str | None = None,
    jobs: int = 1,
) -> list[dict]:
    states = pmap(lambda K: final_state(ic, model, K, tau, T, variant, convection), grids, jobs)
    rows = []
    for n, (K, st) in enumerate(zip(grids, states)):
        e_l, e_r = dg.fixation_errors(st, a_inf, b_inf)
        row = {
            "K": K, "h": 1.0 / K,
            "jump_left": st.F[1] - st.F[0], "e_left": e_l, "order_left": None,
            "jump_right": st.F[-1] - st.F[-2], "e_right": e_r, "order_right": None,
            "jump_sum": (st.F[1] - st.F[0]) + (st.F[-1] - st.F[-2]),
            "a_inf": a_inf, "b_inf": b_inf, "a_plus_b": a_inf + b_inf,
            "expectation": dg.discrete_expectation(st),
        }
        if n:
            prev = rows[-1]
            ratio = K / prev["K"]
            for side in ("left", "right"):
                e0, e1 = prev[f"e_{side}"], row[f"e_{side}"]
                if e0 > 0 and e1 > 0:
                    row[f"order_{side}"] = dg.convergence_order(e0, e1, ratio)
        rows.append(row)
    return rows


def reference_state(
    ic: InitialCondition,
    model: DriftModel,
    K: int,
    tau: float,
    T: float,
    variant: SchemeVariant = RFDM,
    convection: str | None = None,
    cache: Path | None = None,
) -> CdfState:
    """Fine-mesh solution, optionally cached on disk as .npy."""
    if cache is not None and cache.exists():
        return CdfState(T, np.load(cache))
    st = final_state(ic, model, K, tau, T, variant, convection)
    if cache is not None:
        cache.parent.mkdir(parents=True, exist_ok=True)
        np.save(cache, st.F)
    return st


def convergence_study(
    model: DriftModel,
    ic: InitialCondition,
    ladder: Sequence[tuple[int, float]],
    T: float,
    reference: CdfState,
    window: tuple[float, float] = (0.3, 0.7),
    variant: SchemeVariant = RFDM,
    convection: str | None = None,
    eval_offset_steps: int = 0,
    jobs: int = 1,
) -> list[dg.ConvergenceRow]:
    """Local errors on ``window`` for each (K, tau) rung against ``reference``.

    ``eval_offset_steps`` lets the coarse runs take extra steps past T
    (the reference is always at T); it exists to study how a one-step lag
    in the evaluation time shows up in the error table.
    """
    Ks = [K for K, _ in ladder]
    for a, b in zip(Ks, Ks[1:]):
        if b % a:
            raise ValueError(f"grid list is not nested: {a} -> {b}")
    K_ref = reference.F.size - 1
    for K in Ks:
        if K_ref % K:
            raise ValueError(f"reference grid {K_ref} is not nested in {K}")

    def one(rung):
        K, tau = rung
        st = final_state(ic, model, K, tau, T, variant, convection, extra_steps=eval_offset_steps)
        return dg.local_error(st, reference, window)

    errs = pmap(one, ladder, jobs)
    return dg.convergence_table([(1.0 / K, tau, l2, li) for (K, tau), (l2, li) in zip(ladder, errs)])


def powerlaw_sweep(
    model: DriftModel,
    ic: InitialCondition,
    grids: Sequence[int],
    tau: float,
    T: float,
    variant: SchemeVariant = RFDM,
    convection: str | None = None,
    fit_nodes: int = 10,
    jobs: int = 1,
) -> tuple[list[dict], list[CdfState]]:
    for a, b in zip(grids, grids[1:]):
        if b != 2 * a:
            raise ValueError(f"power-law sweep needs successive halvings, got {a} -> {b}")
    states = pmap(lambda K: final_state(ic, model, K, tau, T, variant, convection), grids, jobs)
    rows = []
    for n, (K, st) in enumerate(zip(grids, states)):
        F = st.F
        row = {
            "K": K, "h": 1.0 / K, "F0": F[0], "F1": F[1], "gamma_hat": None,
            "FKm1": F[-2], "FK": F[-1], "mu_hat": None,
            "gamma_fit": None, "mu_fit": None,
        }
        if fit_nodes < K:
            row["gamma_fit"], row["mu_fit"] = dg.loglog_slopes(st, fit_nodes)
        if n:
            row["gamma_hat"], row["mu_hat"] = dg.power_law_exponents(states[n - 1], st)
        rows.append(row)
    return rows, states


def lambda_check(model: DriftModel, K: int, tau: float, F: np.ndarray,
                 variants: tuple[SchemeVariant, SchemeVariant] = (RFDM, SFDM),
                 convection: str | None = None) -> float:
    """Max deviation between (A_second - A_first) F and tau times the boundary
    Lambda terms (the matrices are rows of the tau-scaled step equation).
    Zero when both variants are the same."""
    grid = GridSpec(K)
    A0 = assemble_matrix(model, grid, tau, variants[0], convection)
    A1 = assemble_matrix(model, grid, tau, variants[1], convection)
    delta = TridiagonalSystem(A1.lower - A0.lower, A1.diag - A0.diag, A1.upper - A0.upper)
    expected = np.zeros_like(F)
    if variants[0] is not variants[1]:
        expected = tau * lambda_terms(F, grid)
        if variants[0] is SFDM:
            expected = -expected
    return float(np.max(np.abs(delta.matvec(F) - expected)))


def compare_variants(
    model: DriftModel,
    ic: InitialCondition,
    grids: Sequence[int],
    tau: float,
    T: float,
    a_inf: float,
    b_inf: float,
    variants: Sequence[SchemeVariant] = (RFDM, SFDM),
    convection: str | None = None,
    stride: int | None = None,
    jobs: int = 1,
) -> tuple[list[dict], list[dict]]:
    """Boundary jumps and expectation drift for each variant on each grid."""
    jobs_list = [(K, v) for K in grids for v in variants]
    time = TimeSpec(tau, T)

    def one(item):
        K, v = item
        return run(ic, model, GridSpec(K), time, v, stride=stride, convection=convection)

    results = pmap(one, jobs_list, jobs)
    rows, series = [], []
    for (K, v), res in zip(jobs_list, results):
        st = res.final
        e_l, e_r = dg.fixation_errors(st, a_inf, b_inf)
        F0 = build_initial_cdf(ic, GridSpec(K))
        lam = lambda_check(model, K, tau, F0.F, (variants[0], v), convection)
        rows.append({
            "K": K, "h": 1.0 / K, "variant": v.value,
            "jump_left": st.F[1] - st.F[0], "e_left": e_l,
            "jump_right": st.F[-1] - st.F[-2], "e_right": e_r,
            "expectation_0": res.reports[0].expectation,
            "expectation_T": res.reports[-1].expectation,
            "expectation_drift": res.reports[-1].expectation - res.reports[0].expectation,
            "lambda_max_dev": lam,
            "lambda_check": "pass" if lam <= 1e-12 else "fail",
        })
        for rep in res.reports:
            series.append({"K": K, "variant": v.value, "t": rep.t, "expectation": rep.expectation})
    return rows, series


def oracle_check(
    model: DriftModel,
    ic: InitialCondition | None,
    init_freq: float,
    K: int,
    tau: float,
    T: float,
    pop_size: int,
    replicates: int,
    seed: int,
    generations: int | None = None,
    convection: str | None = None,
) -> list[dict]:
    """Fixation probabilities from theory, the PDE and the Wright-Fisher chain.

    Pass ``ic=None`` to skip the PDE column (e.g. for a start at a boundary,
    where no Gaussian initial density exists).
    """
    res = simulate_fixation(WfConfig(pop_size, replicates, seed, model, init_freq, generations))
    pde = None if ic is None else final_state(ic, model, K, tau, T, RFDM, convection)

    if isinstance(model, OneWayMutation):
        b_theory = 1.0
    elif isinstance(model, (PureDrift, Selection)):
        b_theory = theta(model, init_freq)
    else:
        b_theory = None

    rows = []
    for name, mc, jump, th in (
        ("fix_at_1", res.fix_at_1, None if pde is None else pde.F[-1] - pde.F[-2], b_theory),
        ("fix_at_0", res.fix_at_0, None if pde is None else pde.F[1] - pde.F[0],
         None if b_theory is None else 1.0 - b_theory),
    ):
        centre = th if th is not None else mc
        se = float(np.sqrt(centre * (1 - centre) / replicates))
        rows.append({
            "quantity": name, "theory": th, "pde": jump, "mc": mc,
            "mc_stderr": se, "radius_3sigma": 3 * se,
            "mc_within": None if th is None else abs(mc - th) <= 3 * se + 1e-15,
            "pde_within": None if (th is None or jump is None) else abs(jump - th) <= 3 * se + 1e-15,
        })
    rows.append({
        "quantity": "unresolved", "theory": None, "pde": None, "mc": res.unresolved,
        "mc_stderr": None, "radius_3sigma": None, "mc_within": None, "pde_within": None,
    })
    return rows
