"""Command-line front end.

Subcommands: run, convergence, fixation, powerlaw, compare-sfdm, oracle.
Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import diagnostics as dg
from . import experiments as ex
from ._backend import BACKEND
from .config import RunConfig, load_config
from .errors import ConfigError, ModelError, SolverError
from .model import GridSpec, TwoWayMutation
from .scheme import SchemeVariant, recover_pdf, run

log = logging.getLogger("cdfdrift")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


def fmt(v: Any) -> str:
    """17 significant digits for floats (round-trips a double)."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    if hasattr(v, "item"):  # numpy scalar
        return fmt(v.item())
    return str(v)


def sig6(v: float | None) -> str:
    """Six significant digits as a fixed-width string (the "_6sig" columns)."""
    if v is None:
        return ""
    v = float(v)
    if v == 0:
        return "0.00000"
    mag = math.floor(math.log10(abs(v)))
    if -2 <= mag < 3:
        return f"{v:.{max(5 - mag, 0)}f}"
    return f"{v:.5e}"


def write_csv(path: Path, header: Sequence[str], rows: Iterable[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([row[k] if isinstance(row.get(k), str) else fmt(row.get(k)) for k in header])


def _with_sig6_cols(rows: list[dict], keys: Sequence[str]) -> list[dict]:
    for row in rows:
        for k in keys:
            row[f"{k}_6sig"] = sig6(row.get(k))
    return rows


def _header(base: Sequence[str], sig_cols: Sequence[str]) -> list[str]:
    out = []
    for k in base:
        out.append(k)
        if k in sig_cols:
            out.append(f"{k}_6sig")
    return out


def _grids(cfg: RunConfig) -> list[int]:
    return cfg.grids if cfg.grids else [cfg.K]


def _limits(cfg: RunConfig, model, ic) -> tuple[float, float]:
    """Configured limits win; one given limit implies the other."""
    a, b = cfg.a_inf, cfg.b_inf
    if a is not None and b is not None:
        return a, b
    if b is not None:
        return 1.0 - b, b
    if a is not None:
        return a, 1.0 - a
    try:
        return ex.fixation_limits(model, ic, cfg.K_star)
    except ValueError:
        raise ConfigError("set a_inf or b_inf for this model") from None


# -- subcommands --------------------------------------------------------------


def cmd_run(cfg: RunConfig, out: Path) -> list[Path]:
    model = cfg.drift_model()
    grid = cfg.grid()
    time = cfg.time()
    snaps = cfg.snapshots or [cfg.T]
    res = run(
        cfg.initial_condition(), model, grid, time, cfg.variant(),
        stride=cfg.observe_stride, snapshot_times=snaps, convection=cfg.convection_rule(),
    )
    written = []
    two_way = isinstance(model, TwoWayMutation)
    for t, st in sorted(res.snapshots.items()):
        f = recover_pdf(st, grid, two_way_mode=two_way)
        path = out / f"profile_t{t:g}.csv"
        write_csv(path, ["x", "F", "f"], ({"x": x, "F": F, "f": fv} for x, F, fv in zip(grid.x, st.F, f)))
        written.append(path)
    header = ["t", "total_prob", "expectation", "theta_moment", "jump_left", "jump_right"]
    path = out / "timeseries.csv"
    write_csv(path, header, (vars(r) for r in res.reports))
    written.append(path)
    return written


def cmd_convergence(cfg: RunConfig, out: Path) -> list[Path]:
    model = cfg.drift_model()
    ic = cfg.initial_condition()
    grids = _grids(cfg)
    taus = cfg.taus or [cfg.tau] * len(grids)
    if len(taus) != len(grids):
        raise ConfigError("taus must list one time step per grid")
    for a, b in zip(grids, grids[1:]):
        if b % a:
            raise ConfigError(f"grid list is not nested: {a} -> {b}")
    if any(cfg.ref_K % K for K in grids):
        raise ConfigError(f"reference K={cfg.ref_K} is not a multiple of every grid")
    key = cfg.digest(
        ["model", "eta", "beta", "gamma", "mu", "init", "x0", "sigma", "sampling", "scheme", "convection", "T"],
        ref_K=cfg.ref_K, ref_tau=cfg.ref_tau,
    )
    ref = ex.reference_state(
        ic, model, cfg.ref_K, cfg.ref_tau, cfg.T, cfg.variant(), cfg.convection_rule(),
        cache=out / "cache" / f"reference-{key}.npy",
    )
    rows = ex.convergence_study(
        model, ic, list(zip(grids, taus)), cfg.T, ref, tuple(cfg.window), cfg.variant(),
        cfg.convection_rule(), cfg.eval_offset_steps, cfg.jobs,
    )
    dicts = [dict(vars(r), K=K) for r, K in zip(rows, grids)]
    sig_cols = ["error_l2", "order_l2", "error_linf", "order_linf"]
    _with_sig6_cols(dicts, sig_cols)
    header = _header(["K", "h", "tau", "error_l2", "order_l2", "error_linf", "order_linf"], sig_cols)
    path = out / "convergence.csv"
    write_csv(path, header, dicts)
    return [path]


def cmd_fixation(cfg: RunConfig, out: Path) -> list[Path]:
    model = cfg.drift_model()
    ic = cfg.initial_condition()
    a_inf, b_inf = _limits(cfg, model, ic)
    rows = ex.fixation_sweep(
        model, ic, cfg.grids, cfg.tau, cfg.T, a_inf, b_inf, cfg.variant(), cfg.convection_rule(), cfg.jobs,
    )
    sig_cols = ["jump_left", "e_left", "order_left", "jump_right", "e_right", "order_right"]
    _with_sig6_cols(rows, sig_cols)
    header = _header(
        ["K", "h", "jump_left", "e_left", "order_left", "jump_right", "e_right", "order_right",
         "jump_sum", "a_inf", "b_inf", "a_plus_b"],
        sig_cols,
    )
    path = out / "fixation.csv"
    write_csv(path, header, rows)
    return [path]


def cmd_powerlaw(cfg: RunConfig, out: Path) -> list[Path]:
    model = cfg.drift_model()
    x0s = cfg.x0_list or [cfg.x0]
    grids = _grids(cfg)
    table, samples = [], []
    for x0 in x0s:
        ic = cfg.initial_condition(x0)
        try:
            rows, states = ex.powerlaw_sweep(
                model, ic, grids, cfg.tau, cfg.T, cfg.variant(), cfg.convection_rule(), jobs=cfg.jobs,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        for r in rows:
            r["x0"] = x0
        table.extend(rows)
        lx, lF, lx1, lF1 = dg.boundary_loglog_samples(states[-1])
        samples.extend({"x0": x0, "K": grids[-1], "side": "left", "ln_x": a, "ln_F": b} for a, b in zip(lx, lF))
        samples.extend(
            {"x0": x0, "K": grids[-1], "side": "right", "ln_x": a, "ln_F": b} for a, b in zip(lx1, lF1)
        )
    sig_cols = ["F0", "F1", "gamma_hat", "FKm1", "FK", "mu_hat"]
    _with_sig6_cols(table, sig_cols)
    header = _header(["x0", "K", "h", "F0", "F1", "gamma_hat", "FKm1", "FK", "mu_hat", "gamma_fit", "mu_fit"], sig_cols)
    p1 = out / "powerlaw.csv"
    write_csv(p1, header, table)
    p2 = out / "powerlaw_loglog.csv"
    write_csv(p2, ["x0", "K", "side", "ln_x", "ln_F"], samples)
    return [p1, p2]


def cmd_compare_sfdm(cfg: RunConfig, out: Path) -> list[Path]:
    model = cfg.drift_model()
    ic = cfg.initial_condition()
    a_inf, b_inf = _limits(cfg, model, ic)
    variants = [SchemeVariant(v) for v in cfg.variants]
    rows, series = ex.compare_variants(
        model, ic, _grids(cfg), cfg.tau, cfg.T, a_inf, b_inf, variants,
        cfg.convection_rule(), cfg.observe_stride, cfg.jobs,
    )
    sig_cols = ["jump_left", "e_left", "jump_right", "e_right"]
    _with_sig6_cols(rows, sig_cols)
    header = _header(
        ["K", "h", "variant", "jump_left", "e_left", "jump_right", "e_right",
         "expectation_0", "expectation_T", "expectation_drift", "lambda_max_dev", "lambda_check"],
        sig_cols,
    )
    p1 = out / "compare_sfdm.csv"
    write_csv(p1, header, rows)
    p2 = out / "compare_expectation.csv"
    write_csv(p2, ["K", "variant", "t", "expectation"], series)
    return [p1, p2]


def cmd_oracle(cfg: RunConfig, out: Path) -> list[Path]:
    model = cfg.drift_model()
    if cfg.init_freq is not None:
        f0 = cfg.init_freq
    elif cfg.init == "gaussian":
        f0 = cfg.x0
    elif cfg.init == "delta0":
        f0 = 0.0
    else:
        raise ConfigError("set init_freq for a uniform initial density")
    ic = cfg.initial_condition()
    if cfg.init == "gaussian" and not math.isclose(f0, cfg.x0):
        ic = cfg.initial_condition(f0) if 0 < f0 < 1 else None
    rows = ex.oracle_check(
        model, ic, f0, cfg.K, cfg.tau, cfg.T, cfg.pop_size, cfg.replicates, cfg.seed,
        cfg.generations, cfg.convection_rule(),
    )
    path = out / "oracle.csv"
    write_csv(
        path,
        ["quantity", "theory", "pde", "mc", "mc_stderr", "radius_3sigma", "mc_within", "pde_within"],
        rows,
    )
    return [path]


COMMANDS = {
    "run": cmd_run,
    "convergence": cmd_convergence,
    "fixation": cmd_fixation,
    "powerlaw": cmd_powerlaw,
    "compare-sfdm": cmd_compare_sfdm,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdfdrift", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="key = value config file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
        p.add_argument("--out", type=Path, default=Path("out"))
        p.add_argument("--stride", type=int, help="diagnostics stride in steps")
        p.add_argument("--seed", type=int)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    overrides = list(args.overrides)
    if args.stride is not None:
        overrides.append(f"observe_stride={args.stride}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    try:
        cfg = load_config(args.config, overrides)
        log.info("backend: %s", BACKEND)
        for path in COMMANDS[args.command](cfg, args.out):
            log.info("wrote %s", path)
    except (ConfigError, ModelError) as exc:
        print(f"cdfdrift: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"cdfdrift: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"cdfdrift: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
