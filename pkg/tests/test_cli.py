import csv
from pathlib import Path

import pytest

from cdfdrift.cli import main, sig6
from cdfdrift.config import RunConfig, load_config, parse_config_text
from cdfdrift.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def read(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def cli(*args):
    return main([str(a) for a in args])


# -- config ---------------------------------------------------------------


def test_config_parsing():
    pairs = parse_config_text("# comment\nmodel = selection  # trailing\n\neta=-4\n")
    assert pairs == [("model", "selection"), ("eta", "-4")]


def test_config_fractions_and_lists():
    cfg = load_config(overrides=["tau=1/400", "grids=100, 200", "window=0.25,0.75"])
    assert cfg.tau == 0.0025 and cfg.grids == [100, 200] and cfg.window == [0.25, 0.75]


@pytest.mark.parametrize(
    "override",
    ["model=banana", "K=3", "tau=0", "bogus=1", "model=selection", "window=0.7,0.3", "K=ten", "tau=0.3", "scheme=cn"],
)
def test_config_errors(override):
    extra = ["T=1"] if override == "tau=0.3" else []
    with pytest.raises(ConfigError):
        load_config(overrides=[override, *extra])


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


def test_config_digest_is_stable():
    a, b = RunConfig(), RunConfig()
    assert a.digest() == b.digest()
    b.K = 101
    assert a.digest() != b.digest()
    assert a.digest(["model"]) == b.digest(["model"])


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.cfg")))
def test_shipped_configs_validate(name):
    load_config(CONFIGS / name)


def test_six_significant_digit_format():
    assert sig6(0.30303030303) == "0.303030"
    assert sig6(0.0030303030) == "3.03030e-03"
    assert sig6(2.0164412) == "2.01644"
    assert sig6(None) == ""


# -- run ------------------------------------------------------------------


def test_run_writes_profile_and_timeseries(tmp_path):
    assert cli("run", "--config", CONFIGS / "pure_drift.cfg", "--out", tmp_path, "--stride", 36000) == 0
    prof = read(tmp_path / "profile_t36.csv")
    assert list(prof[0]) == ["x", "F", "f"] and len(prof) == 101
    ts = read(tmp_path / "timeseries.csv")
    assert list(ts[0]) == ["t", "total_prob", "expectation", "theta_moment", "jump_left", "jump_right"]
    assert len(ts) == 11
    assert all(float(r["total_prob"]) == 1.0 for r in ts)
    assert f"{float(ts[-1]['jump_left']):.6f}" == "0.303030"
    jump = float(prof[1]["F"]) - float(prof[0]["F"])
    assert f"{jump:.6f}" == "0.303030"


def test_stride_beyond_run_gives_two_rows(tmp_path):
    assert cli("run", "--set", "T=0.01", "--set", "tau=0.001", "--stride", 1000, "--out", tmp_path) == 0
    assert [float(r["t"]) for r in read(tmp_path / "timeseries.csv")] == [0.0, 0.01]


def test_run_snapshots(tmp_path):
    assert cli("run", "--set", "T=0.02", "--set", "tau=0.001", "--set", "snapshots=0.01,0.02", "--out", tmp_path) == 0
    assert (tmp_path / "profile_t0.01.csv").exists() and (tmp_path / "profile_t0.02.csv").exists()


@pytest.mark.slow
def test_run_muller_ratchet(tmp_path):
    assert cli("run", "--config", CONFIGS / "muller_ratchet.cfg", "--out", tmp_path) == 0
    last = read(tmp_path / "timeseries.csv")[-1]
    assert float(last["t"]) == 50
    assert float(last["jump_right"]) == pytest.approx(0.999946, abs=2e-6)
    assert last["theta_moment"] == ""


def test_csv_format(tmp_path):
    cli("run", "--set", "T=0.01", "--set", "tau=0.001", "--out", tmp_path)
    raw = (tmp_path / "timeseries.csv").read_bytes()
    assert b"\r" not in raw
    raw.decode("utf-8")
    # 17 significant digits round-trip the stored doubles
    row = read(tmp_path / "timeseries.csv")[-1]
    assert len(row["jump_left"].replace("0.", "", 1).lstrip("0")) >= 15


def test_output_is_byte_identical_across_runs(tmp_path):
    args = ["--config", CONFIGS / "selection.cfg", "--set", "T=0.5", "--set", "grids=100,200"]
    assert cli("fixation", *args, "--out", tmp_path / "a") == 0
    assert cli("fixation", *args, "--out", tmp_path / "b") == 0
    assert (tmp_path / "a/fixation.csv").read_bytes() == (tmp_path / "b/fixation.csv").read_bytes()


# -- exit codes --------------------------------------------------------------


def test_config_error_exit_code(tmp_path, capsys):
    assert cli("run", "--set", "K=2", "--out", tmp_path) == 1
    assert "config error" in capsys.readouterr().err


def test_missing_model_parameter_exit_code(tmp_path):
    assert cli("run", "--set", "model=twoway", "--set", "gamma=0.4", "--out", tmp_path) == 1


def test_unwritable_output_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli("run", "--set", "T=0.01", "--set", "tau=0.001", "--out", blocker / "sub") == 3


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    from cdfdrift import _backend

    def broken(*a, **k):
        raise _backend.SolverError("zero pivot")

    monkeypatch.setattr(_backend, "advance", broken)
    assert cli("run", "--set", "T=0.01", "--set", "tau=0.001", "--out", tmp_path) == 2


def test_unknown_subcommand():
    with pytest.raises(SystemExit):
        cli("plot")


# -- table commands --------------------------------------------------------------


def test_fixation_table(tmp_path):
    assert cli("fixation", "--config", CONFIGS / "pure_drift.cfg", "--set", "grids=100,200", "--out", tmp_path) == 0
    rows = read(tmp_path / "fixation.csv")
    assert [r["jump_left_6sig"] for r in rows] == ["0.303030", "0.301508"]
    assert rows[0]["order_left"] == ""
    assert rows[1]["order_left_6sig"] == "1.00727"
    assert all(float(r["a_plus_b"]) == 1.0 for r in rows)


def test_fixation_empty_sweep_is_header_only(tmp_path):
    assert cli("fixation", "--set", "T=0.01", "--set", "tau=0.001", "--out", tmp_path) == 0
    lines = (tmp_path / "fixation.csv").read_text().splitlines()
    assert len(lines) == 1 and lines[0].startswith("K,h,jump_left")


def test_fixation_needs_limits_for_two_way(tmp_path):
    assert cli("fixation", "--config", CONFIGS / "two_way_powerlaw.cfg", "--out", tmp_path) == 1
    assert cli(
        "fixation", "--config", CONFIGS / "two_way_powerlaw.cfg", "--set", "grids=100", "--set", "T=0.1",
        "--set", "b_inf=0.5", "--out", tmp_path,
    ) == 0


def test_convergence_table_and_cache(tmp_path):
    args = [
        "--config", CONFIGS / "local_convergence_selection.cfg",
        "--set", "ref_K=800", "--set", "ref_tau=1/8000", "--out", tmp_path,
    ]
    assert cli("convergence", *args) == 0
    rows = read(tmp_path / "convergence.csv")
    assert len(rows) == 3 and rows[0]["order_l2"] == "" and rows[1]["order_l2"] != ""
    cached = list((tmp_path / "cache").glob("reference-*.npy"))
    assert len(cached) == 1
    stamp = cached[0].stat().st_mtime_ns
    assert cli("convergence", *args) == 0
    assert cached[0].stat().st_mtime_ns == stamp


def test_convergence_single_grid_has_no_orders(tmp_path):
    assert cli(
        "convergence", "--set", "model=pure", "--set", "init=uniform", "--set", "T=0.1", "--set", "tau=1/100",
        "--set", "grids=100", "--set", "ref_K=400", "--set", "ref_tau=1/400", "--out", tmp_path,
    ) == 0
    rows = read(tmp_path / "convergence.csv")
    assert len(rows) == 1 and rows[0]["order_l2"] == "" and rows[0]["order_linf"] == ""


def test_convergence_rejects_non_nested_grids(tmp_path):
    assert cli(
        "convergence", "--config", CONFIGS / "local_convergence_selection.cfg",
        "--set", "grids=100,300", "--set", "taus=1/100,1/100", "--out", tmp_path,
    ) == 1


def test_powerlaw_table(tmp_path):
    assert cli(
        "powerlaw", "--config", CONFIGS / "two_way_powerlaw.cfg", "--set", "grids=100,200",
        "--set", "T=1", "--out", tmp_path,
    ) == 0
    rows = read(tmp_path / "powerlaw.csv")
    assert len(rows) == 4
    assert rows[0]["gamma_hat"] == "" and rows[1]["gamma_hat"] != ""
    assert all(float(r["F0"]) == 0 and float(r["FK"]) == 1 for r in rows)
    samples = read(tmp_path / "powerlaw_loglog.csv")
    assert {r["side"] for r in samples} == {"left", "right"}


def test_powerlaw_single_grid_has_empty_exponents(tmp_path):
    assert cli(
        "powerlaw", "--config", CONFIGS / "two_way_powerlaw.cfg", "--set", "grids=100",
        "--set", "x0_list=0.7", "--set", "T=1", "--out", tmp_path,
    ) == 0
    (row,) = read(tmp_path / "powerlaw.csv")
    assert row["gamma_hat"] == "" and row["mu_hat"] == ""


def test_powerlaw_rejects_non_doubling_grids(tmp_path):
    assert cli(
        "powerlaw", "--config", CONFIGS / "two_way_powerlaw.cfg", "--set", "grids=100,300", "--out", tmp_path
    ) == 1


def test_compare_sfdm(tmp_path):
    assert cli(
        "compare-sfdm", "--config", CONFIGS / "pure_drift.cfg", "--set", "grids=100", "--set", "T=1",
        "--stride", 1000, "--out", tmp_path,
    ) == 0
    rows = read(tmp_path / "compare_sfdm.csv")
    assert [r["variant"] for r in rows] == ["rfdm", "sfdm"]
    assert all(r["lambda_check"] == "pass" for r in rows)
    assert abs(float(rows[0]["expectation_drift"])) < 1e-12
    assert abs(float(rows[1]["expectation_drift"])) > 1e-3
    series = read(tmp_path / "compare_expectation.csv")
    assert len(series) == 2 * 11


def test_compare_identical_variants_has_zero_difference(tmp_path):
    assert cli(
        "compare-sfdm", "--config", CONFIGS / "pure_drift.cfg", "--set", "grids=100", "--set", "T=0.1",
        "--set", "variants=rfdm,rfdm", "--out", tmp_path,
    ) == 0
    rows = read(tmp_path / "compare_sfdm.csv")
    assert all(float(r["lambda_max_dev"]) == 0.0 for r in rows)


def test_oracle_pure_drift(tmp_path):
    assert cli(
        "oracle", "--config", CONFIGS / "oracle.cfg", "--set", "replicates=4000", "--set", "T=4", "--out", tmp_path
    ) == 0
    rows = {r["quantity"]: r for r in read(tmp_path / "oracle.csv")}
    assert set(rows) == {"fix_at_1", "fix_at_0", "unresolved"}
    assert rows["fix_at_1"]["mc_within"] == "true"
    assert float(rows["fix_at_1"]["theory"]) == 0.7


def test_oracle_start_at_one(tmp_path):
    assert cli("oracle", "--set", "init_freq=1", "--set", "replicates=50", "--set", "T=0.01", "--set", "tau=0.001",
               "--out", tmp_path) == 0
    rows = {r["quantity"]: r for r in read(tmp_path / "oracle.csv")}
    assert float(rows["fix_at_1"]["mc"]) == 1.0
    assert rows["fix_at_1"]["pde"] == ""


def test_oracle_one_way_from_point_mass(tmp_path):
    assert cli(
        "oracle", "--config", CONFIGS / "muller_ratchet.cfg", "--set", "replicates=500", "--set", "pop_size=100",
        "--set", "generations=200000", "--out", tmp_path,
    ) == 0
    rows = {r["quantity"]: r for r in read(tmp_path / "oracle.csv")}
    assert float(rows["fix_at_1"]["mc"]) >= 0.99
    assert float(rows["fix_at_1"]["pde"]) >= 0.99


def test_seed_flag_changes_oracle(tmp_path):
    base = ["--config", CONFIGS / "oracle.cfg", "--set", "replicates=500", "--set", "T=0.1"]
    cli("oracle", *base, "--seed", 1, "--out", tmp_path / "a")
    cli("oracle", *base, "--seed", 2, "--out", tmp_path / "b")
    cli("oracle", *base, "--seed", 1, "--out", tmp_path / "c")
    a, b, c = ((tmp_path / d / "oracle.csv").read_bytes() for d in "abc")
    assert a == c and a != b


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    out = subprocess.run(
        [sys.executable, "-m", "cdfdrift", "run", "--set", "T=0.01", "--set", "tau=0.001", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "timeseries.csv").exists()
