import json
import logging
from pathlib import Path

import pytest

from src.cdal.constants import CSTR_LOG_COLUMNS, EXIT_DIVERGENCE, EXIT_OK, EXIT_ORACLE, EXIT_USAGE
from src.cdal.problem.base import OracleFailureError, SolverDivergenceError
from src.cdal.simulation import bench_runner, runner
from src.cdal.simulation.bench_runner import CheckResult
from src.cdal.simulation.runner import apply_flags, build_parser, configure_logging, main
from src.cdal.solver.cdal import SolverSettings

CONFIGS = Path(__file__).resolve().parents[3] / "configs"


@pytest.mark.parametrize("argv", [
    ["fly"],
    [],
    ["bench", "boat"],
    ["solve", "x.json", "--rho", "lots"],
    ["check", "--frobnicate"],
])
def test_usage_errors_exit_1(argv):
    with pytest.raises(SystemExit) as e:
        main(argv)
    assert e.value.code == EXIT_USAGE


def test_missing_config_returns_1(tmp_path):
    assert main(["solve", str(tmp_path / "missing.json")]) == EXIT_USAGE


def test_bad_solver_flag_value_returns_1():
    assert main(["solve", str(CONFIGS / "double_integrator.json"), "--rho", "-1"]) == EXIT_USAGE


def test_invalid_log_level_returns_1(monkeypatch):
    monkeypatch.setenv("CDAL_LOG", "loud")
    assert main(["check", "--seed", "1"]) == EXIT_USAGE


def test_configure_logging_trace(monkeypatch):
    monkeypatch.setenv("CDAL_LOG", "trace")
    configure_logging()
    assert logging.getLogger().level == logging.DEBUG


def test_apply_flags():
    args = build_parser().parse_args(["ablation", "--rho", "0.5", "--max-inner", "7", "--no-reverse"])
    s = apply_flags(SolverSettings(), args)
    assert s.rho == 0.5
    assert s.N_in == 7
    assert s.use_reverse is False
    assert s.use_acceleration is True
    assert s.scheme == "P-A-CDAL"


def test_apply_flags_without_changes_keeps_settings():
    base = SolverSettings(rho=0.3)
    args = build_parser().parse_args(["check"])
    assert apply_flags(base, args) is base


@pytest.mark.parametrize("argv", [
    ["solve", "x.json"], ["simulate", "x.json"], ["bench", "afti16"], ["ablation"], ["check"],
])
def test_seed_is_accepted_by_every_subcommand(argv):
    parser = build_parser()
    assert parser.parse_args(argv).seed == 0
    assert parser.parse_args(argv + ["--seed", "9"]).seed == 9


def test_solve_writes_trajectory(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    assert main(["solve", str(CONFIGS / "double_integrator.json"), "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "t,du1,u1,x1,x2"
    assert len(lines) == 1 + 10
    assert "Solve Report" in capsys.readouterr().out


def test_solve_default_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("CDAL_OUTPUT_DIR", str(tmp_path / "res"))
    assert main(["solve", str(CONFIGS / "double_integrator.json")]) == EXIT_OK
    assert (tmp_path / "res" / "solve_trajectory.csv").exists()


def test_simulate_short_cstr(tmp_path):
    cfg = json.loads((CONFIGS / "cstr.json").read_text())
    cfg["scenario"]["length"] = 3
    path = tmp_path / "cstr.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "cstr.csv"
    assert main(["simulate", str(path), "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].split(",") == CSTR_LOG_COLUMNS
    assert len(lines) == 4


def test_check_passes():
    assert main(["check", "--seed", "2"]) == EXIT_OK


def test_check_mismatch_returns_2(monkeypatch, capsys):
    def mismatch(seed, settings=None):
        return CheckResult(seed=seed, n_x=2, n_u=1, T=3, u_gap=0.5, objective_rel_gap=0.1,
                           outer_iters=1, passed=False)

    monkeypatch.setattr(runner, "check_random_instance", mismatch)
    assert main(["check", "--seed", "4"]) == EXIT_DIVERGENCE
    assert "does not match" in capsys.readouterr().out


def test_oracle_failure_returns_3(monkeypatch):
    def broken(qp):
        raise OracleFailureError("status: primal infeasible")

    monkeypatch.setattr(bench_runner, "solve_qp_reference", broken)
    assert main(["check"]) == EXIT_ORACLE


def test_divergence_returns_2(monkeypatch, capsys):
    def diverge(*args, **kwargs):
        raise SolverDivergenceError("non-finite multipliers", outer_iter=3)

    monkeypatch.setattr(runner, "solve", diverge)
    assert main(["solve", str(CONFIGS / "double_integrator.json")]) == EXIT_DIVERGENCE
    assert "outer iteration 3" in capsys.readouterr().err


def test_directory_config_returns_1(tmp_path, capsys):
    assert main(["simulate", str(tmp_path)]) == EXIT_USAGE
    assert "Config error" in capsys.readouterr().err
