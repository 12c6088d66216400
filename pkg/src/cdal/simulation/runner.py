import argparse
import logging
import os
import sys
from dataclasses import replace
from typing import Optional

import numpy as np
import polars as pl
from dotenv import load_dotenv

from src.cdal.constants import (
    ABLATION_RHO,
    CHECK_EPS_IN,
    CHECK_EPS_OUT,
    CHECK_RHO,
    EXIT_DIVERGENCE,
    EXIT_OK,
    EXIT_ORACLE,
    EXIT_USAGE,
    RHO_SWEEP,
)
from src.cdal.problem.augment import augment
from src.cdal.problem.base import (
    CdalConfigError,
    OracleFailureError,
    ScalingError,
    SimulationError,
    SolverDivergenceError,
)
from src.cdal.simulation.bench_runner import (
    BENCH_PLANTS,
    check_random_instance,
    run_ablation,
    run_benchmark,
    run_rho_sweep,
)
from src.cdal.simulation.closed_loop import simulate_lpv_cstr, simulate_lti
from src.cdal.simulation.config import load_config
from src.cdal.simulation.export import output_dir, write_csv
from src.cdal.solver.cdal import SolverSettings, solve
from src.cdal.visualization.report import print_simulation_report, print_solve_report, print_table

LOG_LEVELS = {"off": logging.CRITICAL + 1, "info": logging.INFO, "trace": logging.DEBUG}


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; usage errors are exit code 1 here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"❌ {self.prog}: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def configure_logging() -> None:
    level_name = os.environ.get("CDAL_LOG", "off").lower()
    if level_name not in LOG_LEVELS:
        raise CdalConfigError(f"Invalid CDAL_LOG: '{level_name}'. Must be one of {sorted(LOG_LEVELS)}")
    logging.basicConfig(
        level=LOG_LEVELS[level_name],
        stream=sys.stderr,
        format="%(levelname)s %(message)s",
        force=True,
    )


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rho", type=float, help="AL penalty parameter")
    p.add_argument("--eps-in", type=float, dest="eps_in")
    p.add_argument("--eps-out", type=float, dest="eps_out")
    p.add_argument("--max-outer", type=int, dest="N_out")
    p.add_argument("--max-inner", type=int, dest="N_in")
    p.add_argument("--no-accel", action="store_true")
    p.add_argument("--no-reverse", action="store_true")
    p.add_argument("--no-precond", action="store_true")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--seed", type=int, default=0, help="random-instance seed")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cdal", description="Coordinate-descent augmented Lagrangian MPC solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="one-shot solve of a config's initial MPC problem")
    p_solve.add_argument("config")
    _add_common_flags(p_solve)

    p_sim = sub.add_parser("simulate", help="closed-loop simulation of a config")
    p_sim.add_argument("config")
    _add_common_flags(p_sim)

    p_bench = sub.add_parser("bench", help="closed-loop benchmark on a built-in plant")
    p_bench.add_argument("plant", choices=sorted(BENCH_PLANTS))
    p_bench.add_argument("--rho-sweep", action="store_true", dest="rho_sweep",
                         help=f"repeat for rho in {RHO_SWEEP}")
    _add_common_flags(p_bench)

    p_abl = sub.add_parser("ablation", help="AFTI-16 grid over acceleration / reverse / preconditioning")
    _add_common_flags(p_abl)

    p_check = sub.add_parser("check", help="compare CDAL against the reference QP on a random instance")
    _add_common_flags(p_check)
    return parser


def apply_flags(settings: SolverSettings, args: argparse.Namespace) -> SolverSettings:
    changes = {
        k: getattr(args, k)
        for k in ("rho", "eps_in", "eps_out", "N_out", "N_in")
        if getattr(args, k, None) is not None
    }
    if args.no_accel:
        changes["use_acceleration"] = False
    if args.no_reverse:
        changes["use_reverse"] = False
    if args.no_precond:
        changes["use_precond"] = False
    return replace(settings, **changes) if changes else settings


def _out_path(args: argparse.Namespace, default_name: str) -> str:
    return args.out or os.path.join(output_dir(), default_name)


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    settings = apply_flags(cfg.settings, args)
    m = augment(cfg.problem())
    it, report = solve(m, None, settings)
    print_solve_report(report, m, settings, it.U)

    u = m.xh0[m.n_xh - m.n_u:] + np.cumsum(it.U, axis=0)
    data = {"t": list(range(m.T))}
    for i in range(m.n_u):
        data[f"du{i + 1}"] = it.U[:, i].tolist()
        data[f"u{i + 1}"] = u[:, i].tolist()
    for i in range(m.n_xh - m.n_u):
        data[f"x{i + 1}"] = it.X[1:, i].tolist()
    write_csv(pl.DataFrame(data), _out_path(args, "solve_trajectory.csv"))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    settings = apply_flags(cfg.settings, args)
    if cfg.plant_name == "cstr":
        log = simulate_lpv_cstr(cfg.plant, cfg.scenario, settings, cfg.overrides, progress=True)
        layout = "cstr"
    else:
        log = simulate_lti(cfg.plant, cfg.scenario, settings, cfg.overrides, progress=True)
        layout = "lti"
    print_simulation_report(log, f"{cfg.plant_name} ({settings.scheme}, rho={settings.rho:g})")
    write_csv(log.to_frame(layout), _out_path(args, f"{cfg.plant_name}_closed_loop.csv"))
    return EXIT_OK


def cmd_bench(args) -> int:
    base = apply_flags(SolverSettings(rho=BENCH_PLANTS[args.plant]), args)
    if args.rho_sweep:
        table = run_rho_sweep(RHO_SWEEP, plant=args.plant, base=base, progress=True)
        print_table(table, f"{args.plant}: rho sweep ({base.scheme})")
        write_csv(table, _out_path(args, f"bench_{args.plant}_rho_sweep.csv"))
        return EXIT_OK
    _, table = run_benchmark(args.plant, base, progress=True)
    print_table(table, f"{args.plant}: {base.scheme}, rho={base.rho:g}")
    write_csv(table, _out_path(args, f"bench_{args.plant}.csv"))
    return EXIT_OK


def cmd_ablation(args) -> int:
    base = apply_flags(SolverSettings(), args)
    rho = args.rho if args.rho is not None else ABLATION_RHO
    table = run_ablation(rho=rho, base=base, progress=True)
    print_table(table, f"Ablation on AFTI-16 (rho={rho:g})")
    write_csv(table, _out_path(args, "ablation.csv"))
    return EXIT_OK


def cmd_check(args) -> int:
    base = SolverSettings(rho=CHECK_RHO, eps_out=CHECK_EPS_OUT, eps_in=CHECK_EPS_IN)
    res = check_random_instance(args.seed, apply_flags(base, args))
    print(f"seed={res.seed} n_x={res.n_x} n_u={res.n_u} T={res.T} outer={res.outer_iters}")
    print(f"|U - U_ref|_inf = {res.u_gap:.3e}, objective gap = {res.objective_rel_gap:.3e}")
    if res.passed:
        print("✅ CDAL matches the reference QP")
        return EXIT_OK
    print("❌ CDAL does not match the reference QP")
    return EXIT_DIVERGENCE


COMMANDS = {
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "bench": cmd_bench,
    "ablation": cmd_ablation,
    "check": cmd_check,
}


def main(argv: Optional[list] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    try:
        configure_logging()
        return COMMANDS[args.command](args)
    except (CdalConfigError, ScalingError) as e:
        print(f"❌ Config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SolverDivergenceError as e:
        where = f" at step {e.step}" if e.step is not None else ""
        print(f"❌ Solver diverged{where} (outer iteration {e.outer_iter}): {e}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except SimulationError as e:
        print(f"❌ Simulation failed at step {e.step}: {e}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except OracleFailureError as e:
        print(f"❌ Reference QP failed: {e}", file=sys.stderr)
        return EXIT_ORACLE


if __name__ == "__main__":
    sys.exit(main())
