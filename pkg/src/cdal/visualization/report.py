import numpy as np
import polars as pl

from src.cdal.problem.augment import initial_state_violation
from src.cdal.problem.base import AugmentedModel
from src.cdal.problem.cost import closed_loop_cost
from src.cdal.solver.cdal import SolveReport, SolverSettings


def print_solve_report(report: SolveReport, m: AugmentedModel, settings: SolverSettings, U: np.ndarray):
    print(f"\n=== Solve Report ({settings.scheme}, rho={settings.rho:g}) ===")
    print(f"- Horizon: T={m.T}, n_xh={m.n_xh}, n_u={m.n_u}")
    print(f"{'outer iterations':25}: {report.outer_iters}")
    print(f"{'inner passes (sum)':25}: {report.inner_iters_total}")
    print(f"{'converged':25}: {report.converged}")
    print(f"{'dual gap':25}: {report.dual_gap:.3e}")
    print(f"{'objective':25}: {report.objective:.9g}")
    print(f"{'first increment':25}: {np.array2string(U[0], precision=6)}")

    gap = initial_state_violation(m)
    if gap > 0.0:
        print(f"ℹ️  Initial state lies outside its box by {gap:.3g} (fixed parameter, not a variable)")


def print_simulation_report(log, title: str):
    outer = np.asarray(log.outer_iters)
    inner = np.asarray(log.inner_iters)
    solve_ms = np.asarray(log.solve_ms)
    step_ms = np.asarray(log.step_ms)

    print(f"\n=== Closed Loop: {title} ===")
    print(f"- Steps: {len(log)}")
    print(f"{'cost':25}: {closed_loop_cost(log):.9g}")
    print(f"{'outer iters avg / max':25}: {outer.mean():.2f} / {outer.max()}")
    print(f"{'inner iters avg / max':25}: {inner.mean():.2f} / {inner.max()}")
    print(f"{'solve ms avg / max':25}: {solve_ms.mean():.3f} / {solve_ms.max():.3f}")
    print(f"{'step ms avg / max':25}: {step_ms.mean():.3f} / {step_ms.max():.3f}")
    print(f"{'max constraint violation':25}: {max(log.violations):.3e}")
    not_converged = len(log.converged) - sum(log.converged)
    if not_converged:
        print(f"⚠️  {not_converged} step(s) stopped at the outer iteration limit")


def print_table(df: pl.DataFrame, title: str):
    print(f"\n=== {title} ===")
    with pl.Config(tbl_rows=-1, tbl_cols=-1, float_precision=4):
        print(df)
