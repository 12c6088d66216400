from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Iterable, Optional

import numpy as np
import polars as pl
from tqdm import tqdm

from src.cdal.constants import (
    ABLATION_RHO,
    ABLATION_SCHEMES,
    AFTI16_BENCH_RHO,
    BENCH_COLUMNS,
    CHECK_EPS_IN,
    CHECK_EPS_OUT,
    CHECK_OBJ_FLOOR_RTOL,
    CHECK_OBJ_RTOL,
    CHECK_RHO,
    CHECK_U_TOL,
    CSTR_BENCH_RHO,
    RHO_SWEEP,
)
from src.cdal.oracle.explicit_qp import build_qp, solve_qp_reference, unstack_z
from src.cdal.plants.afti16 import Afti16Model
from src.cdal.plants.cstr import CstrModel
from src.cdal.problem.augment import augment
from src.cdal.problem.cost import closed_loop_cost
from src.cdal.problem.random_instance import random_problem
from src.cdal.simulation.closed_loop import (
    ClosedLoopLog,
    afti16_scenario,
    cstr_scenario,
    simulate_lpv_cstr,
    simulate_lti,
)
from src.cdal.solver.cdal import SolverSettings, solve

BENCH_PLANTS = {"afti16": AFTI16_BENCH_RHO, "cstr": CSTR_BENCH_RHO}


def summarize_log(log: ClosedLoopLog, scheme: str, rho: float) -> dict:
    """One benchmark row: per-step summed inner iterations, outer iterations, solve time and cost."""
    inner = np.asarray(log.inner_iters, dtype=float)
    outer = np.asarray(log.outer_iters, dtype=float)
    solve_ms = np.asarray(log.solve_ms, dtype=float)
    step_ms = np.asarray(log.step_ms, dtype=float)
    row = {
        "scheme": scheme,
        "rho": float(rho),
        "inner_avg": float(inner.mean()),
        "inner_max": int(inner.max()),
        "outer_avg": float(outer.mean()),
        "outer_max": int(outer.max()),
        "time_ms_avg": float(solve_ms.mean()),
        "time_ms_max": float(solve_ms.max()),
        "step_ms_avg": float(step_ms.mean()),
        "step_ms_max": float(step_ms.max()),
        "cost": closed_loop_cost(log),
    }
    return {c: row[c] for c in BENCH_COLUMNS}


def _rows_to_frame(rows: list[dict]) -> pl.DataFrame:
    return pl.DataFrame(rows).select(BENCH_COLUMNS)


def run_closed_loop(plant: str, settings: SolverSettings, progress: bool = False) -> ClosedLoopLog:
    if plant == "afti16":
        return simulate_lti(Afti16Model(), afti16_scenario(), settings, progress=progress)
    if plant == "cstr":
        model = CstrModel()
        return simulate_lpv_cstr(model, cstr_scenario(model), settings, progress=progress)
    raise ValueError(f"Unknown benchmark plant: {plant!r} (expected one of {sorted(BENCH_PLANTS)})")


def run_benchmark(plant: str, settings: Optional[SolverSettings] = None,
                  progress: bool = False) -> tuple[ClosedLoopLog, pl.DataFrame]:
    """Closed-loop benchmark of one scheme on a built-in plant (default rho per plant)."""
    if settings is None:
        settings = SolverSettings(rho=BENCH_PLANTS.get(plant, CSTR_BENCH_RHO))
    log = run_closed_loop(plant, settings, progress=progress)
    return log, _rows_to_frame([summarize_log(log, settings.scheme, settings.rho)])


def run_ablation(
    rho: float = ABLATION_RHO,
    schemes: Optional[dict] = None,
    base: Optional[SolverSettings] = None,
    progress: bool = False,
) -> pl.DataFrame:
    """
    AFTI-16 closed loop for every on/off combination of acceleration,
    reverse sweeps and preconditioning. Cells run sequentially so the
    timings are comparable.
    """
    schemes = ABLATION_SCHEMES if schemes is None else schemes
    base = SolverSettings() if base is None else base
    rows = []
    for name, (accel, reverse, precond) in tqdm(schemes.items(), desc="Ablation", disable=not progress):
        settings = replace(base, rho=rho, use_acceleration=accel, use_reverse=reverse, use_precond=precond)
        log = run_closed_loop("afti16", settings)
        rows.append(summarize_log(log, name, rho))
        logging.info(f"[Ablation] {name}: outer_avg={rows[-1]['outer_avg']:.2f} cost={rows[-1]['cost']:.4f}")
    return _rows_to_frame(rows)


def run_rho_sweep(
    rhos: Iterable[float] = RHO_SWEEP,
    plant: str = "afti16",
    base: Optional[SolverSettings] = None,
    progress: bool = False,
) -> pl.DataFrame:
    base = SolverSettings() if base is None else base
    rows = []
    for rho in tqdm(list(rhos), desc="rho sweep", disable=not progress):
        settings = replace(base, rho=float(rho))
        log = run_closed_loop(plant, settings)
        rows.append(summarize_log(log, settings.scheme, rho))
    return _rows_to_frame(rows)


@dataclass(frozen=True)
class CheckResult:
    seed: int
    n_x: int
    n_u: int
    T: int
    u_gap: float
    objective_rel_gap: float
    outer_iters: int
    passed: bool


def check_random_instance(seed: int, settings: Optional[SolverSettings] = None) -> CheckResult:
    """
    Random feasible MPC instance solved by CDAL and by the dense reference
    QP; compares the increment sequences and objectives.
    """
    rng = np.random.default_rng(seed)
    n_x = int(rng.integers(1, 5))
    n_u = int(rng.integers(1, 3))
    T = int(rng.integers(1, 6))
    problem = random_problem(rng, n_x, n_u, T)
    m = augment(problem)

    if settings is None:
        settings = SolverSettings(rho=CHECK_RHO, eps_out=CHECK_EPS_OUT, eps_in=CHECK_EPS_IN)
    it, report = solve(m, None, settings)

    qp = build_qp(m)
    z_ref = solve_qp_reference(qp)
    U_ref, _ = unstack_z(z_ref, m.T, m.n_u, m.n_xh)
    obj_ref = qp.objective(z_ref)

    u_gap = float(np.max(np.abs(it.U - U_ref)))
    scale = max(1.0, abs(obj_ref))
    obj_gap = abs(report.objective - obj_ref) / scale
    # the reference is the optimum; CDAL may not undercut it
    above_optimum = report.objective >= obj_ref - CHECK_OBJ_FLOOR_RTOL * scale
    passed = u_gap <= CHECK_U_TOL and obj_gap <= CHECK_OBJ_RTOL and above_optimum
    if not passed:
        logging.warning(f"[Check] seed={seed}: |U - U_ref|_inf={u_gap:.3e}, objective gap={obj_gap:.3e}, "
                        f"objective {report.objective:.9g} vs optimum {obj_ref:.9g}")
    return CheckResult(
        seed=seed, n_x=n_x, n_u=n_u, T=T,
        u_gap=u_gap, objective_rel_gap=obj_gap,
        outer_iters=report.outer_iters, passed=passed,
    )
