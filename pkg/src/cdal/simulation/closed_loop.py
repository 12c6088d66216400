from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Protocol

import numpy as np
import polars as pl
from tqdm import tqdm

from src.cdal.constants import (
    AFTI16_STEPS,
    CSTR_LOG_COLUMNS,
    CSTR_REFERENCE,
    CSTR_STEPS,
    LTI_LOG_COLUMNS,
)
from src.cdal.plants.afti16 import pitch_reference
from src.cdal.plants.cstr import (
    CstrModel,
    cstr_derivatives,
    cstr_mpc_problem,
    euler_discretize,
    linearize_cstr,
    rk4_propagate,
)
from src.cdal.problem.augment import augment, initial_state_violation, shift_warm_start
from src.cdal.problem.base import (
    CdalConfigError,
    MpcProblem,
    PrimalDualIterate,
    SimulationError,
    SolverDivergenceError,
)
from src.cdal.solver.cdal import SolverSettings, solve
from src.cdal.solver.precondition import compute_scaling


class LtiPlant(Protocol):
    def mpc_problem(self, x0=None, u_prev=None, r=None) -> MpcProblem: ...


@dataclass(frozen=True)
class Scenario:
    """
    Closed-loop run description. `references` is a list of (from_step, r)
    pairs; the reference at step k is the last entry with from_step <= k.
    """
    length: int
    x0: np.ndarray
    u_prev: np.ndarray
    references: tuple
    u_ref: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.length < 1:
            raise CdalConfigError(f"scenario.length must be >= 1, got {self.length}")
        if not self.references:
            raise CdalConfigError("scenario.references must not be empty")
        steps = [int(k) for k, _ in self.references]
        if steps[0] != 0 or steps != sorted(steps):
            raise CdalConfigError("scenario.references: from_step must start at 0 and be increasing")

    def reference(self, k: int) -> np.ndarray:
        r = self.references[0][1]
        for from_step, value in self.references:
            if from_step <= k:
                r = value
        return np.asarray(r, dtype=float)


def afti16_scenario(length: int = AFTI16_STEPS) -> Scenario:
    """Pitch 0 -> 10 deg at t=0, back to 0 at half the run, from rest."""
    half = length // 2
    return Scenario(
        length=length,
        x0=np.zeros(4),
        u_prev=np.zeros(2),
        references=((0, pitch_reference(0, length)), (half, pitch_reference(half, length))),
    )


def cstr_scenario(model: CstrModel = CstrModel(), length: int = CSTR_STEPS,
                  reference: float = CSTR_REFERENCE) -> Scenario:
    """Start at the model's initial state with the coolant that holds T steady."""
    x0 = model.x0
    return Scenario(
        length=length,
        x0=x0,
        u_prev=np.array([model.steady_coolant(x0, model.Ti(0.0))]),
        references=((0, np.array([reference])),),
    )


@dataclass
class ClosedLoopLog:
    """Record k: measured x_k, applied u_k and du_k, and the scored pair y_{k+1}, r_{k+1}."""
    W_y: np.ndarray
    W_u: np.ndarray
    W_du: np.ndarray
    Ts: float
    x: list = field(default_factory=list)
    y: list = field(default_factory=list)
    u: list = field(default_factory=list)
    du: list = field(default_factory=list)
    r: list = field(default_factory=list)
    u_ref: list = field(default_factory=list)
    outer_iters: list = field(default_factory=list)
    inner_iters: list = field(default_factory=list)
    solve_ms: list = field(default_factory=list)
    step_ms: list = field(default_factory=list)
    converged: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.u)

    def append(self, *, x, y, u, du, r, u_ref, report, solve_ms: float, step_ms: float, violation: float) -> None:
        self.x.append(np.asarray(x, dtype=float).copy())
        self.y.append(np.asarray(y, dtype=float).copy())
        self.u.append(np.asarray(u, dtype=float).copy())
        self.du.append(np.asarray(du, dtype=float).copy())
        self.r.append(np.asarray(r, dtype=float).copy())
        self.u_ref.append(np.asarray(u_ref, dtype=float).copy())
        self.outer_iters.append(int(report.outer_iters))
        self.inner_iters.append(int(report.inner_iters_total))
        self.solve_ms.append(float(solve_ms))
        self.step_ms.append(float(step_ms))
        self.converged.append(bool(report.converged))
        self.violations.append(float(violation))

    def to_frame(self, layout: str = "lti") -> pl.DataFrame:
        t = [k * self.Ts for k in range(len(self))]
        if layout == "cstr":
            data = {
                "t": t,
                "C_A": [float(x[0]) for x in self.x],
                "T": [float(x[1]) for x in self.x],
                "Tc": [float(u[0]) for u in self.u],
                "dTc": [float(du[0]) for du in self.du],
                "r": [float(r[0]) for r in self.r],
                "outer_iters": self.outer_iters,
                "inner_iters": self.inner_iters,
            }
            return pl.DataFrame(data).select(CSTR_LOG_COLUMNS)
        if layout != "lti":
            raise ValueError(f"Unknown log layout: {layout!r}")

        data: dict[str, list] = {"t": t}
        for name, seq in (("x", self.x), ("y", self.y), ("u", self.u), ("du", self.du), ("r", self.r)):
            width = len(seq[0]) if seq else 0
            for i in range(width):
                data[f"{name}{i + 1}"] = [float(v[i]) for v in seq]
        stats = {
            "outer_iters": self.outer_iters,
            "inner_iters": self.inner_iters,
            "solve_ms": self.solve_ms,
            "step_ms": self.step_ms,
            "converged": self.converged,
            "violation": self.violations,
        }
        data.update({c: stats[c] for c in LTI_LOG_COLUMNS})
        return pl.DataFrame(data)


def _box_violation(v: np.ndarray, lo, hi) -> float:
    worst = 0.0
    if lo is not None:
        worst = max(worst, float(np.max(np.asarray(lo, dtype=float) - v, initial=0.0)))
    if hi is not None:
        worst = max(worst, float(np.max(v - np.asarray(hi, dtype=float), initial=0.0)))
    return worst


def _step_violation(p: MpcProblem, x_next: np.ndarray, u: np.ndarray, du: np.ndarray) -> float:
    y_next = np.atleast_2d(p.C) @ x_next
    return max(
        _box_violation(u, p.u_min, p.u_max),
        _box_violation(du, p.du_min, p.du_max),
        _box_violation(x_next, p.x_min, p.x_max),
        _box_violation(y_next, p.y_min, p.y_max),
    )


def _apply_increment(p: MpcProblem, u_prev: np.ndarray, du: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Input actually applied: u_prev + du clipped to the u box; du is recomputed from it."""
    lo = -np.inf if p.u_min is None else np.asarray(p.u_min, dtype=float)
    hi = np.inf if p.u_max is None else np.asarray(p.u_max, dtype=float)
    u = np.clip(u_prev + du, lo, hi)
    return u, u - u_prev


def _controller_move(problem: MpcProblem, prev: Optional[PrimalDualIterate], settings: SolverSettings,
                     k: int, scaling=None):
    m = augment(problem)
    if k == 0:
        gap = initial_state_violation(m)
        if gap > 0.0:
            logging.info(f"[Sim] Initial state violates its box by {gap:.3g} (x0 is a parameter)")
    warm = shift_warm_start(prev, m.xh0, m) if prev is not None else None
    t0 = time.perf_counter()
    try:
        it, report = solve(m, warm, settings, scaling)
    except SolverDivergenceError as e:
        e.step = k
        raise
    return it, report, (time.perf_counter() - t0) * 1e3


def simulate_lti(
    model: LtiPlant,
    scenario: Scenario,
    settings: SolverSettings = SolverSettings(),
    overrides: Optional[dict] = None,
    progress: bool = False,
    warm_start: bool = True,
    plant_step: Optional[Callable[[np.ndarray, np.ndarray, int], np.ndarray]] = None,
) -> ClosedLoopLog:
    """
    Receding-horizon loop on a linear plant. The plant is propagated with
    the same discrete model the controller uses unless `plant_step(x, u, k)`
    is given. `warm_start=False` cold-starts every solve.
    """
    template = model.mpc_problem(scenario.x0, scenario.u_prev, scenario.reference(0))
    if overrides:
        template = replace(template, **overrides)
    if scenario.u_ref is not None:
        template = replace(template, u_ref=np.asarray(scenario.u_ref, dtype=float))

    A, B, C = np.atleast_2d(template.A), np.atleast_2d(template.B), np.atleast_2d(template.C)
    e = np.zeros(A.shape[0]) if template.e is None else np.asarray(template.e, dtype=float)
    # A_hat and Q are step-invariant, so E is too
    scaling = compute_scaling(augment(template)) if settings.use_precond else None

    log = ClosedLoopLog(W_y=template.W_y, W_u=template.W_u, W_du=template.W_du,
                        Ts=float(getattr(model, "Ts", None) or 1.0))
    x = np.asarray(scenario.x0, dtype=float).copy()
    u_prev = np.asarray(scenario.u_prev, dtype=float).copy()
    it = None
    for k in tqdm(range(scenario.length), desc="Closed loop (LTI)", disable=not progress):
        t_step = time.perf_counter()
        r = scenario.reference(k)
        problem = template.with_state(x, u_prev, r)
        it, report, solve_ms = _controller_move(problem, it if warm_start else None, settings, k, scaling)

        u, du = _apply_increment(problem, u_prev, it.U[0])
        x_next = A @ x + B @ u + e if plant_step is None else np.asarray(plant_step(x, u, k), dtype=float)
        if not np.all(np.isfinite(x_next)):
            raise SimulationError(f"Plant state became non-finite at step {k}", step=k)

        log.append(
            x=x, y=C @ x_next, u=u, du=du, r=scenario.reference(k + 1),
            u_ref=u_prev if template.u_ref is None else template.u_ref,
            report=report, solve_ms=solve_ms,
            step_ms=(time.perf_counter() - t_step) * 1e3,
            violation=_step_violation(problem, x_next, u, du),
        )
        x, u_prev = x_next, u
    return log


def _check_linearization(x: np.ndarray, u: float, Ti: float, Ac, Bc, ec, model: CstrModel, k: int) -> None:
    f = cstr_derivatives(x, u, Ti, model)
    f_lin = Ac @ x + Bc[:, 0] * u + ec
    if not np.allclose(f_lin, f, rtol=1e-9, atol=1e-9):
        raise SimulationError(f"Linearized model does not reproduce f at step {k}: {f_lin} vs {f}", step=k)


def simulate_lpv_cstr(
    model: CstrModel = CstrModel(),
    scenario: Optional[Scenario] = None,
    settings: SolverSettings = SolverSettings(),
    overrides: Optional[dict] = None,
    progress: bool = False,
) -> ClosedLoopLog:
    """
    Successive-linearization MPC of the CSTR: the controller sees an Euler
    model linearized at (x_k, u_{k-1}, Ti(t_k)); the plant is integrated
    with RK4 on the nonlinear equations.
    """
    scenario = scenario if scenario is not None else cstr_scenario(model)
    template = cstr_mpc_problem(scenario.x0, float(scenario.u_prev[0]), 0.0,
                                float(scenario.reference(0)[0]), model)
    if overrides:
        template = replace(template, **overrides)
    if scenario.u_ref is not None:
        template = replace(template, u_ref=np.asarray(scenario.u_ref, dtype=float))

    log = ClosedLoopLog(W_y=template.W_y, W_u=template.W_u, W_du=template.W_du, Ts=model.Ts)
    x = np.asarray(scenario.x0, dtype=float).copy()
    u_prev = float(np.asarray(scenario.u_prev, dtype=float).reshape(-1)[0])
    it = None
    for k in tqdm(range(scenario.length), desc="Closed loop (CSTR)", disable=not progress):
        t_step = time.perf_counter()
        t = k * model.Ts
        r = scenario.reference(k)
        Ti = model.Ti(t)
        try:
            Ac, Bc, ec = linearize_cstr(x, u_prev, Ti, model)
        except CdalConfigError as e:
            raise SimulationError(f"Step {k}: {e}", step=k) from e
        _check_linearization(x, u_prev, Ti, Ac, Bc, ec, model, k)
        Ad, Bd, ed = euler_discretize(Ac, Bc, ec, model.Ts)
        problem = template.with_state(x, np.array([u_prev]), r, A=Ad, B=Bd, e=ed)

        it, report, solve_ms = _controller_move(problem, it, settings, k)

        u, du = _apply_increment(problem, np.array([u_prev]), it.U[0])
        try:
            x_next = rk4_propagate(x, float(u[0]), t, model)
        except CdalConfigError as e:
            raise SimulationError(f"Step {k}: {e}", step=k) from e
        if not np.all(np.isfinite(x_next)):
            raise SimulationError(f"CSTR state became non-finite at step {k}", step=k)

        log.append(
            x=x, y=np.atleast_2d(problem.C) @ x_next, u=u, du=du, r=scenario.reference(k + 1),
            u_ref=np.array([u_prev]) if template.u_ref is None else template.u_ref,
            report=report, solve_ms=solve_ms,
            step_ms=(time.perf_counter() - t_step) * 1e3,
            violation=_step_violation(problem, x_next, u, du),
        )
        x, u_prev = x_next, float(u[0])
    return log
