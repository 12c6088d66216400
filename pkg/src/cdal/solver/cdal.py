from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.cdal.constants import (
    DEFAULT_EPS_IN,
    DEFAULT_EPS_OUT,
    DEFAULT_N_IN,
    DEFAULT_N_OUT,
    DEFAULT_RHO,
)
from src.cdal.problem.augment import cold_start, mpc_objective, rollout
from src.cdal.problem.base import (
    AugmentedModel,
    CdalConfigError,
    PrimalDualIterate,
    SolverDivergenceError,
)
from src.cdal.solver.cd_kernel import CdWorkspace, inner_solve
from src.cdal.solver.precondition import (
    DiagonalScaling,
    apply,
    compute_scaling,
    dual_from_scaled,
    dual_to_scaled,
    scale_states,
    unscale_states,
)


@dataclass(frozen=True)
class SolverSettings:
    rho: float = DEFAULT_RHO
    N_out: int = DEFAULT_N_OUT
    N_in: int = DEFAULT_N_IN
    eps_out: float = DEFAULT_EPS_OUT
    eps_in: float = DEFAULT_EPS_IN
    use_acceleration: bool = True
    use_reverse: bool = True
    use_precond: bool = True

    def __post_init__(self):
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise CdalConfigError(f"rho must be positive and finite, got {self.rho}")
        if self.eps_out <= 0 or self.eps_in <= 0:
            raise CdalConfigError("eps_out / eps_in must be positive")
        if self.N_out < 1 or self.N_in < 1:
            raise CdalConfigError("N_out / N_in must be >= 1")

    @property
    def scheme(self) -> str:
        """Ablation name of this flag combination (e.g. 'P-A-CDAL')."""
        if self.use_acceleration and self.use_reverse and self.use_precond:
            return "CDAL"
        core = ("A" if self.use_acceleration else "") + ("R" if self.use_reverse else "")
        name = f"{core or '0'}-CDAL"
        return f"P-{name}" if self.use_precond else name


@dataclass(frozen=True)
class SolveReport:
    outer_iters: int
    inner_iters_total: int
    converged: bool
    dual_gap: float
    objective: float


def nesterov_alpha(alpha_k: float) -> float:
    return (1.0 + math.sqrt(1.0 + 4.0 * alpha_k * alpha_k)) / 2.0


def _residuals(m: AugmentedModel, U: np.ndarray, X: np.ndarray) -> np.ndarray:
    # r_t = A x_t + B u_t + e - x_{t+1}, stacked (T, n_xh)
    return X[:-1] @ m.A_hat.T + U @ m.B_hat.T + m.e_hat[None, :] - X[1:]


def dual_refresh(m: AugmentedModel, it: PrimalDualIterate,
                 lambda_hat: Optional[np.ndarray] = None) -> np.ndarray:
    """
    lambda_t = lambda_hat_t + A x_t + B u_t + e - x_{t+1} for every stage.

    This is the dual ascent step and also sets up the coupling invariant of
    the CD kernel. `lambda_hat` defaults to the iterate's current Lambda.
    """
    base = it.Lambda if lambda_hat is None else np.asarray(lambda_hat, dtype=float)
    return np.ascontiguousarray(base + _residuals(m, it.U, it.X))


def _check_finite(it: PrimalDualIterate, k: int) -> None:
    if not (np.all(np.isfinite(it.U)) and np.all(np.isfinite(it.X)) and np.all(np.isfinite(it.Lambda))):
        raise SolverDivergenceError(
            f"Non-finite iterate at outer iteration {k} (rho too large or model ill-posed)", outer_iter=k
        )


def solve(
    m: AugmentedModel,
    it: Optional[PrimalDualIterate] = None,
    s: SolverSettings = SolverSettings(),
    scaling: Optional[DiagonalScaling] = None,
) -> tuple[PrimalDualIterate, SolveReport]:
    """
    Accelerated reverse-cyclic CDAL.

    `it` is the primal/dual warm start in unscaled coordinates (cold start if
    None); it is not modified. `scaling` lets LTI callers reuse a cached E.
    The returned iterate is unscaled. The inner sigma, the outer test and
    `dual_gap` are measured in unscaled units; `objective` is evaluated on
    the exact state rollout of the returned increments.
    """
    if it is None:
        it = cold_start(m)
    if it.T != m.T or it.U.shape[1] != m.n_u or it.X.shape[1] != m.n_xh:
        raise CdalConfigError(
            f"warm start shape mismatch: T={it.T} vs {m.T}, n_u={it.U.shape[1]}, n_xh={it.X.shape[1]}"
        )

    work = it.copy()
    work.X[0] = m.xh0
    if s.use_precond:
        scaling = scaling if scaling is not None else compute_scaling(m)
        model = apply(m, scaling)
        work = PrimalDualIterate(
            U=work.U,
            X=scale_states(work.X, scaling),
            Lambda=dual_to_scaled(work.Lambda, scaling),
            Lambda_prev=dual_to_scaled(work.Lambda_prev, scaling),
        )
    else:
        scaling = None
        model = m

    # inner and outer tests both measure steps in the original units
    x_weight = None if scaling is None else scaling.E_inv_diag ** 2
    ws = CdWorkspace.build(model, s.rho, x_weight)

    alpha = 1.0
    lam_hat = work.Lambda.copy()
    lam_prev = work.Lambda.copy()
    inner_total = 0
    converged = False
    gap = math.inf
    k = 0
    for k in range(1, s.N_out + 1):
        work.Lambda = dual_refresh(model, work, lam_hat)
        passes, sigma = inner_solve(ws, work, s.eps_in, s.N_in, reverse=s.use_reverse)
        inner_total += passes
        _check_finite(work, k)

        step = work.Lambda - lam_hat
        if scaling is not None:
            # scaled residual is E r; test the model's own residual
            step = scaling.E_inv_diag * step
        gap = float(np.sum(step ** 2))
        logging.debug(f"[CDAL] k={k} inner={passes} sigma={sigma:.3e} gap={gap:.3e}")
        if gap <= s.eps_out:
            converged = True
            break

        if s.use_acceleration:
            alpha_next = nesterov_alpha(alpha)
            lam_hat = work.Lambda + ((alpha - 1.0) / alpha_next) * (work.Lambda - lam_prev)
            alpha = alpha_next
        else:
            lam_hat = work.Lambda.copy()
        lam_prev = work.Lambda.copy()

    if not converged:
        logging.warning(f"[CDAL] Outer loop hit N_out={s.N_out} with dual gap {gap:.3e} > {s.eps_out:g}")

    work.Lambda_prev = lam_prev
    if scaling is not None:
        work = PrimalDualIterate(
            U=work.U,
            X=unscale_states(work.X, scaling),
            Lambda=dual_from_scaled(work.Lambda, scaling),
            Lambda_prev=dual_from_scaled(work.Lambda_prev, scaling),
        )
        work.X[0] = m.xh0
        # unscaling may round one ulp outside the box
        work.X[1:] = np.clip(work.X[1:], m.xh_min, m.xh_max)

    report = SolveReport(
        outer_iters=k,
        inner_iters_total=inner_total,
        converged=converged,
        dual_gap=gap,
        objective=mpc_objective(m, work.U, rollout(m, work.U)),
    )
    return work, report
