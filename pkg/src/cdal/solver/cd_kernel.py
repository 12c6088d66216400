"""
Matrix-free reverse-cyclic coordinate descent on the augmented-Lagrangian
subproblem F_rho(z; Lambda_hat) of the increment-form MPC.

Coupling invariant: on entry to every block update, Lambda[t] holds

    lambda_hat_t + A x_t + B u_t + e - x_{t+1}

for the current primal iterate. Each coordinate move keeps it true, so the
gradient of a coordinate is read off Lambda directly and the dual ascent
step of the outer loop comes for free.

All arrays handed to the njit kernels are C-contiguous float64. No fastmath:
bounds carry +-inf.

sigma sums squared coordinate moves; state moves are weighted by x_weight so
that a scaled model reports its steps in the original units.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from src.cdal.problem.base import AugmentedModel, PrimalDualIterate


@dataclass(frozen=True)
class CdWorkspace:
    phi1: np.ndarray   # R/rho + B'B
    phi3: np.ndarray   # Q/rho + I + A'A
    phi6: np.ndarray   # Q/rho + I
    diag1: np.ndarray
    diag3: np.ndarray
    diag6: np.ndarray
    rho: float
    model: AugmentedModel
    # contiguous copies used by the kernels
    A: np.ndarray
    B: np.ndarray
    Q_rho: np.ndarray
    R_rho: np.ndarray
    q_rho: np.ndarray
    # sigma weight per state coordinate; E^-2 when the model is scaled
    x_weight: np.ndarray

    @classmethod
    def build(cls, model: AugmentedModel, rho: float,
              x_weight: Optional[np.ndarray] = None) -> "CdWorkspace":
        if not rho > 0.0:
            raise ValueError(f"rho must be positive, got {rho}")
        A, B = model.A_hat, model.B_hat
        n_xh = model.n_xh
        phi1 = model.R / rho + B.T @ B
        phi6 = model.Q / rho + np.eye(n_xh)
        phi3 = phi6 + A.T @ A
        x_weight = np.ones(n_xh) if x_weight is None else np.asarray(x_weight, dtype=float)
        if x_weight.shape != (n_xh,) or np.any(x_weight <= 0.0):
            raise ValueError(f"x_weight: expected {n_xh} positive entries, got {x_weight}")
        return cls(
            phi1=phi1, phi3=phi3, phi6=phi6,
            diag1=np.ascontiguousarray(np.diag(phi1)),
            diag3=np.ascontiguousarray(np.diag(phi3)),
            diag6=np.ascontiguousarray(np.diag(phi6)),
            rho=float(rho),
            model=model,
            A=np.ascontiguousarray(A, dtype=float),
            B=np.ascontiguousarray(B, dtype=float),
            Q_rho=np.ascontiguousarray(model.Q / rho),
            R_rho=np.ascontiguousarray(model.R / rho),
            q_rho=np.ascontiguousarray(model.q_lin / rho),
            x_weight=np.ascontiguousarray(x_weight),
        )


@dataclass(frozen=True)
class PassResult:
    sigma: float


@njit(cache=True)
def clamp(v, lo, hi):
    if v >= hi:
        return hi
    if v <= lo:
        return lo
    return v


@njit(cache=True)
def _input_block(t, U, Lam, B, R_rho, diag1, u_lo, u_hi, reverse):
    n_u = U.shape[1]
    n_xh = B.shape[0]
    sigma = 0.0
    for k in range(n_u):
        i = n_u - 1 - k if reverse else k
        s = 0.0
        for j in range(n_u):
            s += R_rho[i, j] * U[t, j]
        for j in range(n_xh):
            s += B[j, i] * Lam[t, j]
        theta = clamp(U[t, i] - s / diag1[i], u_lo[i], u_hi[i])
        delta = theta - U[t, i]
        if delta != 0.0:
            sigma += delta * delta
            U[t, i] = theta
            for j in range(n_xh):
                Lam[t, j] += delta * B[j, i]
    return sigma


@njit(cache=True)
def _state_block(t, X, Lam, A, Q_rho, q_rho, diag, w, x_lo, x_hi, terminal, reverse):
    # updates X[t+1]; couples into Lam[t] (-I column) and, unless terminal, Lam[t+1] (A column)
    n_xh = X.shape[1]
    sigma = 0.0
    for k in range(n_xh):
        i = n_xh - 1 - k if reverse else k
        s = q_rho[i] - Lam[t, i]
        for j in range(n_xh):
            s += Q_rho[i, j] * X[t + 1, j]
        if not terminal:
            for j in range(n_xh):
                s += A[j, i] * Lam[t + 1, j]
        theta = clamp(X[t + 1, i] - s / diag[i], x_lo[i], x_hi[i])
        delta = theta - X[t + 1, i]
        if delta != 0.0:
            sigma += w[i] * delta * delta
            X[t + 1, i] = theta
            Lam[t, i] -= delta
            if not terminal:
                for j in range(n_xh):
                    Lam[t + 1, j] += delta * A[j, i]
    return sigma


@njit(cache=True)
def _full_pass(U, X, Lam, A, B, Q_rho, R_rho, q_rho, diag1, diag3, diag6, w,
               u_lo, u_hi, x_lo, x_hi, reverse):
    T = U.shape[0]
    sigma = 0.0
    if reverse:
        sigma += _state_block(T - 1, X, Lam, A, Q_rho, q_rho, diag6, w, x_lo, x_hi, True, True)
        sigma += _input_block(T - 1, U, Lam, B, R_rho, diag1, u_lo, u_hi, True)
        for t in range(T - 2, -1, -1):
            sigma += _state_block(t, X, Lam, A, Q_rho, q_rho, diag3, w, x_lo, x_hi, False, True)
            sigma += _input_block(t, U, Lam, B, R_rho, diag1, u_lo, u_hi, True)
    else:
        for t in range(T - 1):
            sigma += _input_block(t, U, Lam, B, R_rho, diag1, u_lo, u_hi, False)
            sigma += _state_block(t, X, Lam, A, Q_rho, q_rho, diag3, w, x_lo, x_hi, False, False)
        sigma += _input_block(T - 1, U, Lam, B, R_rho, diag1, u_lo, u_hi, False)
        sigma += _state_block(T - 1, X, Lam, A, Q_rho, q_rho, diag6, w, x_lo, x_hi, True, False)
    return sigma


@njit(cache=True)
def _inner_loop(U, X, Lam, A, B, Q_rho, R_rho, q_rho, diag1, diag3, diag6, w,
                u_lo, u_hi, x_lo, x_hi, reverse, eps_in, max_passes):
    passes = 0
    sigma = 0.0
    while passes < max_passes:
        sigma = _full_pass(U, X, Lam, A, B, Q_rho, R_rho, q_rho, diag1, diag3, diag6, w,
                           u_lo, u_hi, x_lo, x_hi, reverse)
        passes += 1
        if sigma <= eps_in or not np.isfinite(sigma):
            break
    return passes, sigma


def _bounds(ws: CdWorkspace):
    m = ws.model
    return (
        np.ascontiguousarray(m.uh_min, dtype=float),
        np.ascontiguousarray(m.uh_max, dtype=float),
        np.ascontiguousarray(m.xh_min, dtype=float),
        np.ascontiguousarray(m.xh_max, dtype=float),
    )


def ccd_input_block(t: int, ws: CdWorkspace, it: PrimalDualIterate, sigma: float = 0.0,
                    reverse: bool = True) -> float:
    """One sweep over the coordinates of u_t; returns the updated sigma."""
    u_lo, u_hi, _, _ = _bounds(ws)
    return sigma + _input_block(t, it.U, it.Lambda, ws.B, ws.R_rho, ws.diag1, u_lo, u_hi, reverse)


def ccd_state_block(t: int, ws: CdWorkspace, it: PrimalDualIterate, sigma: float = 0.0,
                    reverse: bool = True) -> float:
    """One sweep over x_{t+1}, 0 <= t <= T-2."""
    if not 0 <= t <= it.T - 2:
        raise IndexError(f"state block index {t} outside [0, {it.T - 2}]")
    _, _, x_lo, x_hi = _bounds(ws)
    return sigma + _state_block(t, it.X, it.Lambda, ws.A, ws.Q_rho, ws.q_rho, ws.diag3,
                                ws.x_weight, x_lo, x_hi, False, reverse)


def ccd_terminal_state(ws: CdWorkspace, it: PrimalDualIterate, sigma: float = 0.0,
                       reverse: bool = True) -> float:
    _, _, x_lo, x_hi = _bounds(ws)
    return sigma + _state_block(it.T - 1, it.X, it.Lambda, ws.A, ws.Q_rho, ws.q_rho, ws.diag6,
                                ws.x_weight, x_lo, x_hi, True, reverse)


def cd_full_pass(ws: CdWorkspace, it: PrimalDualIterate, reverse: bool = True) -> PassResult:
    u_lo, u_hi, x_lo, x_hi = _bounds(ws)
    sigma = _full_pass(it.U, it.X, it.Lambda, ws.A, ws.B, ws.Q_rho, ws.R_rho, ws.q_rho,
                       ws.diag1, ws.diag3, ws.diag6, ws.x_weight, u_lo, u_hi, x_lo, x_hi, reverse)
    return PassResult(sigma=float(sigma))


def inner_solve(ws: CdWorkspace, it: PrimalDualIterate, eps_in: float, max_passes: int,
                reverse: bool = True) -> tuple[int, float]:
    """Full passes until sigma <= eps_in or max_passes; always at least one pass."""
    u_lo, u_hi, x_lo, x_hi = _bounds(ws)
    passes, sigma = _inner_loop(it.U, it.X, it.Lambda, ws.A, ws.B, ws.Q_rho, ws.R_rho, ws.q_rho,
                                ws.diag1, ws.diag3, ws.diag6, ws.x_weight, u_lo, u_hi, x_lo, x_hi,
                                reverse, float(eps_in), int(max(1, max_passes)))
    return int(passes), float(sigma)
