from __future__ import annotations

import logging
from typing import Optional

import numpy as np
from scipy.linalg import block_diag

from src.cdal.problem.base import (
    AugmentedModel,
    CdalConfigError,
    MpcProblem,
    PrimalDualIterate,
    _check_box,
    _check_psd,
    _mat,
    _vec,
)


def _fold_output_bounds(
    C: np.ndarray, y_min: np.ndarray, y_max: np.ndarray, x_min: np.ndarray, x_max: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Intersect output bounds into the state box; C rows must be unit vectors."""
    x_min, x_max = x_min.copy(), x_max.copy()
    for j, row in enumerate(C):
        if not (np.isfinite(y_min[j]) or np.isfinite(y_max[j])):
            continue
        nz = np.flatnonzero(row)
        if nz.size != 1 or row[nz[0]] != 1.0:
            raise CdalConfigError(
                f"y bounds: output {j} is not a pure state selection (row of C must be a unit vector)"
            )
        i = int(nz[0])
        x_min[i] = max(x_min[i], y_min[j])
        x_max[i] = min(x_max[i], y_max[j])
    return x_min, x_max


def augment(problem: MpcProblem) -> AugmentedModel:
    """
    Rewrite the increment-form tracking MPC on the stacked state xh = [x; u_prev].

        A_hat = [[A, B], [0, I]],  B_hat = [B; I]
        Q = C_hat' W_hat C_hat,    R = W_du,   q_lin = -C_hat' W_hat [r; u_ref]
    """
    A = np.atleast_2d(np.array(problem.A, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise CdalConfigError(f"A: must be square, got {A.shape}")
    n_x = A.shape[0]
    B = np.atleast_2d(np.array(problem.B, dtype=float))
    if B.shape[0] != n_x:
        raise CdalConfigError(f"B: expected {n_x} rows, got {B.shape[0]}")
    n_u = B.shape[1]
    C = np.atleast_2d(np.array(problem.C, dtype=float))
    if C.shape[1] != n_x:
        raise CdalConfigError(f"C: expected {n_x} columns, got {C.shape[1]}")
    n_y = C.shape[0]

    W_y = _mat(problem.W_y, (n_y, n_y), "W_y")
    W_u = _mat(problem.W_u, (n_u, n_u), "W_u")
    W_du = _mat(problem.W_du, (n_u, n_u), "W_du")
    _check_psd(W_y, "W_y")
    _check_psd(W_u, "W_u")
    _check_psd(W_du, "W_du", strict=True)

    T = int(problem.T)
    if T < 1:
        raise CdalConfigError(f"T: horizon must be >= 1, got {T}")

    x0 = _vec(problem.x0, n_x, "x0")
    u_prev = _vec(problem.u_prev, n_u, "u_prev")
    if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(u_prev))):
        raise CdalConfigError("x0 / u_prev must be finite")
    r = _vec(problem.r, n_y, "r")
    u_ref = u_prev.copy() if problem.u_ref is None else _vec(problem.u_ref, n_u, "u_ref")
    e = _vec(problem.e, n_x, "e")

    x_min = _vec(problem.x_min, n_x, "x_min", -np.inf)
    x_max = _vec(problem.x_max, n_x, "x_max", np.inf)
    u_min = _vec(problem.u_min, n_u, "u_min", -np.inf)
    u_max = _vec(problem.u_max, n_u, "u_max", np.inf)
    du_min = _vec(problem.du_min, n_u, "du_min", -np.inf)
    du_max = _vec(problem.du_max, n_u, "du_max", np.inf)
    y_min = _vec(problem.y_min, n_y, "y_min", -np.inf)
    y_max = _vec(problem.y_max, n_y, "y_max", np.inf)
    for lo, hi, name in (
        (x_min, x_max, "x bounds"), (u_min, u_max, "u bounds"),
        (du_min, du_max, "du bounds"), (y_min, y_max, "y bounds"),
    ):
        _check_box(lo, hi, name)
    x_min, x_max = _fold_output_bounds(C, y_min, y_max, x_min, x_max)
    _check_box(x_min, x_max, "x bounds (after folding y bounds)")

    A_hat = np.block([[A, B], [np.zeros((n_u, n_x)), np.eye(n_u)]])
    B_hat = np.vstack([B, np.eye(n_u)])
    C_hat = block_diag(C, np.eye(n_u))
    W_hat = block_diag(W_y, W_u)
    Q = C_hat.T @ W_hat @ C_hat
    Q = 0.5 * (Q + Q.T)
    q_lin = -C_hat.T @ W_hat @ np.concatenate([r, u_ref])

    return AugmentedModel(
        A_hat=A_hat,
        B_hat=B_hat,
        Q=Q,
        R=W_du.copy(),
        q_lin=q_lin,
        xh_min=np.concatenate([x_min, u_min]),
        xh_max=np.concatenate([x_max, u_max]),
        uh_min=du_min,
        uh_max=du_max,
        e_hat=np.concatenate([e, np.zeros(n_u)]),
        T=T,
        xh0=np.concatenate([x0, u_prev]),
    )


def initial_state_violation(m: AugmentedModel) -> float:
    """Largest box violation of xh0 (informational; xh0 is a parameter, not a variable)."""
    below = np.where(np.isfinite(m.xh_min), m.xh_min - m.xh0, 0.0)
    above = np.where(np.isfinite(m.xh_max), m.xh0 - m.xh_max, 0.0)
    return float(max(0.0, below.max(initial=0.0), above.max(initial=0.0)))


def cold_start(m: AugmentedModel) -> PrimalDualIterate:
    T, n_xh, n_u = m.T, m.n_xh, m.n_u
    X = np.zeros((T + 1, n_xh))
    X[0] = m.xh0
    for t in range(T):
        X[t + 1] = np.clip(m.A_hat @ X[t] + m.e_hat, m.xh_min, m.xh_max)
    U = np.clip(np.zeros((T, n_u)), m.uh_min, m.uh_max)
    return PrimalDualIterate(U=U, X=X, Lambda=np.zeros((T, n_xh)))


def shift_warm_start(
    prev: PrimalDualIterate, new_xh0: np.ndarray, model: Optional[AugmentedModel] = None
) -> PrimalDualIterate:
    """
    Advance the previous solution one step, duplicating the terminal block.
    When `model` is given the shifted entries are re-projected onto its boxes.
    """
    U = np.concatenate([prev.U[1:], prev.U[-1:]], axis=0)
    X = np.concatenate([prev.X[1:2], prev.X[2:], prev.X[-1:]], axis=0)
    X[0] = np.asarray(new_xh0, dtype=float)
    Lambda = np.concatenate([prev.Lambda[1:], prev.Lambda[-1:]], axis=0)
    if model is not None:
        U = np.clip(U, model.uh_min, model.uh_max)
        X[1:] = np.clip(X[1:], model.xh_min, model.xh_max)
    logging.debug(f"Shifted warm start (T={U.shape[0]})")
    return PrimalDualIterate(U=U, X=X, Lambda=Lambda, Lambda_prev=Lambda.copy())


def rollout(m: AugmentedModel, U: np.ndarray) -> np.ndarray:
    """States generated by U from xh0 under the model; no clipping."""
    U = np.asarray(U, dtype=float)
    X = np.zeros((U.shape[0] + 1, m.n_xh))
    X[0] = m.xh0
    for t in range(U.shape[0]):
        X[t + 1] = m.A_hat @ X[t] + m.B_hat @ U[t] + m.e_hat
    return X


def mpc_objective(m: AugmentedModel, U: np.ndarray, X: np.ndarray) -> float:
    """Stage-wise 1/2 z'Hz + h'z (constant reference term dropped)."""
    U = np.asarray(U, dtype=float)
    Xs = np.asarray(X, dtype=float)[1:]
    cost_u = 0.5 * np.einsum("ti,ij,tj->", U, m.R, U)
    cost_x = 0.5 * np.einsum("ti,ij,tj->", Xs, m.Q, Xs) + float(np.sum(Xs @ m.q_lin))
    return float(cost_u + cost_x)
