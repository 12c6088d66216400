"""
Dense QP  min 1/2 z'Hz + h'z  s.t.  Gz = g,  lo <= z <= hi  built explicitly
from an AugmentedModel, plus an independent reference solver (OSQP).

Test infrastructure only: nothing in the solve path imports this module.
z is ordered (u_0, x_1, u_1, x_2, ..., u_{T-1}, x_T).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import osqp
from scipy import sparse
from scipy.linalg import block_diag

from src.cdal.problem.base import AugmentedModel, OracleFailureError


@dataclass(frozen=True)
class ExplicitQp:
    H: np.ndarray
    h: np.ndarray
    G: np.ndarray
    g: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    @property
    def n_z(self) -> int:
        return int(self.H.shape[0])

    def objective(self, z: np.ndarray) -> float:
        return float(0.5 * z @ self.H @ z + self.h @ z)

    def residual(self, z: np.ndarray) -> np.ndarray:
        return self.G @ z - self.g


def stack_z(U: np.ndarray, X: np.ndarray) -> np.ndarray:
    U, X = np.asarray(U, dtype=float), np.asarray(X, dtype=float)
    return np.concatenate([np.concatenate([U[t], X[t + 1]]) for t in range(U.shape[0])])


def unstack_z(z: np.ndarray, T: int, n_u: int, n_xh: int) -> tuple[np.ndarray, np.ndarray]:
    """Returns (U, X[1:]) from a stacked z."""
    blocks = np.asarray(z, dtype=float).reshape(T, n_u + n_xh)
    return blocks[:, :n_u].copy(), blocks[:, n_u:].copy()


def build_qp(m: AugmentedModel) -> ExplicitQp:
    T, n_u, n_xh = m.T, m.n_u, m.n_xh
    nb = n_u + n_xh
    n_z = T * nb

    H = block_diag(*([m.R, m.Q] * T))
    h = np.zeros(n_z)
    G = np.zeros((T * n_xh, n_z))
    g = np.zeros(T * n_xh)
    lo = np.zeros(n_z)
    hi = np.zeros(n_z)

    for t in range(T):
        u_sl = slice(t * nb, t * nb + n_u)
        x_sl = slice(t * nb + n_u, (t + 1) * nb)
        rows = slice(t * n_xh, (t + 1) * n_xh)

        h[x_sl] = m.q_lin
        lo[u_sl], hi[u_sl] = m.uh_min, m.uh_max
        lo[x_sl], hi[x_sl] = m.xh_min, m.xh_max

        G[rows, u_sl] = m.B_hat
        G[rows, x_sl] = -np.eye(n_xh)
        if t == 0:
            g[rows] = -m.A_hat @ m.xh0 - m.e_hat
        else:
            G[rows, (t - 1) * nb + n_u:t * nb] = m.A_hat
            g[rows] = -m.e_hat

    return ExplicitQp(H=H, h=h, G=G, g=g, lo=lo, hi=hi)


def eval_F_rho(qp: ExplicitQp, z: np.ndarray, Lambda_hat: np.ndarray, rho: float) -> float:
    """F_rho(z; Lambda_hat) = 1/2 z'(H/rho + G'G)z + (h/rho + G'Lambda_hat - G'g)'z."""
    z = np.asarray(z, dtype=float)
    lam = np.asarray(Lambda_hat, dtype=float).reshape(-1)
    Gz = qp.G @ z
    quad = 0.5 * (z @ qp.H @ z) / rho + 0.5 * (Gz @ Gz)
    lin = (qp.h / rho) @ z + lam @ Gz - qp.g @ Gz
    return float(quad + lin)


def grad_F_rho(qp: ExplicitQp, z: np.ndarray, Lambda_hat: np.ndarray, rho: float) -> np.ndarray:
    lam = np.asarray(Lambda_hat, dtype=float).reshape(-1)
    return qp.H @ z / rho + qp.G.T @ (qp.G @ z) + qp.h / rho + qp.G.T @ lam - qp.G.T @ qp.g


def solve_qp_reference(qp: ExplicitQp, rho: float = 0.1, tol: float = 1e-9,
                       max_iter: int = 400000) -> np.ndarray:
    """Ground-truth minimizer via OSQP with solution polishing."""
    n_z = qp.n_z
    A = sparse.vstack([sparse.csc_matrix(qp.G), sparse.eye(n_z, format="csc")], format="csc")
    l = np.concatenate([qp.g, qp.lo])
    u = np.concatenate([qp.g, qp.hi])

    solver = osqp.OSQP()
    solver.setup(
        P=sparse.triu(sparse.csc_matrix(qp.H), format="csc"),
        q=qp.h,
        A=A,
        l=l,
        u=u,
        rho=rho,
        eps_abs=tol,
        eps_rel=tol,
        max_iter=max_iter,
        polish=True,
        verbose=False,
    )
    res = solver.solve()
    status = str(res.info.status)
    if status != "solved" or res.x is None:
        raise OracleFailureError(f"Reference QP not solved: status={status!r} after {res.info.iter} iterations")

    z = np.clip(np.asarray(res.x, dtype=float), qp.lo, qp.hi)
    eq_res = float(np.max(np.abs(qp.residual(z)), initial=0.0))
    scale = 1.0 + max(float(np.max(np.abs(qp.g), initial=0.0)), float(np.max(np.abs(z), initial=0.0)))
    if eq_res > 1e-8 * scale:
        raise OracleFailureError(f"Reference QP residual too large: {eq_res:.3e}")
    logging.debug(f"[Oracle] solved n_z={n_z} in {res.info.iter} iterations (polish={res.info.status_polish})")
    return z
