# cdal/src/cdal/problem/base.py
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np


# Typed errors so the CLI can map causes to exit codes
class CdalConfigError(ValueError): pass        # bad dimensions / weights / bounds / config
class ScalingError(ValueError): pass           # unscalable preconditioner coordinate


class SolverDivergenceError(RuntimeError):
    def __init__(self, message: str, outer_iter: int, step: Optional[int] = None):
        super().__init__(message)
        self.outer_iter = outer_iter
        self.step = step


class OracleFailureError(RuntimeError): pass   # reference QP not solved


class SimulationError(RuntimeError):
    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


def _vec(value, n: int, name: str, fill: float = 0.0) -> np.ndarray:
    if value is None:
        return np.full(n, fill, dtype=float)
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.size != n:
        raise CdalConfigError(f"{name}: expected length {n}, got {arr.size}")
    return arr


def _mat(value, shape: tuple[int, int], name: str) -> np.ndarray:
    arr = np.atleast_2d(np.array(value, dtype=float))
    if arr.shape != shape:
        raise CdalConfigError(f"{name}: expected shape {shape}, got {arr.shape}")
    return arr


def _check_box(lo: np.ndarray, hi: np.ndarray, name: str) -> None:
    bad = np.where(lo > hi)[0]
    if bad.size:
        raise CdalConfigError(f"{name}: lower bound exceeds upper bound at index {int(bad[0])}")


def _check_psd(W: np.ndarray, name: str, strict: bool = False) -> None:
    if not np.allclose(W, W.T, atol=1e-12, rtol=0.0):
        raise CdalConfigError(f"{name} must be symmetric")
    eig_min = float(np.linalg.eigvalsh(W).min()) if W.size else 0.0
    if strict and eig_min <= 0.0:
        raise CdalConfigError(f"{name} must be positive definite (min eigenvalue {eig_min:.3g})")
    if not strict and eig_min < -1e-12:
        raise CdalConfigError(f"{name} must be positive semidefinite (min eigenvalue {eig_min:.3g})")


@dataclass(frozen=True)
class MpcProblem:
    """
    Tracking MPC in input-increment form.

    Output bounds (y_min / y_max) are only accepted when every row of C is a
    unit vector; they are folded into the state box by `augment`.
    Missing bounds default to +-inf. `u_ref` defaults to `u_prev`.
    """
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    W_y: np.ndarray
    W_u: np.ndarray
    W_du: np.ndarray
    T: int
    x0: np.ndarray
    u_prev: np.ndarray
    r: np.ndarray
    u_ref: Optional[np.ndarray] = None
    x_min: Optional[np.ndarray] = None
    x_max: Optional[np.ndarray] = None
    u_min: Optional[np.ndarray] = None
    u_max: Optional[np.ndarray] = None
    du_min: Optional[np.ndarray] = None
    du_max: Optional[np.ndarray] = None
    y_min: Optional[np.ndarray] = None
    y_max: Optional[np.ndarray] = None
    e: Optional[np.ndarray] = None

    @property
    def n_x(self) -> int:
        return int(np.atleast_2d(self.A).shape[0])

    @property
    def n_u(self) -> int:
        return int(np.atleast_2d(self.B).shape[1])

    @property
    def n_y(self) -> int:
        return int(np.atleast_2d(self.C).shape[0])

    def with_state(self, x0, u_prev, r=None, **overrides) -> "MpcProblem":
        """Same controller, new measurement (and optionally new reference / model)."""
        kwargs = dict(x0=np.asarray(x0, dtype=float), u_prev=np.asarray(u_prev, dtype=float))
        if r is not None:
            kwargs["r"] = np.asarray(r, dtype=float)
        kwargs.update(overrides)
        return replace(self, **kwargs)


@dataclass(frozen=True)
class AugmentedModel:
    A_hat: np.ndarray
    B_hat: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    q_lin: np.ndarray
    xh_min: np.ndarray
    xh_max: np.ndarray
    uh_min: np.ndarray
    uh_max: np.ndarray
    e_hat: np.ndarray
    T: int
    xh0: np.ndarray

    @property
    def n_xh(self) -> int:
        return int(self.A_hat.shape[0])

    @property
    def n_u(self) -> int:
        return int(self.B_hat.shape[1])

    @property
    def n_z(self) -> int:
        return self.T * (self.n_xh + self.n_u)


@dataclass
class PrimalDualIterate:
    """
    U: (T, n_u) increments, X: (T+1, n_xh) augmented states with X[0] = xh0,
    Lambda / Lambda_prev: (T, n_xh) scaled multipliers.
    """
    U: np.ndarray
    X: np.ndarray
    Lambda: np.ndarray
    Lambda_prev: np.ndarray = field(default=None)

    def __post_init__(self):
        self.U = np.ascontiguousarray(self.U, dtype=float)
        self.X = np.ascontiguousarray(self.X, dtype=float)
        self.Lambda = np.ascontiguousarray(self.Lambda, dtype=float)
        if self.Lambda_prev is None:
            self.Lambda_prev = self.Lambda.copy()
        self.Lambda_prev = np.ascontiguousarray(self.Lambda_prev, dtype=float)
        T = self.U.shape[0]
        if self.X.shape[0] != T + 1 or self.Lambda.shape[0] != T or self.Lambda_prev.shape != self.Lambda.shape:
            raise CdalConfigError(
                f"Inconsistent iterate lengths: |U|={T}, |X|={self.X.shape[0]}, |Lambda|={self.Lambda.shape[0]}"
            )

    @property
    def T(self) -> int:
        return int(self.U.shape[0])

    def copy(self) -> "PrimalDualIterate":
        return PrimalDualIterate(
            U=self.U.copy(), X=self.X.copy(), Lambda=self.Lambda.copy(), Lambda_prev=self.Lambda_prev.copy()
        )
