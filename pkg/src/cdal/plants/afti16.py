from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from src.cdal.constants import (
    AFTI16_A,
    AFTI16_B,
    AFTI16_C,
    AFTI16_HORIZON,
    AFTI16_PITCH_STEP,
    AFTI16_STEPS,
    AFTI16_TS,
    AFTI16_U_LIMIT,
    AFTI16_W_DU,
    AFTI16_W_U,
    AFTI16_W_Y,
    AFTI16_Y_MAX,
    AFTI16_Y_MIN,
)
from src.cdal.problem.base import CdalConfigError, MpcProblem


def zoh_discretize(Ac, Bc, Ts: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Zero-order hold: Ad = exp(Ac Ts), Bd = int_0^Ts exp(Ac s) ds Bc, read off
    the exponential of the augmented matrix [[Ac, Bc], [0, 0]] Ts.
    """
    if not Ts > 0:
        raise CdalConfigError(f"Ts must be positive, got {Ts}")
    Ac = np.atleast_2d(np.asarray(Ac, dtype=float))
    Bc = np.asarray(Bc, dtype=float).reshape(Ac.shape[0], -1)
    n_x, n_u = Bc.shape
    M = np.zeros((n_x + n_u, n_x + n_u))
    M[:n_x, :n_x] = Ac
    M[:n_x, n_x:] = Bc
    Mexp = scipy.linalg.expm(M * Ts)
    if not np.all(np.isfinite(Mexp)):
        raise CdalConfigError("zero-order hold: matrix exponential is not finite")
    return Mexp[:n_x, :n_x], Mexp[:n_x, n_x:]


@dataclass(frozen=True)
class Afti16Model:
    """Linearized AFTI-16 aircraft; y = (angle of attack, pitch angle) in degrees."""
    A: np.ndarray = field(default_factory=lambda: np.array(AFTI16_A))
    B: np.ndarray = field(default_factory=lambda: np.array(AFTI16_B))
    C: np.ndarray = field(default_factory=lambda: np.array(AFTI16_C))
    Ts: float = AFTI16_TS
    u_limit: float = AFTI16_U_LIMIT
    y_min: np.ndarray = field(default_factory=lambda: np.array(AFTI16_Y_MIN))
    y_max: np.ndarray = field(default_factory=lambda: np.array(AFTI16_Y_MAX))
    W_y: np.ndarray = field(default_factory=lambda: np.diag(AFTI16_W_Y))
    W_u: np.ndarray = field(default_factory=lambda: np.diag(AFTI16_W_U))
    W_du: np.ndarray = field(default_factory=lambda: np.diag(AFTI16_W_DU))
    T: int = AFTI16_HORIZON

    def discrete(self) -> tuple[np.ndarray, np.ndarray]:
        return zoh_discretize(self.A, self.B, self.Ts)

    def mpc_problem(self, x0=None, u_prev=None, r=None) -> MpcProblem:
        Ad, Bd = self.discrete()
        n_x, n_u = Bd.shape
        return MpcProblem(
            A=Ad, B=Bd, C=self.C,
            W_y=self.W_y, W_u=self.W_u, W_du=self.W_du,
            T=self.T,
            x0=np.zeros(n_x) if x0 is None else np.asarray(x0, dtype=float),
            u_prev=np.zeros(n_u) if u_prev is None else np.asarray(u_prev, dtype=float),
            r=np.zeros(self.C.shape[0]) if r is None else np.asarray(r, dtype=float),
            u_min=np.full(n_u, -self.u_limit),
            u_max=np.full(n_u, self.u_limit),
            y_min=self.y_min,
            y_max=self.y_max,
        )


def pitch_reference(step: int, length: int = AFTI16_STEPS, amplitude: float = AFTI16_PITCH_STEP) -> np.ndarray:
    """Pitch goes to `amplitude` at t=0 and back to 0 at half the run; angle of attack held at 0."""
    return np.array([0.0, amplitude if step < length // 2 else 0.0])
