from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.cdal.plants.afti16 import zoh_discretize
from src.cdal.problem.base import CdalConfigError, MpcProblem


@dataclass(frozen=True)
class LinearPlant:
    """
    User-supplied LTI plant from a config file.

    kind="continuous" models are sampled with a zero-order hold; the affine
    offset e is held like a constant extra input.
    """
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    W_y: np.ndarray
    W_u: np.ndarray
    W_du: np.ndarray
    T: int
    kind: str = "discrete"
    Ts: Optional[float] = None
    e: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("discrete", "continuous"):
            raise CdalConfigError(f"model.kind must be 'discrete' or 'continuous', got {self.kind!r}")
        if self.kind == "continuous" and self.Ts is None:
            raise CdalConfigError("model.Ts is required for a continuous model")

    def discrete(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float).reshape(A.shape[0], -1)
        e = np.zeros(A.shape[0]) if self.e is None else np.asarray(self.e, dtype=float).reshape(-1)
        if e.size != A.shape[0]:
            raise CdalConfigError(f"model.e: expected length {A.shape[0]}, got {e.size}")
        if self.kind == "discrete":
            return A, B, e
        Ad, Bde = zoh_discretize(A, np.column_stack([B, e]), self.Ts)
        return Ad, Bde[:, :-1], Bde[:, -1]

    def mpc_problem(self, x0=None, u_prev=None, r=None) -> MpcProblem:
        Ad, Bd, ed = self.discrete()
        n_x, n_u = Bd.shape
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        return MpcProblem(
            A=Ad, B=Bd, C=C,
            W_y=self.W_y, W_u=self.W_u, W_du=self.W_du,
            T=self.T,
            x0=np.zeros(n_x) if x0 is None else np.asarray(x0, dtype=float),
            u_prev=np.zeros(n_u) if u_prev is None else np.asarray(u_prev, dtype=float),
            r=np.zeros(C.shape[0]) if r is None else np.asarray(r, dtype=float),
            e=ed,
        )
