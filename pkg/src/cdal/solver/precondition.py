from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from src.cdal.constants import SCALING_CEIL, SCALING_FLOOR
from src.cdal.problem.base import AugmentedModel, CdalConfigError, ScalingError


@dataclass(frozen=True)
class DiagonalScaling:
    E_diag: np.ndarray
    E_inv_diag: np.ndarray

    @classmethod
    def identity(cls, n: int) -> "DiagonalScaling":
        return cls(E_diag=np.ones(n), E_inv_diag=np.ones(n))


def compute_scaling(m: AugmentedModel) -> DiagonalScaling:
    """
    Heuristic state scaling E_ii = sqrt(Q_ii + |A_hat[:, i]|^2).

    Entries are clamped to [SCALING_FLOOR, SCALING_CEIL] with a warning;
    an exactly-zero entry cannot be scaled and raises.
    """
    col_norm_sq = np.sum(m.A_hat ** 2, axis=0)
    raw = np.diag(m.Q) + col_norm_sq
    for i, v in enumerate(raw):
        if not v > 0.0:
            raise ScalingError(f"unscalable coordinate {i}: Q[{i},{i}] + |A_hat[:, {i}]|^2 = {v}")
    E = np.sqrt(raw)
    clamped = np.clip(E, SCALING_FLOOR, SCALING_CEIL)
    if np.any(clamped != E):
        logging.warning(f"[Scaling] Clamped {int(np.sum(clamped != E))} preconditioner entries to "
                        f"[{SCALING_FLOOR:g}, {SCALING_CEIL:g}]")
    return DiagonalScaling(E_diag=clamped, E_inv_diag=1.0 / clamped)


def apply(m: AugmentedModel, s: DiagonalScaling) -> AugmentedModel:
    """
    Change of variables xbar = E xh:
      A_bar = E A_hat E^-1, B_bar = E B_hat, e_bar = E e_hat,
      Q_bar = E^-1 Q E^-1, q_bar = E^-1 q_lin, state box and xh0 multiplied by E.
    Increment bounds are untouched.
    """
    E, Ei = s.E_diag, s.E_inv_diag
    if E.size != m.n_xh:
        raise CdalConfigError(f"scaling: expected {m.n_xh} entries, got {E.size}")
    return replace(
        m,
        A_hat=(E[:, None] * m.A_hat) * Ei[None, :],
        B_hat=E[:, None] * m.B_hat,
        Q=(Ei[:, None] * m.Q) * Ei[None, :],
        q_lin=m.q_lin * Ei,
        xh_min=m.xh_min * E,
        xh_max=m.xh_max * E,
        e_hat=m.e_hat * E,
        xh0=m.xh0 * E,
    )


def scale_states(X: np.ndarray, s: DiagonalScaling) -> np.ndarray:
    return np.asarray(X, dtype=float) * s.E_diag


def unscale_states(X_bar: np.ndarray, s: DiagonalScaling) -> np.ndarray:
    return np.asarray(X_bar, dtype=float) * s.E_inv_diag


# Multipliers of the scaled equality rows: lambda_bar = E^-1 lambda
def dual_to_scaled(Lambda: np.ndarray, s: DiagonalScaling) -> np.ndarray:
    return np.asarray(Lambda, dtype=float) * s.E_inv_diag


def dual_from_scaled(Lambda_bar: np.ndarray, s: DiagonalScaling) -> np.ndarray:
    return np.asarray(Lambda_bar, dtype=float) * s.E_diag
