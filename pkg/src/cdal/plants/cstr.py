from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from src.cdal.constants import (
    CSTR_CA_IN,
    CSTR_DU_LIMIT,
    CSTR_EAR,
    CSTR_HORIZON,
    CSTR_K0,
    CSTR_RK4_SUBSTEPS,
    CSTR_TI_AMPLITUDE,
    CSTR_TI_FREQUENCY,
    CSTR_TI_NOMINAL,
    CSTR_TS,
    CSTR_W_DU,
    CSTR_W_U,
    CSTR_W_Y,
    CSTR_X0,
)
from src.cdal.problem.base import CdalConfigError, MpcProblem


@dataclass(frozen=True)
class CstrModel:
    """
    Jacketed CSTR, x = (C_A [kgmol/m^3], T [K]), u = Tc [K], time in minutes.

    Rate coefficient kappa(T) = k0 * exp(EaR / T) with EaR < 0 (standard
    Arrhenius form; ~0.164 /min at 311 K).
    """
    k0: float = CSTR_K0
    EaR: float = CSTR_EAR
    C_Ai: float = CSTR_CA_IN
    Ti_nominal: float = CSTR_TI_NOMINAL
    Ti_amplitude: float = CSTR_TI_AMPLITUDE
    Ti_frequency: float = CSTR_TI_FREQUENCY
    Ts: float = CSTR_TS
    CA0: float = CSTR_X0[0]
    T0: float = CSTR_X0[1]

    def Ti(self, t: float) -> float:
        return self.Ti_nominal + self.Ti_amplitude * math.sin(self.Ti_frequency * t)

    def kappa(self, T: float) -> float:
        return self.k0 * math.exp(self.EaR / T)

    @property
    def x0(self) -> np.ndarray:
        return np.array([self.CA0, self.T0])

    def steady_coolant(self, x, Ti: float) -> float:
        """Tc that makes dT/dt = 0 at x."""
        CA, T = float(x[0]), float(x[1])
        return (1.3 * T - Ti - 11.92 * self.kappa(T) * CA) / 0.3


def cstr_derivatives(x, u: float, Ti: float, model: CstrModel = CstrModel()) -> np.ndarray:
    CA, T = float(x[0]), float(x[1])
    if not T > 0:
        raise CdalConfigError(f"CSTR temperature must be positive, got {T}")
    rate = model.kappa(T) * CA
    return np.array([
        model.C_Ai - CA - rate,
        Ti + 0.3 * float(u) - 1.3 * T + 11.92 * rate,
    ])


def linearize_cstr(x, u: float, Ti: float, model: CstrModel = CstrModel()) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic Jacobians at (x, u); ec = f(x, u) - Ac x - Bc u."""
    x = np.asarray(x, dtype=float)
    CA, T = float(x[0]), float(x[1])
    if not T > 0:
        raise CdalConfigError(f"CSTR temperature must be positive, got {T}")
    kap = model.kappa(T)
    dkap_dT = -kap * model.EaR / (T * T)
    Ac = np.array([
        [-1.0 - kap, -dkap_dT * CA],
        [11.92 * kap, -1.3 + 11.92 * dkap_dT * CA],
    ])
    Bc = np.array([[0.0], [0.3]])
    ec = cstr_derivatives(x, u, Ti, model) - Ac @ x - Bc[:, 0] * float(u)
    return Ac, Bc, ec


def euler_discretize(Ac, Bc, ec, Ts: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    Ac = np.atleast_2d(np.asarray(Ac, dtype=float))
    return (
        np.eye(Ac.shape[0]) + Ts * Ac,
        Ts * np.asarray(Bc, dtype=float),
        Ts * np.asarray(ec, dtype=float),
    )


def rk4_propagate(x, u: float, t0: float, model: CstrModel = CstrModel(),
                  substeps: int = CSTR_RK4_SUBSTEPS) -> np.ndarray:
    """Nonlinear plant over one sampling period, fixed-step RK4; Ti follows the clock."""
    h = model.Ts / substeps
    x = np.asarray(x, dtype=float).copy()
    t = t0
    for _ in range(substeps):
        k1 = cstr_derivatives(x, u, model.Ti(t), model)
        k2 = cstr_derivatives(x + 0.5 * h * k1, u, model.Ti(t + 0.5 * h), model)
        k3 = cstr_derivatives(x + 0.5 * h * k2, u, model.Ti(t + 0.5 * h), model)
        k4 = cstr_derivatives(x + h * k3, u, model.Ti(t + h), model)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    if np.any(x <= 0):
        logging.warning(f"[CSTR] Non-positive state {x} at t={t:.2f} min")
    return x


def cstr_mpc_problem(x, u_prev: float, t: float, r: float, model: CstrModel = CstrModel(),
                     T: int = CSTR_HORIZON, du_limit: float = CSTR_DU_LIMIT) -> MpcProblem:
    """LPV prediction model: linearize at (x_t, u_{t-1}, Ti(t)) and Euler-discretize."""
    Ac, Bc, ec = linearize_cstr(x, u_prev, model.Ti(t), model)
    Ad, Bd, ed = euler_discretize(Ac, Bc, ec, model.Ts)
    return MpcProblem(
        A=Ad, B=Bd, C=np.array([[1.0, 0.0]]),
        W_y=np.array([[CSTR_W_Y]]), W_u=np.array([[CSTR_W_U]]), W_du=np.array([[CSTR_W_DU]]),
        T=T,
        x0=np.asarray(x, dtype=float),
        u_prev=np.array([float(u_prev)]),
        r=np.array([float(r)]),
        du_min=np.array([-du_limit]),
        du_max=np.array([du_limit]),
        e=ed,
    )
