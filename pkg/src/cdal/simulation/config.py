from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Union

import numpy as np

from src.cdal.constants import AFTI16_STEPS, CSTR_STEPS
from src.cdal.plants.afti16 import Afti16Model
from src.cdal.plants.cstr import CstrModel, cstr_mpc_problem
from src.cdal.plants.linear import LinearPlant
from src.cdal.problem.base import CdalConfigError, MpcProblem
from src.cdal.simulation.closed_loop import Scenario, afti16_scenario, cstr_scenario
from src.cdal.solver.cdal import SolverSettings

PLANTS = ("linear", "afti16", "cstr")

_TOP_KEYS = {"plant", "model", "weights", "bounds", "horizon", "solver", "scenario"}
_MODEL_KEYS = {"kind", "A", "B", "C", "Ts", "e"}
_WEIGHT_KEYS = {"W_y", "W_u", "W_du"}
_LOWER_BOUNDS = {"x_min", "u_min", "du_min", "y_min"}
_UPPER_BOUNDS = {"x_max", "u_max", "du_max", "y_max"}
_SOLVER_KEYS = {"rho", "N_out", "N_in", "eps_out", "eps_in", "use_acceleration", "use_reverse", "use_precond"}
_SCENARIO_KEYS = {"length", "x0", "u_prev", "u_ref", "references"}
_REFERENCE_KEYS = {"from_step", "r"}


def _reject_unknown(section: dict, allowed: set, path: str) -> None:
    if not isinstance(section, dict):
        raise CdalConfigError(f"{path}: expected an object, got {type(section).__name__}")
    for key in section:
        if key not in allowed:
            raise CdalConfigError(f"unknown key '{path}.{key}'" if path else f"unknown key '{key}'")


def _matrix(value, path: str) -> np.ndarray:
    try:
        arr = np.atleast_2d(np.array(value, dtype=float))
    except (TypeError, ValueError) as e:
        raise CdalConfigError(f"{path}: not a numeric matrix ({e})") from e
    if arr.ndim != 2:
        raise CdalConfigError(f"{path}: expected a 2-D array")
    return arr


def _vector(value, path: str) -> np.ndarray:
    try:
        return np.array(value, dtype=float).reshape(-1)
    except (TypeError, ValueError) as e:
        raise CdalConfigError(f"{path}: not a numeric vector ({e})") from e


def _bound(values, path: str, fill: float) -> np.ndarray:
    if not isinstance(values, list):
        raise CdalConfigError(f"{path}: expected a list of numbers or nulls")
    return np.array([fill if v is None else v for v in values], dtype=float)


@dataclass(frozen=True)
class RunConfig:
    """A parsed config file: the plant, per-problem overrides, solver settings and scenario."""
    plant_name: str
    plant: Union[LinearPlant, Afti16Model, CstrModel]
    scenario: Scenario
    settings: SolverSettings = SolverSettings()
    overrides: dict = field(default_factory=dict)

    def problem(self) -> MpcProblem:
        """The MPC problem at the scenario's initial condition (used by `solve`)."""
        sc = self.scenario
        if self.plant_name == "cstr":
            p = cstr_mpc_problem(sc.x0, float(sc.u_prev[0]), 0.0, float(sc.reference(0)[0]), self.plant)
        else:
            p = self.plant.mpc_problem(sc.x0, sc.u_prev, sc.reference(0))
        if self.overrides:
            p = replace(p, **self.overrides)
        if sc.u_ref is not None:
            p = replace(p, u_ref=np.asarray(sc.u_ref, dtype=float))
        return p

    def with_settings(self, **changes) -> "RunConfig":
        return replace(self, settings=replace(self.settings, **changes))


def _parse_solver(section: Optional[dict]) -> SolverSettings:
    if section is None:
        return SolverSettings()
    _reject_unknown(section, _SOLVER_KEYS, "solver")
    try:
        return SolverSettings(**section)
    except TypeError as e:
        raise CdalConfigError(f"solver: {e}") from e


def _parse_overrides(cfg: dict) -> dict:
    overrides: dict[str, Any] = {}
    weights = cfg.get("weights")
    if weights is not None:
        _reject_unknown(weights, _WEIGHT_KEYS, "weights")
        for key, value in weights.items():
            overrides[key] = _matrix(value, f"weights.{key}")
    bounds = cfg.get("bounds")
    if bounds is not None:
        _reject_unknown(bounds, _LOWER_BOUNDS | _UPPER_BOUNDS, "bounds")
        for key, value in bounds.items():
            fill = -np.inf if key in _LOWER_BOUNDS else np.inf
            overrides[key] = _bound(value, f"bounds.{key}", fill)
    if "horizon" in cfg:
        horizon = cfg["horizon"]
        if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon < 1:
            raise CdalConfigError(f"horizon: expected a positive integer, got {horizon!r}")
        overrides["T"] = horizon
    return overrides


def _parse_linear_plant(cfg: dict) -> LinearPlant:
    model = cfg.get("model")
    if model is None:
        raise CdalConfigError("model: required for plant 'linear'")
    _reject_unknown(model, _MODEL_KEYS, "model")
    for key in ("A", "B", "C"):
        if key not in model:
            raise CdalConfigError(f"model.{key}: required")
    weights = cfg.get("weights") or {}
    for key in _WEIGHT_KEYS:
        if key not in weights:
            raise CdalConfigError(f"weights.{key}: required for plant 'linear'")
    if "horizon" not in cfg:
        raise CdalConfigError("horizon: required for plant 'linear'")
    return LinearPlant(
        A=_matrix(model["A"], "model.A"),
        B=_matrix(model["B"], "model.B"),
        C=_matrix(model["C"], "model.C"),
        W_y=_matrix(weights["W_y"], "weights.W_y"),
        W_u=_matrix(weights["W_u"], "weights.W_u"),
        W_du=_matrix(weights["W_du"], "weights.W_du"),
        T=int(cfg["horizon"]),
        kind=model.get("kind", "discrete"),
        Ts=model.get("Ts"),
        e=None if model.get("e") is None else _vector(model["e"], "model.e"),
    )


def _parse_scenario(section: Optional[dict], default: Optional[Scenario]) -> Scenario:
    if section is None:
        if default is None:
            raise CdalConfigError("scenario: required for plant 'linear'")
        return default
    _reject_unknown(section, _SCENARIO_KEYS, "scenario")

    refs = section.get("references")
    if refs is not None:
        if not isinstance(refs, list):
            raise CdalConfigError("scenario.references: expected a list")
        parsed = []
        for i, ref in enumerate(refs):
            _reject_unknown(ref, _REFERENCE_KEYS, f"scenario.references[{i}]")
            if "r" not in ref:
                raise CdalConfigError(f"scenario.references[{i}].r: required")
            parsed.append((int(ref.get("from_step", 0)), _vector(ref["r"], f"scenario.references[{i}].r")))
        references = tuple(parsed)
    elif default is not None:
        references = default.references
    else:
        raise CdalConfigError("scenario.references: required for plant 'linear'")

    def _pick(key: str) -> Optional[np.ndarray]:
        if key in section:
            return _vector(section[key], f"scenario.{key}")
        return None if default is None else getattr(default, key)

    x0, u_prev = _pick("x0"), _pick("u_prev")
    if x0 is None or u_prev is None:
        raise CdalConfigError("scenario.x0 and scenario.u_prev: required for plant 'linear'")
    length = section.get("length", default.length if default is not None else None)
    if not isinstance(length, int) or isinstance(length, bool):
        raise CdalConfigError(f"scenario.length: expected an integer, got {length!r}")
    return Scenario(
        length=length,
        x0=x0,
        u_prev=u_prev,
        references=references,
        u_ref=_pick("u_ref") if "u_ref" in section else None,
    )


def _scenario_length(cfg: dict, default: int) -> int:
    section = cfg.get("scenario")
    length = section.get("length", default) if isinstance(section, dict) else default
    if not isinstance(length, int) or isinstance(length, bool) or length < 1:
        raise CdalConfigError(f"scenario.length: expected a positive integer, got {length!r}")
    return length


def parse_config(cfg: dict) -> RunConfig:
    _reject_unknown(cfg, _TOP_KEYS, "")
    plant_name = cfg.get("plant", "linear")
    if plant_name not in PLANTS:
        raise CdalConfigError(f"plant: expected one of {PLANTS}, got {plant_name!r}")

    if plant_name == "linear":
        plant = _parse_linear_plant(cfg)
        default_scenario = None
    elif plant_name == "afti16":
        if "model" in cfg:
            raise CdalConfigError("model: not allowed for plant 'afti16' (the plant supplies it)")
        plant = Afti16Model()
        default_scenario = afti16_scenario(_scenario_length(cfg, AFTI16_STEPS))
    else:
        if "model" in cfg:
            raise CdalConfigError("model: not allowed for plant 'cstr' (the plant supplies it)")
        plant = CstrModel()
        default_scenario = cstr_scenario(plant, _scenario_length(cfg, CSTR_STEPS))

    overrides = _parse_overrides(cfg)
    if plant_name == "linear":
        # weights and horizon already live on the plant
        overrides = {k: v for k, v in overrides.items() if k not in _WEIGHT_KEYS and k != "T"}

    return RunConfig(
        plant_name=plant_name,
        plant=plant,
        scenario=_parse_scenario(cfg.get("scenario"), default_scenario),
        settings=_parse_solver(cfg.get("solver")),
        overrides=overrides,
    )


def load_config(path: str) -> RunConfig:
    if not os.path.exists(path):
        raise CdalConfigError(f"config file not found: {path}")
    try:
        with open(path, encoding="utf-8") as f:
            cfg = json.load(f)
    except json.JSONDecodeError as e:
        raise CdalConfigError(f"{path}: malformed JSON ({e})") from e
    except UnicodeDecodeError as e:
        raise CdalConfigError(f"{path}: not UTF-8 text ({e.reason} at byte {e.start})") from e
    except OSError as e:
        raise CdalConfigError(f"{path}: cannot read config ({e.strerror or e})") from e
    return parse_config(cfg)
