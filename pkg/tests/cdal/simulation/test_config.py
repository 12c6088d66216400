import json
from pathlib import Path

import numpy as np
import pytest

from src.cdal.plants.afti16 import Afti16Model
from src.cdal.plants.cstr import CstrModel
from src.cdal.plants.linear import LinearPlant
from src.cdal.problem.augment import augment
from src.cdal.problem.base import CdalConfigError
from src.cdal.simulation.closed_loop import simulate_lti
from src.cdal.simulation.config import load_config, parse_config

CONFIGS = Path(__file__).resolve().parents[3] / "configs"


def _linear_cfg():
    return json.loads((CONFIGS / "double_integrator.json").read_text())


def test_bundled_afti16_config():
    cfg = load_config(str(CONFIGS / "afti16.json"))
    assert cfg.plant_name == "afti16"
    assert isinstance(cfg.plant, Afti16Model)
    assert cfg.settings.rho == 1.0
    assert cfg.scenario.length == 60
    np.testing.assert_allclose(cfg.scenario.reference(30), [0.0, 0.0])


def test_bundled_cstr_config():
    cfg = load_config(str(CONFIGS / "cstr.json"))
    assert isinstance(cfg.plant, CstrModel)
    assert cfg.overrides["T"] == 10
    m = augment(cfg.problem())
    np.testing.assert_allclose(m.uh_max, [1.0])


def test_linear_config_with_null_bounds():
    cfg = parse_config(_linear_cfg())
    assert isinstance(cfg.plant, LinearPlant)
    m = augment(cfg.problem())
    # x = (position, velocity), previous input last
    np.testing.assert_allclose(m.xh_min, [-np.inf, -0.5, -1.0])
    np.testing.assert_allclose(m.xh_max, [np.inf, 0.5, 1.0])


def test_linear_config_closed_loop_settles():
    raw = _linear_cfg()
    raw["scenario"]["length"] = 150
    cfg = parse_config(raw)
    log = simulate_lti(cfg.plant, cfg.scenario, cfg.settings, cfg.overrides)
    y = np.array(log.y)[:, 0]
    assert abs(y[-1] - 1.0) < 5e-2
    assert np.max(np.abs(np.array(log.u))) <= 1.0


def test_continuous_linear_model_is_sampled():
    raw = _linear_cfg()
    raw["model"] = {"kind": "continuous", "A": [[0.0, 1.0], [0.0, 0.0]], "B": [[0.0], [1.0]],
                    "C": [[1.0, 0.0]], "Ts": 0.1}
    p = parse_config(raw).problem()
    np.testing.assert_allclose(p.A, [[1.0, 0.1], [0.0, 1.0]], atol=1e-12)
    np.testing.assert_allclose(p.B, [[0.005], [0.1]], atol=1e-12)


@pytest.mark.parametrize("mutate, message", [
    (lambda c: c.update(colour="red"), "unknown key 'colour'"),
    (lambda c: c["solver"].update(alpha=1.0), "unknown key 'solver.alpha'"),
    (lambda c: c["bounds"].update(z_min=[0.0]), "unknown key 'bounds.z_min'"),
    (lambda c: c["scenario"]["references"][0].update(at=3), "unknown key 'scenario.references\\[0\\].at'"),
    (lambda c: c.pop("model"), "model: required"),
    (lambda c: c["weights"].pop("W_du"), "weights.W_du"),
    (lambda c: c.update(plant="boat"), "plant"),
    (lambda c: c.update(horizon=0), "horizon"),
    (lambda c: c["model"].update(kind="hybrid"), "model.kind"),
    (lambda c: c["solver"].update(rho=-1.0), "rho"),
])
def test_config_errors(mutate, message):
    raw = _linear_cfg()
    mutate(raw)
    with pytest.raises(CdalConfigError, match=message):
        parse_config(raw)


def test_builtin_plants_reject_model_block():
    with pytest.raises(CdalConfigError, match="model"):
        parse_config({"plant": "afti16", "model": {"A": [[1.0]]}})


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(CdalConfigError, match="not found"):
        load_config(str(tmp_path / "nope.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    with pytest.raises(CdalConfigError, match="malformed"):
        load_config(str(bad))


def test_unreadable_paths_are_config_errors(tmp_path):
    with pytest.raises(CdalConfigError, match="cannot read"):
        load_config(str(tmp_path))
    latin = tmp_path / "latin1.json"
    latin.write_bytes(b'{"plant": "afti16", "note": "\xe9t\xe9"}')
    with pytest.raises(CdalConfigError, match="UTF-8"):
        load_config(str(latin))
