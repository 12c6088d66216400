import numpy as np
import pytest

from src.cdal.constants import AFTI16_A
from src.cdal.plants.afti16 import Afti16Model, pitch_reference, zoh_discretize
from src.cdal.problem.augment import augment
from src.cdal.problem.base import CdalConfigError


def test_zoh_of_zero_dynamics():
    Bc = np.array([[1.0, 2.0], [3.0, 4.0]])
    Ad, Bd = zoh_discretize(np.zeros((2, 2)), Bc, 0.1)
    np.testing.assert_allclose(Ad, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(Bd, 0.1 * Bc, rtol=1e-12)


def test_zoh_scalar_closed_form():
    a, b, Ts = -2.0, 3.0, 0.1
    Ad, Bd = zoh_discretize([[a]], [[b]], Ts)
    assert Ad[0, 0] == pytest.approx(np.exp(a * Ts), rel=1e-12)
    assert Bd[0, 0] == pytest.approx((np.exp(a * Ts) - 1.0) / a * b, rel=1e-12)


def test_zoh_semigroup_on_afti16():
    model = Afti16Model()
    Ad1, _ = zoh_discretize(model.A, model.B, model.Ts)
    Ad2, _ = zoh_discretize(model.A, model.B, 2 * model.Ts)
    np.testing.assert_allclose(Ad2, Ad1 @ Ad1, rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("Ts", [0.0, -0.05])
def test_zoh_rejects_non_positive_sampling_time(Ts):
    with pytest.raises(CdalConfigError, match="Ts"):
        zoh_discretize([[1.0]], [[1.0]], Ts)


def test_afti16_is_open_loop_unstable():
    assert np.max(np.linalg.eigvals(np.array(AFTI16_A)).real) > 0.0


def test_afti16_problem_bounds_and_weights():
    m = augment(Afti16Model().mpc_problem())
    # states (4) then previous inputs (2); y = (x2, x4)
    np.testing.assert_allclose(m.xh_min, [-np.inf, -0.5, -np.inf, -100.0, -25.0, -25.0])
    np.testing.assert_allclose(m.xh_max, [np.inf, 0.5, np.inf, 100.0, 25.0, 25.0])
    assert np.all(np.isinf(m.uh_min)) and np.all(np.isinf(m.uh_max))
    np.testing.assert_allclose(np.diag(m.Q), [0.0, 10.0, 0.0, 10.0, 0.0, 0.0])
    np.testing.assert_allclose(m.R, np.diag([0.1, 0.1]))
    assert m.T == 5


def test_pitch_reference_steps_up_then_back():
    assert list(pitch_reference(0, 60)) == [0.0, 10.0]
    assert list(pitch_reference(29, 60)) == [0.0, 10.0]
    assert list(pitch_reference(30, 60)) == [0.0, 0.0]
