import math

import numpy as np
import pytest

from src.cdal.constants import (
    ABLATION_SCHEMES,
    CHECK_EPS_IN,
    CHECK_EPS_OUT,
    CHECK_OBJ_FLOOR_RTOL,
    CHECK_OBJ_RTOL,
    CHECK_RHO,
    CHECK_U_TOL,
)
from src.cdal.oracle.explicit_qp import build_qp, solve_qp_reference, stack_z, unstack_z
from src.cdal.problem.augment import augment, cold_start, mpc_objective, rollout
from src.cdal.problem.base import CdalConfigError, PrimalDualIterate, SolverDivergenceError
from src.cdal.solver import cdal as cdal_module
from src.cdal.solver.cdal import SolverSettings, _check_finite, dual_refresh, nesterov_alpha, solve
from src.cdal.solver.precondition import compute_scaling
from tests.cdal.helpers import random_model, scalar_problem

ACCEPTANCE = SolverSettings(rho=0.1, eps_out=1e-8, eps_in=1e-10)
TIGHT = SolverSettings(rho=CHECK_RHO, eps_out=CHECK_EPS_OUT, eps_in=CHECK_EPS_IN)


def test_nesterov_sequence():
    alpha = 1.0
    for k in range(1, 101):
        assert alpha >= (k + 1) / 2 - 1e-12
        expected = (1.0 + math.sqrt(1.0 + 4.0 * alpha ** 2)) / 2.0
        nxt = nesterov_alpha(alpha)
        assert nxt == pytest.approx(expected, abs=1e-12)
        alpha = nxt
    assert nesterov_alpha(1.0) == pytest.approx((1.0 + math.sqrt(5.0)) / 2.0)


@pytest.mark.parametrize("name", list(ABLATION_SCHEMES))
def test_settings_scheme_names(name):
    accel, reverse, precond = ABLATION_SCHEMES[name]
    s = SolverSettings(use_acceleration=accel, use_reverse=reverse, use_precond=precond)
    assert s.scheme == name


@pytest.mark.parametrize("kwargs", [
    {"rho": 0.0}, {"rho": float("inf")}, {"eps_out": 0.0}, {"eps_in": -1.0}, {"N_out": 0}, {"N_in": 0},
])
def test_settings_validation(kwargs):
    with pytest.raises(CdalConfigError):
        SolverSettings(**kwargs)


@pytest.mark.parametrize("seed", range(5))
def test_dual_refresh_is_equality_residual(seed):
    m = random_model(seed)
    rng = np.random.default_rng(seed)
    it = PrimalDualIterate(
        U=rng.standard_normal((m.T, m.n_u)),
        X=np.vstack([m.xh0, rng.standard_normal((m.T, m.n_xh))]),
        Lambda=rng.standard_normal((m.T, m.n_xh)),
    )
    qp = build_qp(m)
    expected = it.Lambda.reshape(-1) + qp.residual(stack_z(it.U, it.X))
    np.testing.assert_allclose(dual_refresh(m, it).reshape(-1), expected, atol=1e-12)


def test_unconstrained_solution_matches_kkt_system():
    m = augment(scalar_problem(
        A=[[1.0, 0.1], [0.0, 1.0]], B=[[0.0], [0.1]], C=[[1.0, 0.0]],
        x0=[0.0, 0.0], u_prev=[0.0], r=[1.0], T=4, W_du=[[0.5]],
    ))
    qp = build_qp(m)
    n, p = qp.n_z, qp.G.shape[0]
    K = np.block([[qp.H, qp.G.T], [qp.G, np.zeros((p, p))]])
    z_kkt = np.linalg.solve(K, np.concatenate([-qp.h, qp.g]))[:n]
    U_kkt, _ = unstack_z(z_kkt, m.T, m.n_u, m.n_xh)

    it, report = solve(m, None, TIGHT)
    assert report.converged
    np.testing.assert_allclose(it.U, U_kkt, atol=1e-4)
    assert report.objective == pytest.approx(qp.objective(z_kkt), rel=1e-5, abs=1e-8)


@pytest.mark.parametrize("seed", range(200))
def test_solve_matches_reference_qp(seed):
    m = random_model(seed)
    it, report = solve(m, None, TIGHT)
    qp = build_qp(m)
    z_ref = solve_qp_reference(qp)
    U_ref, _ = unstack_z(z_ref, m.T, m.n_u, m.n_xh)
    assert np.max(np.abs(it.U - U_ref)) <= CHECK_U_TOL
    obj_ref = qp.objective(z_ref)
    assert abs(report.objective - obj_ref) / max(1.0, abs(obj_ref)) <= CHECK_OBJ_RTOL


@pytest.mark.parametrize("seed", range(50))
def test_objective_does_not_undercut_reference_optimum(seed):
    m = random_model(seed)
    _, report = solve(m, None, TIGHT)
    qp = build_qp(m)
    obj_ref = qp.objective(solve_qp_reference(qp))
    scale = max(1.0, abs(obj_ref))
    assert report.objective >= obj_ref - CHECK_OBJ_FLOOR_RTOL * scale
    assert report.objective <= obj_ref + 1e-3 * scale


@pytest.mark.parametrize("seed", range(200))
def test_converged_solution_is_dynamics_feasible(seed):
    m = random_model(seed)
    it, report = solve(m, None, ACCEPTANCE)
    assert report.converged
    assert report.dual_gap <= ACCEPTANCE.eps_out
    residual = build_qp(m).residual(stack_z(it.U, it.X))
    assert np.max(np.abs(residual)) <= math.sqrt(ACCEPTANCE.eps_out) + 1e-10


def test_reported_objective_uses_the_state_rollout():
    m = random_model(3)
    it, report = solve(m, None, ACCEPTANCE)
    assert report.objective == mpc_objective(m, it.U, rollout(m, it.U))


@pytest.mark.parametrize("seed", range(10))
def test_solution_respects_boxes_exactly(seed):
    m = random_model(seed)
    it, _ = solve(m, None, SolverSettings(rho=1.0))
    assert np.all(it.U >= m.uh_min) and np.all(it.U <= m.uh_max)
    assert np.all(it.X[1:] >= m.xh_min) and np.all(it.X[1:] <= m.xh_max)
    np.testing.assert_array_equal(it.X[0], m.xh0)


def test_solve_does_not_modify_warm_start():
    m = random_model(11)
    warm = cold_start(m)
    before = warm.copy()
    solve(m, warm, TIGHT)
    np.testing.assert_array_equal(warm.U, before.U)
    np.testing.assert_array_equal(warm.X, before.X)


def test_warm_start_from_solution_needs_few_outer_iterations():
    m = random_model(12)
    it, cold = solve(m, None, TIGHT)
    _, warm = solve(m, it, TIGHT)
    assert warm.converged
    assert warm.outer_iters <= cold.outer_iters


def test_warm_start_at_fixed_point_stops_after_one_pass():
    # integrator resting on its reference: zero cost, zero residual
    m = augment(scalar_problem(T=4, x0=[1.0], r=[1.0]))
    it, first = solve(m, None, ACCEPTANCE)
    again_it, again = solve(m, it, ACCEPTANCE)
    assert first.converged and again.converged
    assert again.outer_iters == 1
    assert again.inner_iters_total == 1
    np.testing.assert_allclose(again_it.U, it.U, atol=1e-12)
    np.testing.assert_allclose(again_it.X, it.X, atol=1e-12)


@pytest.mark.parametrize("precond", [True, False])
def test_repeated_solves_are_bitwise_identical(precond):
    m = random_model(21)
    s = SolverSettings(rho=0.1, use_precond=precond)
    it_a, rep_a = solve(m, cold_start(m), s)
    it_b, rep_b = solve(m, cold_start(m), s)
    np.testing.assert_array_equal(it_a.U, it_b.U)
    np.testing.assert_array_equal(it_a.X, it_b.X)
    np.testing.assert_array_equal(it_a.Lambda, it_b.Lambda)
    assert rep_a == rep_b


@pytest.mark.parametrize("precond", [True, False])
def test_inner_tolerance_is_measured_in_model_units(monkeypatch, precond):
    seen = []
    real = cdal_module.inner_solve

    def recording(ws, *args, **kwargs):
        seen.append(ws.x_weight.copy())
        return real(ws, *args, **kwargs)

    monkeypatch.setattr(cdal_module, "inner_solve", recording)
    m = random_model(4)
    solve(m, None, SolverSettings(rho=0.1, use_precond=precond))
    expected = compute_scaling(m).E_inv_diag ** 2 if precond else np.ones(m.n_xh)
    assert seen
    for w in seen:
        np.testing.assert_allclose(w, expected)


def test_warm_start_shape_mismatch_raises():
    m = random_model(13, T=3)
    other = random_model(13, T=2)
    with pytest.raises(CdalConfigError, match="shape mismatch"):
        solve(m, cold_start(other))


def test_outer_limit_reports_not_converged(caplog):
    m = random_model(14)
    with caplog.at_level("WARNING"):
        _, report = solve(m, None, SolverSettings(rho=0.1, eps_out=1e-14, eps_in=1e-12, N_out=1))
    assert report.outer_iters == 1
    assert not report.converged
    assert "N_out=1" in caplog.text


def test_non_finite_iterate_is_divergence():
    it = PrimalDualIterate(U=[[np.nan]], X=[[0.0], [0.0]], Lambda=[[0.0]])
    with pytest.raises(SolverDivergenceError) as e:
        _check_finite(it, 7)
    assert e.value.outer_iter == 7
