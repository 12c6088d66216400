import itertools

import numpy as np
import pytest

from src.cdal.oracle.explicit_qp import (
    build_qp,
    eval_F_rho,
    grad_F_rho,
    solve_qp_reference,
    stack_z,
    unstack_z,
)
from src.cdal.problem.augment import augment
from src.cdal.problem.base import OracleFailureError
from tests.cdal.helpers import random_model, scalar_problem


def test_build_qp_layout():
    m = augment(scalar_problem(T=2, x0=[0.5], u_prev=[0.2]))
    qp = build_qp(m)
    # z = (u0, x1, u1, x2) with x = [x; u_prev]
    assert qp.n_z == 2 * (1 + 2)
    assert qp.G.shape == (4, 6)
    np.testing.assert_allclose(qp.G[0:2, 0:3], [[1.0, -1.0, 0.0], [1.0, 0.0, -1.0]])
    np.testing.assert_allclose(qp.G[2:4, 1:6], [[1.0, 1.0, 1.0, -1.0, 0.0], [0.0, 1.0, 1.0, 0.0, -1.0]])
    np.testing.assert_allclose(qp.g, [-0.7, -0.2, 0.0, 0.0])


def test_stack_and_unstack():
    U = np.array([[1.0], [2.0]])
    X = np.array([[9.0, 9.0], [3.0, 4.0], [5.0, 6.0]])
    z = stack_z(U, X)
    np.testing.assert_allclose(z, [1.0, 3.0, 4.0, 2.0, 5.0, 6.0])
    U2, X2 = unstack_z(z, 2, 1, 2)
    np.testing.assert_allclose(U2, U)
    np.testing.assert_allclose(X2, X[1:])


def test_reference_solves_scalar_tracking_problem():
    # du minimizes 1/2 du^2 + 1/2 (du - 1)^2
    qp = build_qp(augment(scalar_problem()))
    z = solve_qp_reference(qp)
    assert z[0] == pytest.approx(0.5, abs=1e-7)


def test_reference_respects_active_bound():
    qp = build_qp(augment(scalar_problem(du_max=[0.2])))
    z = solve_qp_reference(qp)
    assert z[0] == pytest.approx(0.2, abs=1e-8)


def test_reference_reports_infeasible_problem():
    qp = build_qp(augment(scalar_problem(du_min=[-0.1], du_max=[0.1], x_min=[5.0], x_max=[6.0])))
    with pytest.raises(OracleFailureError):
        solve_qp_reference(qp)


def _enumerate_active_sets(qp):
    """Brute force over {lower, upper, free} per variable; returns the best KKT point."""
    n, p = qp.n_z, qp.G.shape[0]
    best = np.inf
    for pattern in itertools.product((0, 1, 2), repeat=n):
        fixed = {i: (qp.lo[i] if s == 0 else qp.hi[i]) for i, s in enumerate(pattern) if s != 2}
        if any(not np.isfinite(v) for v in fixed.values()):
            continue
        free = [i for i in range(n) if i not in fixed]
        z = np.zeros(n)
        for i, v in fixed.items():
            z[i] = v
        if free:
            Hf = qp.H[np.ix_(free, free)]
            Gf = qp.G[:, free]
            rhs_h = -(qp.h[free] + qp.H[np.ix_(free, list(fixed))] @ z[list(fixed)]) if fixed else -qp.h[free]
            rhs_g = qp.g - (qp.G[:, list(fixed)] @ z[list(fixed)] if fixed else 0.0)
            K = np.block([[Hf, Gf.T], [Gf, np.zeros((p, p))]])
            rhs = np.concatenate([rhs_h, rhs_g])
            sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
            if np.max(np.abs(K @ sol - rhs)) > 1e-9:
                continue
            z[free] = sol[:len(free)]
        if np.max(np.abs(qp.residual(z))) > 1e-9:
            continue
        if np.any(z < qp.lo - 1e-9) or np.any(z > qp.hi + 1e-9):
            continue
        best = min(best, qp.objective(z))
    return best


@pytest.mark.parametrize("seed", range(8))
def test_reference_matches_active_set_enumeration(seed):
    m = random_model(seed, n_x=1, n_u=1, T=1)
    qp = build_qp(m)
    z = solve_qp_reference(qp)
    assert qp.objective(z) == pytest.approx(_enumerate_active_sets(qp), rel=1e-6, abs=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_gradient_of_F_matches_finite_differences(seed):
    m = random_model(seed)
    qp = build_qp(m)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(qp.n_z)
    lam = rng.standard_normal(qp.G.shape[0])
    g = grad_F_rho(qp, z, lam, 0.3)
    h = 1e-6
    fd = np.array([
        (eval_F_rho(qp, z + h * e, lam, 0.3) - eval_F_rho(qp, z - h * e, lam, 0.3)) / (2 * h)
        for e in np.eye(qp.n_z)
    ])
    np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-5)
