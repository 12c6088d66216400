import numpy as np

from src.cdal.problem.base import MpcProblem


def _random_psd(rng: np.random.Generator, n: int, floor: float = 0.0) -> np.ndarray:
    M = rng.standard_normal((n, n))
    W = M @ M.T / n
    return W + floor * np.eye(n)


def random_problem(
    rng: np.random.Generator,
    n_x: int,
    n_u: int,
    T: int,
    p_finite: float = 0.5,
    margin: float = 0.5,
) -> MpcProblem:
    """
    Random tracking MPC that is feasible by construction.

    A random increment sequence is rolled out from (x0, u_prev); every finite
    bound is placed `margin`-ish outside that trajectory, so the rollout is a
    feasible point. Roughly `p_finite` of the bounds are finite.
    """
    A = rng.standard_normal((n_x, n_x))
    radius = max(abs(np.linalg.eigvals(A)))
    A = A * (rng.uniform(0.5, 1.05) / max(radius, 1e-9))
    B = rng.standard_normal((n_x, n_u))
    n_y = n_x
    C = np.eye(n_x)

    W_y = _random_psd(rng, n_y)
    W_u = _random_psd(rng, n_u) if rng.uniform() < 0.5 else np.zeros((n_u, n_u))
    W_du = _random_psd(rng, n_u, floor=0.1)

    x0 = rng.standard_normal(n_x)
    u_prev = rng.standard_normal(n_u)

    du = 0.5 * rng.standard_normal((T, n_u))
    xs, us = [x0], [u_prev]
    for t in range(T):
        us.append(us[-1] + du[t])
        xs.append(A @ xs[-1] + B @ us[-1])
    xs, us = np.array(xs[1:]), np.array(us[1:])

    def _bounds(traj: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        lo = traj.min(axis=0) - margin * rng.uniform(0.2, 1.0, traj.shape[1])
        hi = traj.max(axis=0) + margin * rng.uniform(0.2, 1.0, traj.shape[1])
        lo[rng.uniform(size=lo.size) > p_finite] = -np.inf
        hi[rng.uniform(size=hi.size) > p_finite] = np.inf
        return lo, hi

    x_min, x_max = _bounds(xs)
    u_min, u_max = _bounds(us)
    du_min, du_max = _bounds(du)

    return MpcProblem(
        A=A, B=B, C=C,
        W_y=W_y, W_u=W_u, W_du=W_du,
        T=T,
        x0=x0, u_prev=u_prev,
        r=rng.standard_normal(n_y),
        u_ref=rng.standard_normal(n_u),
        x_min=x_min, x_max=x_max,
        u_min=u_min, u_max=u_max,
        du_min=du_min, du_max=du_max,
    )
