import numpy as np

from src.cdal.problem.augment import augment
from src.cdal.problem.base import MpcProblem
from src.cdal.problem.random_instance import random_problem


def random_model(seed: int, n_x=None, n_u=None, T=None):
    rng = np.random.default_rng(seed)
    n_x = int(rng.integers(1, 5)) if n_x is None else n_x
    n_u = int(rng.integers(1, 3)) if n_u is None else n_u
    T = int(rng.integers(1, 6)) if T is None else T
    return augment(random_problem(rng, n_x, n_u, T))


def scalar_problem(**overrides) -> MpcProblem:
    """x+ = x + u, y = x, track r=1 with unit weights."""
    kwargs = dict(
        A=[[1.0]], B=[[1.0]], C=[[1.0]],
        W_y=[[1.0]], W_u=[[0.0]], W_du=[[1.0]],
        T=1, x0=[0.0], u_prev=[0.0], r=[1.0],
    )
    kwargs.update(overrides)
    return MpcProblem(**kwargs)
