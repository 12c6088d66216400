import numpy as np


def closed_loop_cost(log) -> float:
    """
    Average MPC stage cost over a closed-loop run:

        1/N * sum_t |W_y (y_{t+1} - r_{t+1})|^2 + |W_u (u_t - u_ref_t)|^2 + |W_du du_t|^2

    `log` is a ClosedLoopLog (anything exposing y, r, u, u_ref, du and the
    three weight matrices). Record t stores y_{t+1} / r_{t+1} next to u_t.
    """
    y = np.atleast_2d(np.asarray(log.y, dtype=float))
    n = len(log.y)
    if n == 0:
        raise ValueError("closed_loop_cost: empty closed-loop log")

    y = y.reshape(n, -1)
    r = np.asarray(log.r, dtype=float).reshape(n, -1)
    u = np.asarray(log.u, dtype=float).reshape(n, -1)
    u_ref = np.asarray(log.u_ref, dtype=float).reshape(n, -1)
    du = np.asarray(log.du, dtype=float).reshape(n, -1)
    if not (r.shape[0] == u.shape[0] == u_ref.shape[0] == du.shape[0] == n):
        raise ValueError("closed_loop_cost: log sequences have different lengths")

    W_y = np.atleast_2d(log.W_y)
    W_u = np.atleast_2d(log.W_u)
    W_du = np.atleast_2d(log.W_du)

    terms = (
        np.sum(((y - r) @ W_y.T) ** 2, axis=1)
        + np.sum(((u - u_ref) @ W_u.T) ** 2, axis=1)
        + np.sum((du @ W_du.T) ** 2, axis=1)
    )
    return float(np.mean(terms))
