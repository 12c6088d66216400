import sys

import numpy as np

from src.cdal.oracle.explicit_qp import build_qp, solve_qp_reference
from src.cdal.problem.augment import augment
from src.cdal.problem.base import MpcProblem, OracleFailureError
from src.cdal.simulation.bench_runner import check_random_instance

try:
    # scalar system with a known unconstrained optimum
    p = MpcProblem(A=[[1.0]], B=[[1.0]], C=[[1.0]], W_y=[[1.0]], W_u=[[0.0]], W_du=[[1.0]],
                   T=1, x0=[0.0], u_prev=[0.0], r=[1.0])
    z = solve_qp_reference(build_qp(augment(p)))  # cheap sanity solve
    if not np.isclose(z[0], 0.5, atol=1e-6):
        print(f"ORACLE:unexpected optimum {z[0]}"); sys.exit(30)
    res = check_random_instance(seed=0)           # solver vs oracle
    if not res.passed:
        print(f"MISMATCH:u_gap={res.u_gap:.3e} obj_gap={res.objective_rel_gap:.3e}"); sys.exit(31)
    print("OK")
    sys.exit(0)
except OracleFailureError as e:
    print(f"ORACLE:{e}"); sys.exit(30)
except Exception as e:
    print(f"OTHER:{e}"); sys.exit(32)
