from src.cdal.oracle.explicit_qp import (
    ExplicitQp,
    build_qp,
    eval_F_rho,
    grad_F_rho,
    solve_qp_reference,
    stack_z,
    unstack_z,
)
