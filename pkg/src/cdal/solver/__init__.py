from src.cdal.solver.precondition import (
    DiagonalScaling,
    compute_scaling,
    apply,
    unscale_states,
)
from src.cdal.solver.cd_kernel import (
    CdWorkspace,
    PassResult,
    clamp,
    ccd_input_block,
    ccd_state_block,
    ccd_terminal_state,
    cd_full_pass,
    inner_solve,
)
from src.cdal.solver.cdal import (
    SolverSettings,
    SolveReport,
    solve,
    nesterov_alpha,
    dual_refresh,
)
