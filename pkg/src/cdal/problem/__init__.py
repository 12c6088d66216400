from src.cdal.problem.base import (
    MpcProblem,
    AugmentedModel,
    PrimalDualIterate,
    CdalConfigError,
    ScalingError,
    SolverDivergenceError,
    OracleFailureError,
    SimulationError,
)
from src.cdal.problem.augment import (
    augment,
    cold_start,
    shift_warm_start,
    mpc_objective,
    initial_state_violation,
)
from src.cdal.problem.cost import closed_loop_cost
from src.cdal.problem.random_instance import random_problem
