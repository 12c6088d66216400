# Solver defaults (final CDAL scheme)
DEFAULT_RHO = 0.01
DEFAULT_N_OUT = 5000
DEFAULT_N_IN = 5000
DEFAULT_EPS_OUT = 1e-4
DEFAULT_EPS_IN = 1e-6

# Preconditioner guard
SCALING_FLOOR = 1e-8
SCALING_CEIL = 1e8

# Ablation grid: scheme name -> (use_acceleration, use_reverse, use_precond)
ABLATION_SCHEMES = {
    "0-CDAL": (False, False, False),
    "R-CDAL": (False, True, False),
    "A-CDAL": (True, False, False),
    "AR-CDAL": (True, True, False),
    "P-0-CDAL": (False, False, True),
    "P-R-CDAL": (False, True, True),
    "P-A-CDAL": (True, False, True),
    "CDAL": (True, True, True),
}
ABLATION_RHO = 1.0
RHO_SWEEP = [1.0, 0.5, 0.2, 0.1, 0.05, 0.01]

# ---- AFTI-16 (continuous-time, linearized) ----
AFTI16_A = [
    [-0.0151, -60.5651, 0.0, -32.174],
    [-0.0001, -1.3411, 0.9929, 0.0],
    [0.00018, 43.2541, -0.86939, 0.0],
    [0.0, 0.0, 1.0, 0.0],
]
AFTI16_B = [
    [-2.516, -13.136],
    [-0.1689, -0.2514],
    [-17.251, -1.5766],
    [0.0, 0.0],
]
AFTI16_C = [
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
]
AFTI16_TS = 0.05  # s
AFTI16_U_LIMIT = 25.0  # deg
AFTI16_Y_MIN = [-0.5, -100.0]
AFTI16_Y_MAX = [0.5, 100.0]
AFTI16_W_Y = [10.0, 10.0]
AFTI16_W_U = [0.0, 0.0]
AFTI16_W_DU = [0.1, 0.1]
AFTI16_HORIZON = 5
AFTI16_STEPS = 60            # 3 s closed loop
AFTI16_PITCH_STEP = 10.0     # deg, held for the first half
AFTI16_BENCH_RHO = 1.0

# ---- CSTR ----
CSTR_K0 = 34930800.0    # 1/min
CSTR_EAR = -5963.6      # K
CSTR_CA_IN = 10.0       # kgmol/m^3
CSTR_TI_NOMINAL = 298.15
CSTR_TI_AMPLITUDE = 5.0
CSTR_TI_FREQUENCY = 0.05  # rad/min
CSTR_TS = 0.5           # min
CSTR_X0 = [8.57, 311.0]
CSTR_REFERENCE = 2.0
CSTR_W_Y = 1.0
CSTR_W_U = 0.0
CSTR_W_DU = 0.1
CSTR_DU_LIMIT = 1.0     # K per step
CSTR_HORIZON = 10
CSTR_STEPS = 200        # 100 min closed loop
CSTR_RK4_SUBSTEPS = 10
CSTR_BENCH_RHO = 0.01

# ---- Output ----
CSV_FLOAT_FORMAT = "{:.9g}"
LTI_LOG_COLUMNS = ["outer_iters", "inner_iters", "solve_ms", "step_ms", "converged", "violation"]
CSTR_LOG_COLUMNS = ["t", "C_A", "T", "Tc", "dTc", "r", "outer_iters", "inner_iters"]
BENCH_COLUMNS = [
    "scheme", "rho",
    "inner_avg", "inner_max",
    "outer_avg", "outer_max",
    "time_ms_avg", "time_ms_max",
    "step_ms_avg", "step_ms_max",
    "cost",
]


# Random-instance check (oracle agreement)
# Oracle comparison solves tighter than the solver defaults; the objective
# may undercut the reference optimum by at most CHECK_OBJ_FLOOR_RTOL.
CHECK_RHO = 0.1
CHECK_EPS_OUT = 1e-12
CHECK_EPS_IN = 1e-16
CHECK_U_TOL = 1e-3
CHECK_OBJ_RTOL = 1e-4
CHECK_OBJ_FLOOR_RTOL = 1e-5

# CLI exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DIVERGENCE = 2
EXIT_ORACLE = 3

DEFAULT_OUTPUT_DIR = "results"
