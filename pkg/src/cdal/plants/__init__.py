from src.cdal.plants.afti16 import Afti16Model, zoh_discretize, pitch_reference
from src.cdal.plants.cstr import (
    CstrModel,
    cstr_derivatives,
    linearize_cstr,
    euler_discretize,
    rk4_propagate,
    cstr_mpc_problem,
)
from src.cdal.plants.linear import LinearPlant
