from src.cdal.simulation.closed_loop import (
    Scenario,
    ClosedLoopLog,
    afti16_scenario,
    cstr_scenario,
    simulate_lti,
    simulate_lpv_cstr,
)
from src.cdal.simulation.config import RunConfig, load_config, parse_config
