"""Task-oriented hybrid beamforming for wideband OFDM dual-function radar-communication."""

from .cadmm import RunTrace, objective, radar_only, random_phase_baseline, residuals, run
from .config import PRESETS, config_from_dict, load_config_data
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateBeampatternError,
    DegenerateSubproblemError,
    DfrcHbfError,
    InfeasibleQoSError,
    LinearizationPointError,
    NumericalFailureError,
    SingularSystemError,
)
from .metrics import (
    BeampatternGrid,
    CombinerSet,
    HybridBeamformer,
    aismmr,
    apsimr,
    beampattern_grid,
    mmse_combiner,
    mse,
    qos_bound_xi,
    rate,
    rate_wmmse,
    sinr,
    transmit_spectrum,
    update_combiners,
)
from .model import (
    AngleGrids,
    ChannelSet,
    ScenarioConfig,
    SteeringTables,
    Task,
    Tolerances,
    generate_channel,
    steering_matrix,
    steering_vector,
)
from .subsolvers import (
    CadmmState,
    solve_Fk,
    solve_FRF_ccd,
    solve_G,
    solve_Y,
    solve_g_eps_sd,
    solve_g_tt,
    solve_h_eta_tt,
    solve_h_sd,
    update_duals,
)

__version__ = "0.1.0"
