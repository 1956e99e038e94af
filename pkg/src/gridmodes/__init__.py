"""Learning oscillatory dynamics of networked second-order oscillators.

The package identifies spatio-temporal oscillation modes from
multi-trajectory time-series data with delay-embedded (higher-order)
dynamic mode decomposition, and ships a swing-equation network simulator
that generates verifiable ground-truth data at desk scale.
"""

from .errors import DataError, GridmodesError, NumericalError
from .trajectory import (
    ChannelSchema,
    SteadyState,
    Trajectory,
    TrajectorySet,
    compute_steady_state,
    default_steady_policy,
    inject_noise,
    load_trajectory,
    load_trajectory_set,
    write_trajectory,
    write_trajectory_set,
)
from .simulator import (
    FaultSpec,
    SimConfig,
    SwingNetwork,
    five_machine_network,
    generate_scenarios,
    load_network,
    simulate,
    solve_equilibrium,
    swing_energy,
    swing_rhs,
    write_network,
)
from .embedding import EmbeddedPair, build_embedded_pair
from .decomposition import (
    HodmdModel,
    RankSpec,
    fit,
    load_model,
    select_rank,
    write_model,
)
from .modal import (
    Classification,
    ModeSummary,
    Spectrum,
    classify_mode,
    continuous_parameters,
    fft_spectrum,
    rank_modes,
    spectral_peaks,
    write_mode_table,
)
from .prediction import (
    PredictionReport,
    SweepReport,
    reconstruct,
    replay,
    rrmse,
    sweep_order,
    write_sweep_report,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelSchema",
    "Classification",
    "DataError",
    "EmbeddedPair",
    "FaultSpec",
    "GridmodesError",
    "HodmdModel",
    "ModeSummary",
    "NumericalError",
    "PredictionReport",
    "RankSpec",
    "SimConfig",
    "Spectrum",
    "SteadyState",
    "SweepReport",
    "SwingNetwork",
    "Trajectory",
    "TrajectorySet",
    "build_embedded_pair",
    "classify_mode",
    "compute_steady_state",
    "continuous_parameters",
    "default_steady_policy",
    "fft_spectrum",
    "fit",
    "five_machine_network",
    "generate_scenarios",
    "inject_noise",
    "load_model",
    "load_network",
    "load_trajectory",
    "load_trajectory_set",
    "rank_modes",
    "reconstruct",
    "replay",
    "rrmse",
    "select_rank",
    "simulate",
    "solve_equilibrium",
    "spectral_peaks",
    "swing_energy",
    "swing_rhs",
    "sweep_order",
    "write_mode_table",
    "write_model",
    "write_network",
    "write_sweep_report",
    "write_trajectory",
    "write_trajectory_set",
]
