"""Clock-offset recovery toolkit for single-photon timing links.

Generates deterministic pulse patterns, recovers large clock offsets from
sparse detection timestamps by cross-correlation, provides analytic
success models and a parameter planner, and simulates channels and
multi-block scenarios for validation.
"""

__version__ = "0.1.0"

from .analytics import (
    GridCell,
    PenaltyPoint,
    PlanResult,
    exact_accept_prob,
    feasibility_grid,
    fiber_km_to_timebins,
    offsets_per_day,
    optimize_params,
    p_correct,
    p_no_wrong_many,
    p_no_wrong_single,
    penalty_curve,
    penalty_to_db,
    phi,
    qubit_budget_penalty,
    skr_penalty,
    timebins_to_fiber_km,
    write_grid_csv,
    write_penalty_curve_csv,
)
from .errors import (
    CorruptFileError,
    InfeasibleThresholdError,
    InsufficientDetectionsError,
    InvalidScheduleError,
    NoFeasibleSolutionError,
    ResyncError,
)
from .pattern import Pattern, generate_pattern, read_pattern, write_pattern
from .recovery import (
    AlignedDetections,
    DetectionSet,
    RecoveryOutcome,
    RecoveryParams,
    RecoveryStatus,
    align_and_discretize,
    cross_correlation,
    find_alignment_offset,
    find_offset,
    map_nat_to_int,
    read_detections,
    write_detections,
)
from .simulator import (
    BlockRecord,
    ChannelModel,
    Interrupt,
    McResult,
    ScenarioConfig,
    ScenarioReport,
    SetFiberKm,
    monte_carlo_rates,
    run_scenario,
    simulate_block,
    wilson_interval,
)

__all__ = [
    "__version__",
    "AlignedDetections",
    "BlockRecord",
    "ChannelModel",
    "CorruptFileError",
    "DetectionSet",
    "GridCell",
    "InfeasibleThresholdError",
    "InsufficientDetectionsError",
    "Interrupt",
    "InvalidScheduleError",
    "McResult",
    "NoFeasibleSolutionError",
    "Pattern",
    "PenaltyPoint",
    "PlanResult",
    "RecoveryOutcome",
    "RecoveryParams",
    "RecoveryStatus",
    "ResyncError",
    "ScenarioConfig",
    "ScenarioReport",
    "SetFiberKm",
    "align_and_discretize",
    "cross_correlation",
    "exact_accept_prob",
    "feasibility_grid",
    "fiber_km_to_timebins",
    "find_alignment_offset",
    "find_offset",
    "generate_pattern",
    "map_nat_to_int",
    "monte_carlo_rates",
    "offsets_per_day",
    "optimize_params",
    "p_correct",
    "p_no_wrong_many",
    "p_no_wrong_single",
    "penalty_curve",
    "penalty_to_db",
    "phi",
    "qubit_budget_penalty",
    "read_detections",
    "read_pattern",
    "run_scenario",
    "simulate_block",
    "skr_penalty",
    "timebins_to_fiber_km",
    "wilson_interval",
    "write_detections",
    "write_grid_csv",
    "write_pattern",
    "write_penalty_curve_csv",
]
