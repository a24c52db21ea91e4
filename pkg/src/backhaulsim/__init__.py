"""Uplink simulator for two-tier small-cell networks.

Macro users split their uplink into a coarse message decoded at the macro
base station and a fine message decoded at a nearby small cell and relayed
over a wired, in-band wireless, or hybrid backhaul. Baselines, a
full-information regret matcher, and a three-timescale bandit learner play
the resulting game; the harness runs Monte-Carlo drops and aggregates
rates, delays, and convergence traces.
"""

from .backhaul import (
    EQUAL,
    HYBRID,
    MODES,
    OTA,
    PROPORTIONAL_LOAD,
    WIRED,
    WIRED_POLICIES,
    BackhaulView,
    allocate_flow_shares,
    allocate_wired_capacity,
)
from .baselines import BaselineResult, run_cla, run_off, run_ru1
from .channel import (
    ChannelState,
    build_channel_state,
    dbm_to_watts,
    noise_power_w,
    pathloss_db,
)
from .delay_engine import (
    UNSTABLE,
    DelayBreakdown,
    TrafficSpec,
    delay_classical,
    delay_split,
    md1_delay,
    md1_oracle,
)
from .game import (
    Action,
    ActionSpace,
    GameParams,
    ProfileOutcome,
    UplinkGame,
    UtilityParams,
    build_action_space,
    epsilon_cce_gap,
    utility,
)
from .harness import (
    ALGORITHMS,
    ExperimentConfig,
    MueRow,
    RunResult,
    apply_override,
    best_effort_decile,
    compute_cdf,
    distance_binned_throughput,
    export,
    import_json,
    load_config,
    result_from_dict,
    result_to_dict,
    run_drop,
    run_experiment,
    run_sweep,
)
from .learning import (
    ConvergenceMonitor,
    LearnerState,
    RegretMatcher,
    ScheduleReport,
    Schedules,
    bg_distribution,
    bg_oracle_check,
    matrix_selfplay,
    noisy_feedback,
    regret_full_update,
    rsl_step,
    sat_step,
    strategy_from_regret,
    validate_schedules,
)
from .rate_engine import (
    ADD_DIRECT,
    COMBINERS,
    IDENTITY,
    RateBreakdown,
    RateEngine,
    combine_g,
    spectral_rate,
)
from .topology import (
    ConfigurationError,
    ScenarioConfig,
    SubcarrierAllocation,
    Topology,
    assign_subcarriers,
    distance,
    generate_topology,
)

__version__ = "0.1.0"

__all__ = [
    "ADD_DIRECT",
    "ALGORITHMS",
    "Action",
    "ActionSpace",
    "BackhaulView",
    "BaselineResult",
    "COMBINERS",
    "ChannelState",
    "ConfigurationError",
    "ConvergenceMonitor",
    "DelayBreakdown",
    "EQUAL",
    "ExperimentConfig",
    "GameParams",
    "HYBRID",
    "IDENTITY",
    "LearnerState",
    "MODES",
    "MueRow",
    "OTA",
    "PROPORTIONAL_LOAD",
    "ProfileOutcome",
    "RateBreakdown",
    "RateEngine",
    "RegretMatcher",
    "RunResult",
    "ScenarioConfig",
    "ScheduleReport",
    "Schedules",
    "SubcarrierAllocation",
    "Topology",
    "TrafficSpec",
    "UNSTABLE",
    "UplinkGame",
    "UtilityParams",
    "WIRED",
    "WIRED_POLICIES",
    "allocate_flow_shares",
    "allocate_wired_capacity",
    "apply_override",
    "assign_subcarriers",
    "best_effort_decile",
    "bg_distribution",
    "bg_oracle_check",
    "build_action_space",
    "build_channel_state",
    "combine_g",
    "spectral_rate",
    "compute_cdf",
    "dbm_to_watts",
    "delay_classical",
    "delay_split",
    "distance",
    "distance_binned_throughput",
    "epsilon_cce_gap",
    "export",
    "generate_topology",
    "import_json",
    "load_config",
    "result_from_dict",
    "result_to_dict",
    "matrix_selfplay",
    "md1_delay",
    "md1_oracle",
    "noise_power_w",
    "noisy_feedback",
    "pathloss_db",
    "regret_full_update",
    "run_cla",
    "run_drop",
    "run_experiment",
    "run_off",
    "run_ru1",
    "run_sweep",
    "rsl_step",
    "sat_step",
    "strategy_from_regret",
    "utility",
    "validate_schedules",
]
