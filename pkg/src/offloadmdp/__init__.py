"""Cost- and energy-aware WLAN/cellular offloading toolkit.

Exact finite-horizon planning over a grid mobility model, online heuristics,
and a seeded Monte Carlo harness, served through a FastAPI app with a thin
CLI client.
"""

from .config import ScenarioConfig, load_config, save_config
from .dp import (
    PolicyTable,
    ValueTable,
    backward_induction,
    load_policy,
    lookup_action,
    q_value,
    save_policy,
)
from .energy import F1, F2, EnergyCurve, fit_energy_curve, named_curve
from .exceptions import (
    ConfigurationError,
    FeasibilityError,
    InternalConsistencyError,
    OffloadError,
    PolicyLookupError,
    SizingError,
)
from .heuristic import (
    BaselinePolicy,
    HeuristicParams,
    HeuristicPolicy,
    TablePolicy,
    baseline_decide,
    deadline_weights,
    heuristic_decide,
    make_policy,
    price_only_policy,
)
from .mobility import (
    MobilityModel,
    build_grid_mobility,
    next_location,
    sample_trace,
    stationary_distribution,
)
from .model import (
    Action,
    ActionMode,
    CostParams,
    FlowSpec,
    LocationProfile,
    Network,
    Scenario,
    State,
    apply_action,
    energy_cost,
    enumerate_actions,
    monetary_cost,
    penalty,
    stage_reward,
)
from .reports import emit_report, to_csv_text, to_json_text
from .scenario_gen import generate_scenario, truncated_normal_sample
from .sim import (
    AggregateReport,
    EpisodeResult,
    brute_force_value,
    exact_policy_evaluation,
    monte_carlo,
    run_episode,
)
from .sweep import run_sweep
from .verification import oracle_check

__version__ = "0.1.0"
