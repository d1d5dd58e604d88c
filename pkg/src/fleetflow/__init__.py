"""Steady-state models and an event simulator for door-to-door transit fleets."""

from .core import (
    DEFAULT_K,
    POLICIES,
    ConfigurationError,
    ConsistencyError,
    InfeasibleStateError,
    ModelError,
    Scenario,
    intrinsic_demand,
    nearest_distance,
    rescale_dimensionless,
    rescale_time,
)
from .network import (
    Link,
    StateVector,
    TransitionNetwork,
    build_network,
    validate_network,
)
from .policy import EXOGENOUS, FlowVector, availability_count, rate_vector
from .steady import (
    CriticalFleet,
    OperatingPoint,
    PerformanceCurve,
    closed_form_state,
    critical_fleet,
    fleet_size,
    idle_fraction,
    performance_curve,
    solve_conditioned,
    time_ratio_at_fleet,
    travel_time_ratio,
)
from .baseline import (
    AutoMode,
    BaselinePoint,
    TransitCurve,
    auto_point,
    transit_optimal_spacing,
    transit_time_ratio,
)
from .pareto import FrontierPoint, Niche, mode_niches, pareto_frontier
from .sim import (
    LittleReport,
    MinFleetResult,
    SimConfig,
    SimResult,
    little_check,
    mean_f_t,
    min_feasible_fleet,
    simulate_many,
    simulate_run,
)

__version__ = "0.1.0"
