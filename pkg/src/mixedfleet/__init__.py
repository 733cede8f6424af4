"""Day-ahead assignment of mixed electric/diesel bus fleets to transit
blocks and charger slots under time-of-use electricity pricing."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    BlockAssignment,
    ChargeAssignment,
    ChargingPole,
    ChargingSlot,
    FuelFamily,
    Instance,
    Location,
    Schedule,
    TimeSlot,
    TransitBlock,
    VehicleSpec,
    build_instance,
    can_seat,
    energy_for_block,
    energy_for_deadhead,
    feasible_pair,
    price_at,
    replenish_cost,
    slot_of,
)
from .scenario import (  # noqa: F401
    ScenarioError,
    load_scenario,
    load_schedule,
    save_scenario,
    save_schedule,
    validate_instance,
)
from .greedy import GreedyConfig, greedy_assignment  # noqa: F401
from .hierarchy import HierarchyResult, hierarchical_solve, split_fleet  # noqa: F401
from .annealing import SaConfig, opt_sa  # noqa: F401
from .validator import co2_estimate, compare, simulate  # noqa: F401
from .methods import METHODS, run_method  # noqa: F401
