"""Cooperative pricing games for a supplier and two manufacturers.

The package computes Stackelberg equilibria for every way of grouping the
three agents into coalitions, turns them into partition-dependent coalition
worths, and decides which groupings are stable against blocking coalitions.
"""

from .equilibria import EquilibriumOutcome, solve_partition
from .errors import ChainCoopError, InvalidInputError, OracleConvergenceError, SolverError
from .model import (
    PA,
    PARTITIONS,
    PG,
    PH,
    PV1,
    PV2,
    ActionProfile,
    Agent,
    BlockerPolicy,
    Coalition,
    Configuration,
    MarketParams,
    Partition,
    PayoffVector,
)
from .stability import (
    StabilityReport,
    blocks,
    partition_classification,
    restricted_stable_region,
    stable_payoff_region,
    sweep_classification,
)
from .worths import WorthTable, compute_worth_table, limit_table

__version__ = "0.1.0"

__all__ = [
    "PA",
    "PARTITIONS",
    "PG",
    "PH",
    "PV1",
    "PV2",
    "ActionProfile",
    "Agent",
    "BlockerPolicy",
    "ChainCoopError",
    "Coalition",
    "Configuration",
    "EquilibriumOutcome",
    "InvalidInputError",
    "MarketParams",
    "OracleConvergenceError",
    "Partition",
    "PayoffVector",
    "SolverError",
    "StabilityReport",
    "WorthTable",
    "blocks",
    "compute_worth_table",
    "limit_table",
    "partition_classification",
    "restricted_stable_region",
    "solve_partition",
    "stable_payoff_region",
    "sweep_classification",
]
