"""Walrasian equilibrium prices in strong gross substitutes markets.

Dynamic auctions over the integer price lattice whose steps are computed by a
push-relabel polymatroid-sum solver and exchange-graph reachability, with
brute-force oracles for desk-scale verification.
"""

from .auctions import (
    AuctionTrace,
    ascending,
    default_round_limit,
    descending,
    descending_start,
    extract_allocation,
    greedy,
    two_phase,
)
from .core_model import (
    Allocation,
    BundleOutOfBounds,
    EnumerationLimit,
    Instance,
    InternalInvariantError,
    MarketError,
    NotPreferredBundle,
    NotWalrasian,
    RoundLimitExceeded,
)
from .demand_sets import (
    DemandReport,
    ExchangeGraph,
    build_exchange_graph,
    is_covering,
    is_packing,
    is_walrasian,
    lyapunov,
    min_max_overdemanded,
    min_max_underdemanded,
)
from .oracle_bruteforce import (
    EnumerationBudget,
    brute_min_max_set,
    brute_polymatroid_sum,
    brute_walrasian,
    monotonicity_harness,
)
from .polymatroid_sum import SumMode, SumSolution, solve
from .valuations import (
    OXS,
    Additive,
    DemandSide,
    GraphicMatroid,
    OracleCounters,
    PartitionMatroid,
    Table,
    Truncated,
    UniformMatroid,
    UnitDemand,
    WeightedMatroidRank,
    check_m_convex,
    check_mnat_concave,
    copy_to_unit_supply,
    truncate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "1.0.0"
