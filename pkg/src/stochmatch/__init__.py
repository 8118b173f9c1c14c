"""Online stochastic bipartite matching with probing constraints: LPs, rounding and simulators."""

from .configlp import ConfigLpSolution, edge_variables, solve_lp_config, solve_lp_config_id
from .model import (
    Edge,
    ExplicitFamily,
    Knapsack,
    KnownIdInput,
    OfflineVertex,
    OnlineVertex,
    Patience,
    StochasticGraph,
    q,
    val,
)
from .star import dp_opt, is_rankable, price_column, star_opt

__all__ = [
    "ConfigLpSolution", "Edge", "ExplicitFamily", "Knapsack", "KnownIdInput", "OfflineVertex",
    "OnlineVertex", "Patience", "StochasticGraph", "dp_opt", "edge_variables", "is_rankable",
    "price_column", "q", "solve_lp_config", "solve_lp_config_id", "star_opt", "val",
]
__version__ = "0.1.0"
