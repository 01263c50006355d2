"""Equilibrium solver for a two-manufacturer, two-retailer closed-loop supply chain."""

from clsc.asymmetric import (
    BonusBestResponse,
    BonusNashResult,
    bonus_best_response,
    bonus_comparative_statics,
    bonus_nash,
    bonus_threshold,
    solve_asymmetric,
    wholesale_nash,
)
from clsc.model import (
    AllocationMode,
    ChainParams,
    ConvergenceError,
    DomainError,
    EquilibriumOutcome,
    EquilibriumWarning,
    LeaderDecision,
    MarketParams,
    ModelError,
    ParameterError,
    Regime,
    RegimeError,
    RetailPrices,
    allocation_share,
    allocation_share_gradient,
    demand,
    manufacturer_profit,
    retailer_profit,
    reverse_viability,
    total_returns,
)
from clsc.retailer import reduced_demand, reduced_demand_jacobian, retailer_nash_prices
from clsc.symmetric import (
    SymmetricScenario,
    WelfareComparison,
    coupling_slopes,
    planner_wholesale,
    solve_symmetric,
    symmetric_bonus,
    symmetric_demand_slope,
    symmetric_retail,
    symmetric_wholesale,
    unilateral_wholesale,
    welfare_gap,
)

__version__ = "0.1.0"
