"""Closed-form symmetric equilibria, coupling slopes and the planner benchmark.

The wholesale prices here solve the symmetric reduced problem, where the
manufacturer objective is ``[(w - c) + theta (v - b - k)] D(w)`` with ``D`` the
common demand when both wholesale prices equal ``w``. That is the stationary
point along the symmetric path. It is not the unilateral best response in
``w_i`` holding the rival fixed; for that, see :func:`unilateral_wholesale`
and :func:`clsc.asymmetric.wholesale_nash`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from clsc.model import (
    AllocationMode,
    ChainParams,
    DomainError,
    EquilibriumWarning,
    LeaderDecision,
    MarketParams,
    ParameterError,
    Regime,
    RegimeError,
    RetailPrices,
    EquilibriumOutcome,
    assemble_outcome,
)


@dataclass(frozen=True)
class SymmetricScenario:
    d_bar: float
    alpha: float
    epsilon: float
    c: float
    v: float
    k: float
    theta: float
    beta: float
    gamma_r: float
    o_m: float = 0.0
    o_r: float = 0.0

    def __post_init__(self):
        # Bounds are shared with the per-firm types; build them to validate.
        self.market()
        self.chain()

    @classmethod
    def baseline(cls, **overrides) -> SymmetricScenario:
        """The reference parameterization used throughout the numerical study."""
        values = dict(d_bar=200.0, alpha=4.0, epsilon=0.4, c=20.0, v=60.0,
                      k=10.0, theta=0.3, beta=1.2, gamma_r=10.0)
        values.update(overrides)
        return cls(**values)

    def market(self) -> MarketParams:
        return MarketParams(self.d_bar, self.d_bar, self.alpha, self.alpha, self.epsilon)

    def chain(self) -> ChainParams:
        return ChainParams(
            c_1=self.c, c_2=self.c, v_1=self.v, v_2=self.v, k_1=self.k, k_2=self.k,
            theta=self.theta, beta_1=self.beta, beta_2=self.beta, gamma_r=self.gamma_r,
            o_m_1=self.o_m, o_m_2=self.o_m, o_r_1=self.o_r, o_r_2=self.o_r,
        )

    def replace(self, **changes) -> SymmetricScenario:
        unknown = set(changes) - set(self.__dataclass_fields__)
        if unknown:
            raise ParameterError(sorted(unknown)[0], "not a symmetric scenario field")
        return SymmetricScenario(**{**self.__dict__, **changes})


@dataclass(frozen=True)
class WelfareComparison:
    w_decentralized: float
    w_planner: float
    demand_decentralized: float
    demand_planner: float
    returns_decentralized: float
    returns_planner: float


def _choke_term(s: SymmetricScenario) -> float:
    if s.epsilon >= 1:
        raise DomainError(f"epsilon must be < 1, got {s.epsilon}")
    return s.d_bar / (2 * s.alpha * (1 - s.epsilon))


def symmetric_retail(w: float, s: SymmetricScenario) -> tuple[float, float]:
    """Retail price and per-retailer demand when both wholesale prices equal ``w``."""
    p = (s.d_bar / s.alpha + w) / (2 - s.epsilon)
    d = (s.d_bar - s.alpha * (1 - s.epsilon) * w) / (2 - s.epsilon)
    return p, d


def symmetric_demand_slope(s: SymmetricScenario) -> float:
    """``D'(w)`` along the symmetric path."""
    return -s.alpha * (1 - s.epsilon) / (2 - s.epsilon)


def symmetric_bonus(s: SymmetricScenario) -> tuple[float, Regime]:
    margin = s.v - s.k
    if margin <= 0:
        return 0.0, Regime.REVERSE_INACTIVE
    # Strict inequality: the exact threshold is a zero-bonus boundary.
    if s.beta * margin <= 2 * s.gamma_r:
        return 0.0, Regime.BOUNDARY_ZERO
    return margin / 3 - 2 * s.gamma_r / (3 * s.beta), Regime.INTERIOR


def _bonus_for(s: SymmetricScenario, mode: AllocationMode) -> tuple[float, Regime]:
    mode = AllocationMode(mode)
    if mode is AllocationMode.PROPORTIONAL:
        regime = Regime.REVERSE_INACTIVE if s.v - s.k <= 0 else Regime.BOUNDARY_ZERO
        return 0.0, regime
    return symmetric_bonus(s)


def symmetric_wholesale(s: SymmetricScenario, mode: AllocationMode) -> float:
    b, _ = _bonus_for(s, mode)
    return _choke_term(s) + (s.c - s.theta * (s.v - b - s.k)) / 2


def unilateral_wholesale(s: SymmetricScenario, mode: AllocationMode) -> float:
    """Symmetric root of the unilateral wholesale condition.

    Solves ``D + (w - c) dD_i/dw_i + theta (v - b - k) / 2 * d(D_1 + D_2)/dw_i = 0``
    at ``w_1 = w_2 = w``, i.e. the symmetric wholesale Nash equilibrium of the
    leader stage with bonuses at their equilibrium level.
    """
    b, _ = _bonus_for(s, mode)
    e, a = s.epsilon, s.alpha
    reverse = s.theta * (s.v - b - s.k)
    numer = s.d_bar * (2 + e) + a * s.c * (2 - e**2) - reverse * a * (1 - e) * (2 + e) / 2
    return numer / (a * (4 - e - 2 * e**2))


def solve_symmetric(s: SymmetricScenario, mode: AllocationMode) -> EquilibriumOutcome:
    b, regime = _bonus_for(s, mode)
    w = symmetric_wholesale(s, mode)
    p, _ = symmetric_retail(w, s)
    dec = LeaderDecision(w, w, b, b)
    outcome = assemble_outcome(
        dec, RetailPrices(p, p), s.market(), s.chain(),
        regimes=(regime, regime), shares=(0.5, 0.5),
    )
    for note in outcome.notes:
        warnings.warn(note, EquilibriumWarning, stacklevel=2)
    return outcome


def coupling_slopes(s: SymmetricScenario, mode: AllocationMode) -> tuple[float, float]:
    """``(dw*/dv, dw*/dtheta)`` for the symmetric closed form."""
    mode = AllocationMode(mode)
    if mode is AllocationMode.PROPORTIONAL:
        return -s.theta / 2, -(s.v - s.k) / 2
    b, regime = symmetric_bonus(s)
    if regime is not Regime.INTERIOR:
        raise RegimeError(
            f"inertia slopes need beta (v - k) > 2 gamma_r; regime is {regime.value}"
        )
    return -s.theta / 3, -(s.v - b - s.k) / 2


def planner_wholesale(s: SymmetricScenario) -> float:
    """Wholesale price that internalizes the full recovery value ``theta v``."""
    return _choke_term(s) + (s.c - s.theta * s.v) / 2


def welfare_gap(s: SymmetricScenario, mode: AllocationMode) -> WelfareComparison:
    w_d = symmetric_wholesale(s, mode)
    w_sp = planner_wholesale(s)
    _, d_d = symmetric_retail(w_d, s)
    _, d_sp = symmetric_retail(w_sp, s)
    result = WelfareComparison(
        w_decentralized=w_d, w_planner=w_sp,
        demand_decentralized=d_d, demand_planner=d_sp,
        returns_decentralized=s.theta * 2 * d_d, returns_planner=s.theta * 2 * d_sp,
    )
    # The gap is theta (b + k) / 2, so strictness needs k > 0 or b > 0.
    b, _ = _bonus_for(s, mode)
    if s.theta * s.v > 0 and b + s.k > 0:
        assert w_sp < w_d and d_sp > d_d, result
    return result
