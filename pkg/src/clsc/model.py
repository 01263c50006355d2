"""Domain types and model primitives for the two-manufacturer, two-retailer chain.

Indices are 1-based throughout (firm 1 and firm 2) so that call sites read
like the model they implement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from enum import Enum


class ModelError(ValueError):
    """Base class for all input and regime errors raised by the package."""


class ParameterError(ModelError):
    """An input parameter is outside its admissible range."""

    def __init__(self, name: str, message: str):
        self.name = name
        super().__init__(f"{name}: {message}")


class DomainError(ModelError):
    """A computation was requested outside the region where it is defined."""


class RegimeError(ModelError):
    """A formula was requested in a regime where it does not apply."""


class ConvergenceError(ModelError):
    """An iterative solver stopped before meeting its tolerance."""


class EquilibriumWarning(UserWarning):
    """An equilibrium was computed but sits at the edge of the modelled region."""


class Regime(str, Enum):
    INTERIOR = "INTERIOR"
    BOUNDARY_ZERO = "BOUNDARY_ZERO"
    REVERSE_INACTIVE = "REVERSE_INACTIVE"


class AllocationMode(str, Enum):
    """How returns are split when both manufacturers post the same bonus.

    ``PROPORTIONAL`` pins each share at one half regardless of bonuses;
    ``INERTIA_RESPONSIVENESS`` uses the bonus-sensitive rule with inertia.
    """

    PROPORTIONAL = "proportional"
    INERTIA_RESPONSIVENESS = "inertia"


# Tolerance used when flagging demands that sit on the (.)^+ clamp.
CLAMP_TOL = 1e-9


def _check_index(i: int) -> int:
    if i not in (1, 2):
        raise ParameterError("i", f"firm index must be 1 or 2, got {i!r}")
    return i


def _other(i: int) -> int:
    return 2 if i == 1 else 1


def _require(name: str, value: float, ok: bool, bound: str) -> None:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ParameterError(name, f"expected a number, got {value!r}")
    if math.isnan(value) or not ok:
        raise ParameterError(name, f"must satisfy {bound}, got {value!r}")


@dataclass(frozen=True)
class MarketParams:
    d_bar_1: float
    d_bar_2: float
    alpha_1: float
    alpha_2: float
    epsilon: float

    def __post_init__(self):
        for name in ("d_bar_1", "d_bar_2", "alpha_1", "alpha_2"):
            value = getattr(self, name)
            _require(name, value, value > 0 and math.isfinite(value), "0 < value < inf")
        _require("epsilon", self.epsilon, 0 <= self.epsilon < 1, "0 <= epsilon < 1")

    def d_bar(self, i: int) -> float:
        return self.d_bar_1 if _check_index(i) == 1 else self.d_bar_2

    def alpha(self, i: int) -> float:
        return self.alpha_1 if _check_index(i) == 1 else self.alpha_2


@dataclass(frozen=True)
class ChainParams:
    c_1: float
    c_2: float
    v_1: float
    v_2: float
    k_1: float
    k_2: float
    theta: float
    beta_1: float
    beta_2: float
    gamma_r: float
    o_m_1: float = 0.0
    o_m_2: float = 0.0
    o_r_1: float = 0.0
    o_r_2: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            _require(f.name, value, math.isfinite(value), "a finite value")
        _require("theta", self.theta, 0 < self.theta < 1, "0 < theta < 1")
        _require("gamma_r", self.gamma_r, self.gamma_r > 0, "gamma_r > 0")
        for name in ("beta_1", "beta_2", "c_1", "c_2", "k_1", "k_2",
                     "o_m_1", "o_m_2", "o_r_1", "o_r_2"):
            value = getattr(self, name)
            _require(name, value, value >= 0, f"{name} >= 0")

    def c(self, i: int) -> float:
        return self.c_1 if _check_index(i) == 1 else self.c_2

    def v(self, i: int) -> float:
        return self.v_1 if _check_index(i) == 1 else self.v_2

    def k(self, i: int) -> float:
        return self.k_1 if _check_index(i) == 1 else self.k_2

    def beta(self, i: int) -> float:
        return self.beta_1 if _check_index(i) == 1 else self.beta_2

    def o_m(self, i: int) -> float:
        return self.o_m_1 if _check_index(i) == 1 else self.o_m_2

    def o_r(self, i: int) -> float:
        return self.o_r_1 if _check_index(i) == 1 else self.o_r_2

    def margin(self, i: int) -> float:
        """Net remanufacturing value ``v_i - k_i`` before any bonus."""
        return self.v(i) - self.k(i)


@dataclass(frozen=True)
class LeaderDecision:
    """Stage-1 strategy profile: wholesale prices and take-back bonuses."""

    w_1: float
    w_2: float
    b_1: float = 0.0
    b_2: float = 0.0

    def __post_init__(self):
        for name in ("b_1", "b_2"):
            value = getattr(self, name)
            _require(name, value, value >= 0, f"{name} >= 0")

    def w(self, i: int) -> float:
        return self.w_1 if _check_index(i) == 1 else self.w_2

    def b(self, i: int) -> float:
        return self.b_1 if _check_index(i) == 1 else self.b_2


@dataclass(frozen=True)
class RetailPrices:
    p_1: float
    p_2: float

    def __post_init__(self):
        for name in ("p_1", "p_2"):
            value = getattr(self, name)
            _require(name, value, value >= 0, f"{name} >= 0")

    def p(self, i: int) -> float:
        return self.p_1 if _check_index(i) == 1 else self.p_2


@dataclass(frozen=True)
class EquilibriumOutcome:
    """Everything observable at a subgame-perfect equilibrium.

    ``bonus_regime`` holds one entry per manufacturer; under symmetry both
    entries are equal. ``operating_flags`` are ``(R1, R2, M1, M2)`` and are
    true when that firm's net profit is nonnegative, i.e. it would choose to
    operate.
    """

    decision: LeaderDecision
    prices: RetailPrices
    demand_1: float
    demand_2: float
    share_1: float
    share_2: float
    q_tot: float
    q_r_1: float
    q_r_2: float
    profit_r_1: float
    profit_r_2: float
    profit_m_1: float
    profit_m_2: float
    bonus_regime: tuple[Regime, Regime]
    operating_flags: tuple[bool, bool, bool, bool]
    notes: tuple[str, ...] = field(default=())

    @property
    def regime(self) -> str:
        """Single token for the pair of regimes, ``A|B`` when they differ."""
        r1, r2 = self.bonus_regime
        return r1.value if r1 == r2 else f"{r1.value}|{r2.value}"


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------


def demand(i: int, p1: float, p2: float, m: MarketParams) -> float:
    """Linear differentiated demand, clamped at zero."""
    _check_index(i)
    j = _other(i)
    own, rival = (p1, p2) if i == 1 else (p2, p1)
    return max(0.0, m.d_bar(i) - m.alpha(i) * own + m.epsilon * m.alpha(j) * rival)


def _check_bonuses(b1: float, b2: float) -> None:
    if b1 < 0 or b2 < 0:
        raise DomainError(f"bonuses must be nonnegative, got ({b1}, {b2})")


def allocation_share(i: int, b1: float, b2: float, c: ChainParams) -> float:
    """Fraction of total returns collected by manufacturer ``i``."""
    _check_index(i)
    _check_bonuses(b1, b2)
    denom = c.beta_1 * b1 + c.beta_2 * b2 + 2.0 * c.gamma_r
    own = c.beta(i) * (b1 if i == 1 else b2)
    return (own + c.gamma_r) / denom


def allocation_share_gradient(i: int, b1: float, b2: float, c: ChainParams) -> float:
    """Derivative of ``allocation_share(i, ...)`` with respect to ``b_i``.

    Direct differentiation of the share gives ``beta_i (beta_j b_j + gamma_r) / B**2``
    with ``B = beta_1 b_1 + beta_2 b_2 + 2 gamma_r``.
    """
    _check_index(i)
    _check_bonuses(b1, b2)
    j = _other(i)
    b_j = b2 if i == 1 else b1
    denom = c.beta_1 * b1 + c.beta_2 * b2 + 2.0 * c.gamma_r
    return c.beta(i) * (c.beta(j) * b_j + c.gamma_r) / denom**2


def total_returns(d1: float, d2: float, theta: float) -> float:
    return theta * (d1 + d2)


def retailer_profit(i: int, p: RetailPrices, w_i: float,
                    m: MarketParams, c: ChainParams) -> float:
    return (p.p(i) - w_i) * demand(i, p.p_1, p.p_2, m) - c.o_r(i)


def manufacturer_profit(i: int, dec: LeaderDecision, d1: float, d2: float,
                        m: MarketParams, c: ChainParams,
                        share: float | None = None) -> float:
    """Forward margin plus reverse-channel margin, net of fixed cost.

    ``d1`` and ``d2`` must already be the retail-stage equilibrium demands.
    Pass ``share`` to pin the return share (e.g. 0.5 under proportional
    allocation) instead of evaluating the inertia-responsiveness rule.
    """
    _check_index(i)
    s_i = allocation_share(i, dec.b_1, dec.b_2, c) if share is None else share
    d_i = d1 if i == 1 else d2
    forward = (dec.w(i) - c.c(i)) * d_i
    reverse = (c.v(i) - dec.b(i) - c.k(i)) * total_returns(d1, d2, c.theta) * s_i
    return forward + reverse - c.o_m(i)


def reverse_viability(i: int, c: ChainParams) -> bool:
    """True when collecting returns can create value (``v_i - k_i > 0``)."""
    return c.margin(i) > 0


def assemble_outcome(dec: LeaderDecision, prices: RetailPrices,
                     m: MarketParams, c: ChainParams,
                     regimes: tuple[Regime, Regime],
                     shares: tuple[float, float] | None = None) -> EquilibriumOutcome:
    """Evaluate every primitive at a solved ``(dec, prices)`` pair."""
    d1 = demand(1, prices.p_1, prices.p_2, m)
    d2 = demand(2, prices.p_1, prices.p_2, m)
    if shares is None:
        s1 = allocation_share(1, dec.b_1, dec.b_2, c)
        s2 = 1.0 - s1
    else:
        s1, s2 = shares
    q_tot = total_returns(d1, d2, c.theta)
    q_r_1 = q_tot * s1
    q_r_2 = q_tot - q_r_1
    pr1 = retailer_profit(1, prices, dec.w_1, m, c)
    pr2 = retailer_profit(2, prices, dec.w_2, m, c)
    pm1 = manufacturer_profit(1, dec, d1, d2, m, c, share=s1)
    pm2 = manufacturer_profit(2, dec, d1, d2, m, c, share=s2)
    outcome = EquilibriumOutcome(
        decision=dec, prices=prices,
        demand_1=d1, demand_2=d2, share_1=s1, share_2=s2,
        q_tot=q_tot, q_r_1=q_r_1, q_r_2=q_r_2,
        profit_r_1=pr1, profit_r_2=pr2, profit_m_1=pm1, profit_m_2=pm2,
        bonus_regime=regimes,
        operating_flags=(pr1 >= 0, pr2 >= 0, pm1 >= 0, pm2 >= 0),
    )
    return _with_notes(outcome, m, c)


def validation_notes(outcome: EquilibriumOutcome, m: MarketParams,
                     c: ChainParams) -> list[str]:
    """Conditions under which an outcome leaves the modelled interior region."""
    notes = []
    dec = outcome.decision
    p = outcome.prices
    for i in (1, 2):
        # Unclamped demand tells us whether the clamp is binding.
        j = _other(i)
        raw = m.d_bar(i) - m.alpha(i) * p.p(i) + m.epsilon * m.alpha(j) * p.p(j)
        if raw <= CLAMP_TOL:
            notes.append(f"demand_{i} at or below the zero clamp ({raw:.3g})")
        if dec.w(i) < 0:
            notes.append(f"negative wholesale price w_{i}={dec.w(i):.6g}")
        if dec.w(i) < c.c(i):
            notes.append(f"loss-leading wholesale price w_{i} < c_{i}")
    labels = ("retailer 1", "retailer 2", "manufacturer 1", "manufacturer 2")
    for label, ok in zip(labels, outcome.operating_flags):
        if not ok:
            notes.append(f"{label} earns negative profit and would not operate")
    return notes


def _with_notes(outcome: EquilibriumOutcome, m: MarketParams,
                c: ChainParams) -> EquilibriumOutcome:
    notes = validation_notes(outcome, m, c)
    if not notes:
        return outcome
    return EquilibriumOutcome(**{**outcome.__dict__, "notes": tuple(notes)})
