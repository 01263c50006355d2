"""Stage-2 retailer pricing game and the reduced-form demands manufacturers face."""

from __future__ import annotations

from dataclasses import dataclass

from clsc.model import DomainError, MarketParams, RetailPrices


@dataclass(frozen=True)
class ReducedDemandJacobian:
    dD1_dw1: float
    dD1_dw2: float
    dD2_dw1: float
    dD2_dw2: float
    delta: float

    def d(self, k: int, i: int) -> float:
        """Partial of reduced demand ``D_k`` with respect to ``w_i``."""
        return {
            (1, 1): self.dD1_dw1, (1, 2): self.dD1_dw2,
            (2, 1): self.dD2_dw1, (2, 2): self.dD2_dw2,
        }[(k, i)]

    def total(self, i: int) -> float:
        """Effect of ``w_i`` on total demand ``D_1 + D_2``."""
        return self.d(1, i) + self.d(2, i)


def _delta(m: MarketParams) -> float:
    # MarketParams already enforces this; the check guards hand-built inputs.
    if not 0 <= m.epsilon < 1:
        raise DomainError(f"epsilon must lie in [0, 1) for a unique retail equilibrium, got {m.epsilon}")
    return 4.0 - m.epsilon**2


def retailer_nash_prices(w1: float, w2: float, m: MarketParams) -> RetailPrices:
    """Closed-form Bertrand-Nash retail prices for given wholesale prices."""
    delta = _delta(m)
    e = m.epsilon
    x1 = m.d_bar_1 + m.alpha_1 * w1
    x2 = m.d_bar_2 + m.alpha_2 * w2
    p1 = (2.0 * x1 + e * x2) / (m.alpha_1 * delta)
    p2 = (e * x1 + 2.0 * x2) / (m.alpha_2 * delta)
    return RetailPrices(p1, p2)


def reduced_demand(w1: float, w2: float, m: MarketParams) -> tuple[float, float]:
    """Demands at the retail equilibrium, as linear functions of wholesale prices.

    These are not clamped: the linear form is what enters the leader-stage
    conditions, and it agrees with ``demand`` wherever demand is positive.
    """
    delta = _delta(m)
    e = m.epsilon
    d1 = (2 * m.d_bar_1 + e * m.d_bar_2 - m.alpha_1 * (2 - e**2) * w1 + e * m.alpha_2 * w2) / delta
    d2 = (e * m.d_bar_1 + 2 * m.d_bar_2 + e * m.alpha_1 * w1 - m.alpha_2 * (2 - e**2) * w2) / delta
    return d1, d2


def reduced_demand_jacobian(m: MarketParams) -> ReducedDemandJacobian:
    delta = _delta(m)
    e = m.epsilon
    return ReducedDemandJacobian(
        dD1_dw1=-m.alpha_1 * (2 - e**2) / delta,
        dD1_dw2=e * m.alpha_2 / delta,
        dD2_dw1=e * m.alpha_1 / delta,
        dD2_dw2=-m.alpha_2 * (2 - e**2) / delta,
        delta=delta,
    )
