"""Brute-force certificates for the closed-form solutions.

Nothing here calls the closed-form leader-stage solvers. Certificates take a
candidate point, evaluate the model-core profit functions on a deviation
grid, then refine the best grid point by golden-section search. The retail
stage is recomputed from the retailer closed form because that is what a
deviating leader anticipates; that closed form is itself certified by
:func:`iterate_retailer_best_response`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from clsc import model
from clsc.model import (
    ChainParams,
    LeaderDecision,
    MarketParams,
    ParameterError,
    RetailPrices,
    allocation_share,
    demand,
    manufacturer_profit,
    retailer_profit,
)
from clsc.asymmetric import bonus_best_response, bonus_comparative_statics
from clsc.retailer import reduced_demand_jacobian, retailer_nash_prices
from clsc.symmetric import coupling_slopes, symmetric_wholesale

DEFAULT_SEED = 42
INV_PHI = (math.sqrt(5) - 1) / 2

RETAIL_TOL = 1e-8
LEADER_TOL = 1e-7


class Variable(str, Enum):
    RETAIL_PRICE = "RETAIL_PRICE"
    WHOLESALE_PRICE = "WHOLESALE_PRICE"
    BONUS = "BONUS"


@dataclass(frozen=True)
class DeviationReport:
    firm: str
    variable: Variable
    best_deviation_gain: float
    grid_points: int
    search_window: tuple[float, float]
    tolerance: float
    best_deviation: float

    @property
    def passed(self) -> bool:
        return self.best_deviation_gain <= self.tolerance


def rng(seed: int = DEFAULT_SEED) -> np.random.Generator:
    """Counter-based (Philox) generator so draws are reproducible bit-for-bit."""
    return np.random.Generator(np.random.Philox(seed))


def golden_section_max(f: Callable[[float], float], lo: float, hi: float,
                       tol: float = 1e-10, max_iter: int = 200) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    a, b = lo, hi
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
    candidates = [(f(a), a), (f1, x1), (f2, x2), (f(b), b)]
    fx, x = max(candidates)
    return x, fx


def polish_max(f: Callable[[float], float], x: float, lo: float, hi: float,
               width: float, iters: int = 80) -> float:
    """Sharpen a golden-section maximizer ``x`` of a smooth concave ``f``.

    Comparing profit levels near a flat top is limited by rounding in ``f``
    itself. The sign of ``f(y + h) - f(y - h)`` with a moderate ``h`` is not,
    so bisecting on it pins the maximizer far more tightly.
    """
    a, b = max(lo, x - width), min(hi, x + width)
    h = width / 4
    for _ in range(iters):
        mid = 0.5 * (a + b)
        if f(mid + h) > f(mid - h):
            a = mid
        else:
            b = mid
        if b - a <= 1e-15 * max(1.0, abs(mid)):
            break
    return 0.5 * (a + b)


def _deviation_search(profit: Callable[[float], float], candidate: float,
                      lo: float, hi: float, grid: int) -> tuple[float, float]:
    """Best point of ``profit`` on a grid over ``[lo, hi]`` plus local refinement."""
    if grid < 101:
        raise ParameterError("grid", f"need at least 101 points, got {grid}")
    if hi <= lo:
        return candidate, profit(candidate)
    xs = np.linspace(lo, hi, grid)
    values = np.array([profit(float(x)) for x in xs])
    k = int(np.argmax(values))
    left = float(xs[max(k - 1, 0)])
    right = float(xs[min(k + 1, grid - 1)])
    x, fx = golden_section_max(profit, left, right)
    if values[k] > fx:
        return float(xs[k]), float(values[k])
    return x, fx


def _relative_gain(best: float, base: float) -> float:
    return (best - base) / max(1.0, abs(base))


def _price_window(x: float) -> tuple[float, float]:
    half = 0.3 * abs(x) if x != 0 else 1.0
    return x - half, x + half


# ---------------------------------------------------------------------------
# Retail stage
# ---------------------------------------------------------------------------


def _retailer_br_window(i: int, p_rival: float, m: MarketParams) -> tuple[float, float]:
    j = 2 if i == 1 else 1
    choke = (m.d_bar(i) + m.epsilon * m.alpha(j) * p_rival) / m.alpha(i)
    return 0.0, max(choke, 0.0)


def iterate_retailer_best_response(w: tuple[float, float], m: MarketParams,
                                   c: ChainParams, tol: float = 1e-12,
                                   max_iter: int = 500
                                   ) -> tuple[RetailPrices, int, bool]:
    """Retail equilibrium by alternating numerical best responses.

    Each retailer maximizes its own profit by golden-section search over
    ``[0, choke price]``, holding the rival price fixed. Returns the prices,
    the number of sweeps and whether the last sweep moved less than ``tol``
    relative to the price level. Each golden-section optimum is sharpened
    with :func:`polish_max`.
    """
    p = [0.0, 0.0]
    for it in range(1, max_iter + 1):
        step = 0.0
        for idx, i in enumerate((1, 2)):
            def profit(x, idx=idx, i=i):
                prices = [p[0], p[1]]
                prices[idx] = x
                return retailer_profit(i, RetailPrices(*prices), w[idx], m, c)

            lo, hi = _retailer_br_window(i, p[1 - idx], m)
            x, _ = golden_section_max(profit, lo, hi, tol=1e-12)
            x = polish_max(profit, x, lo, hi, width=1e-3 * max(1.0, hi - lo))
            step = max(step, abs(x - p[idx]) / max(1.0, abs(x)))
            p[idx] = x
        if step <= tol:
            return RetailPrices(*p), it, True
    return RetailPrices(*p), max_iter, False


def verify_retailer_nash(w: tuple[float, float], m: MarketParams, c: ChainParams,
                         grid: int = 4001,
                         candidate: RetailPrices | None = None
                         ) -> tuple[DeviationReport, DeviationReport]:
    """Unilateral retail-price deviations around the closed-form prices."""
    p = retailer_nash_prices(w[0], w[1], m) if candidate is None else candidate
    reports = []
    for idx, i in enumerate((1, 2)):
        def profit(x, idx=idx, i=i):
            prices = [p.p_1, p.p_2]
            prices[idx] = max(x, 0.0)
            return retailer_profit(i, RetailPrices(*prices), w[idx], m, c)

        base = profit(p.p(i))
        lo, hi = _price_window(p.p(i))
        x, best = _deviation_search(profit, p.p(i), max(lo, 0.0), hi, grid)
        reports.append(DeviationReport(
            firm=f"R{i}", variable=Variable.RETAIL_PRICE,
            best_deviation_gain=_relative_gain(best, base), grid_points=grid,
            search_window=(max(lo, 0.0), hi), tolerance=RETAIL_TOL, best_deviation=x,
        ))
    return reports[0], reports[1]


# ---------------------------------------------------------------------------
# Leader stage
# ---------------------------------------------------------------------------


def _leader_profit(i: int, dec: LeaderDecision, m: MarketParams, c: ChainParams,
                   share: float | None) -> float:
    prices = retailer_nash_prices(dec.w_1, dec.w_2, m)
    d1 = demand(1, prices.p_1, prices.p_2, m)
    d2 = demand(2, prices.p_1, prices.p_2, m)
    return manufacturer_profit(i, dec, d1, d2, m, c, share=share)


def _with(dec: LeaderDecision, **changes) -> LeaderDecision:
    return LeaderDecision(**{**dec.__dict__, **changes})


def bonus_window(i: int, dec: LeaderDecision, c: ChainParams) -> tuple[float, float]:
    """``[0, v_i - k_i]``; bonuses above the margin are dominated.

    When the margin is nonpositive the window is widened to a positive range
    so the certificate actually tests positive bonuses.
    """
    margin = c.margin(i)
    if margin > 0:
        return 0.0, margin
    return 0.0, max(1.0, abs(c.v(i)) + c.k(i), dec.b(2 if i == 1 else 1))


def verify_bonus_optimum(i: int, dec: LeaderDecision, m: MarketParams,
                         c: ChainParams, grid: int = 4001) -> DeviationReport:
    """Unilateral bonus deviations, rival bonus and both wholesale prices fixed."""
    model._check_index(i)
    name = f"b_{i}"

    def profit(x):
        return _leader_profit(i, _with(dec, **{name: max(x, 0.0)}), m, c, None)

    base = profit(dec.b(i))
    lo, hi = bonus_window(i, dec, c)
    x, best = _deviation_search(profit, dec.b(i), lo, hi, grid)
    return DeviationReport(
        firm=f"M{i}", variable=Variable.BONUS,
        best_deviation_gain=_relative_gain(best, base), grid_points=grid,
        search_window=(lo, hi), tolerance=LEADER_TOL, best_deviation=x,
    )


def verify_wholesale_optimum(i: int, dec: LeaderDecision, m: MarketParams,
                             c: ChainParams, grid: int = 4001,
                             share: float | None = None) -> DeviationReport:
    """Unilateral wholesale deviations with the retail stage re-solved.

    The rival's wholesale price and both bonuses stay fixed. ``share`` pins
    manufacturer ``i``'s return share (0.5 under proportional allocation).
    """
    model._check_index(i)
    name = f"w_{i}"

    def profit(x):
        return _leader_profit(i, _with(dec, **{name: x}), m, c, share)

    base = profit(dec.w(i))
    lo, hi = _price_window(dec.w(i))
    x, best = _deviation_search(profit, dec.w(i), lo, hi, grid)
    return DeviationReport(
        firm=f"M{i}", variable=Variable.WHOLESALE_PRICE,
        best_deviation_gain=_relative_gain(best, base), grid_points=grid,
        search_window=(lo, hi), tolerance=LEADER_TOL, best_deviation=x,
    )


def verify_joint_wholesale_optimum(dec: LeaderDecision, m: MarketParams,
                                   c: ChainParams, grid: int = 4001,
                                   share: float | None = 0.5) -> DeviationReport:
    """Deviation along the symmetric path: both wholesale prices move together.

    This certifies the symmetric closed form as the maximizer of manufacturer
    1's profit when its rival mirrors every wholesale change. It is a weaker
    statement than :func:`verify_wholesale_optimum`.
    """
    if dec.w_1 != dec.w_2 or dec.b_1 != dec.b_2:
        raise ParameterError("dec", "joint deviation needs a symmetric decision")

    def profit(x):
        return _leader_profit(1, _with(dec, w_1=x, w_2=x), m, c, share)

    base = profit(dec.w_1)
    lo, hi = _price_window(dec.w_1)
    x, best = _deviation_search(profit, dec.w_1, lo, hi, grid)
    return DeviationReport(
        firm="M1+M2", variable=Variable.WHOLESALE_PRICE,
        best_deviation_gain=_relative_gain(best, base), grid_points=grid,
        search_window=(lo, hi), tolerance=LEADER_TOL, best_deviation=x,
    )


# ---------------------------------------------------------------------------
# First-order conditions and derivative checks
# ---------------------------------------------------------------------------


def central_difference(f: Callable[[float], float], x: float, step: float) -> float:
    return (f(x + step) - f(x - step)) / (2 * step)


def foc_residuals(dec: LeaderDecision, m: MarketParams, c: ChainParams,
                  step: float = 1e-5,
                  share: float | None = None) -> tuple[float, float, float, float]:
    """Leader first-order values ``(dpi_1/dw_1, dpi_2/dw_2, bonus_1, bonus_2)``.

    Wholesale entries are central differences of the full leader profit with
    the retail stage re-solved (exact up to rounding, since the profit is
    quadratic in ``w_i``), so they do not share code with the analytic
    conditions in :func:`clsc.asymmetric.leader_foc_residuals`. Bonus entries are the analytic bonus conditions
    ``-s_i + (v_i - b_i - k_i) ds_i/db_i``.
    """
    out = []
    for i in (1, 2):
        name = f"w_{i}"
        out.append(central_difference(
            lambda x: _leader_profit(i, _with(dec, **{name: x}), m, c, share),
            dec.w(i), step))
    for i in (1, 2):
        if share is None:
            s_i = allocation_share(i, dec.b_1, dec.b_2, c)
            grad = model.allocation_share_gradient(i, dec.b_1, dec.b_2, c)
        else:
            # A pinned share does not respond to the bonus.
            s_i, grad = share, 0.0
        out.append(-s_i + (c.v(i) - dec.b(i) - c.k(i)) * grad)
    return tuple(out)


def _rel_err(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(1.0, abs(analytic))


def _check_allocation_gradient(point: dict, step: float) -> float:
    c = point["chain"]
    b1, b2 = point["b"]
    errs = []
    for i in (1, 2):
        def share(x, i=i):
            return allocation_share(i, x, b2, c) if i == 1 else allocation_share(i, b1, x, c)
        own = b1 if i == 1 else b2
        if own >= step:
            fd = central_difference(share, own, step)
        else:
            # One-sided at the b >= 0 boundary.
            fd = (share(own + step) - share(own)) / step
        analytic = model.allocation_share_gradient(i, b1, b2, c)
        errs.append(abs(analytic - fd) / abs(analytic) if analytic else abs(fd))
    return max(errs)


def _check_demand_jacobian(point: dict, step: float) -> float:
    m = point["market"]
    w1, w2 = point["w"]
    jac = reduced_demand_jacobian(m)
    errs = []
    for k in (1, 2):
        for i in (1, 2):
            def dk(x, i=i, k=k):
                ws = (x, w2) if i == 1 else (w1, x)
                prices = retailer_nash_prices(ws[0], ws[1], m)
                # Unclamped demand: the jacobian describes the linear region.
                j = 2 if k == 1 else 1
                return (m.d_bar(k) - m.alpha(k) * prices.p(k)
                        + m.epsilon * m.alpha(j) * prices.p(j))
            fd = central_difference(dk, w1 if i == 1 else w2, step)
            errs.append(_rel_err(jac.d(k, i), fd))
    return max(errs)


def _check_coupling(point: dict, step: float) -> float:
    s, mode = point["scenario"], point["mode"]
    dv, dtheta = coupling_slopes(s, mode)
    fd_v = central_difference(lambda x: symmetric_wholesale(s.replace(v=x), mode), s.v, step)
    fd_t = central_difference(
        lambda x: symmetric_wholesale(s.replace(theta=x), mode), s.theta, step)
    return max(_rel_err(dv, fd_v), _rel_err(dtheta, fd_t))


def _check_bonus_statics(point: dict, step: float) -> float:
    c, i, b = point["chain"], point["i"], point["b"]
    b_j = b[1] if i == 1 else b[0]
    dv, dk = bonus_comparative_statics(i, b, c)

    def br(**change):
        return bonus_best_response(i, b_j, ChainParams(**{**c.__dict__, **change})).value

    vi, ki = f"v_{i}", f"k_{i}"
    fd_v = (br(**{vi: c.v(i) + step}) - br(**{vi: c.v(i) - step})) / (2 * step)
    fd_k = (br(**{ki: c.k(i) + step}) - br(**{ki: c.k(i) - step})) / (2 * step)
    return max(_rel_err(dv, fd_v), _rel_err(dk, fd_k))


GRADIENT_FIELDS: dict[str, Callable[[dict, float], float]] = {
    "allocation_gradient": _check_allocation_gradient,
    "demand_jacobian": _check_demand_jacobian,
    "coupling_slopes": _check_coupling,
    "bonus_statics": _check_bonus_statics,
}


def gradient_check(field: str, point: dict, step: float) -> float:
    """Max relative error between an analytic derivative and central differences.

    ``point`` carries whatever the field needs:

    * ``allocation_gradient``: ``chain``, ``b``
    * ``demand_jacobian``: ``market``, ``w``
    * ``coupling_slopes``: ``scenario``, ``mode``
    * ``bonus_statics``: ``chain``, ``i``, ``b``
    """
    if step <= 0:
        raise ParameterError("step", f"must be positive, got {step}")
    try:
        check = GRADIENT_FIELDS[field]
    except KeyError:
        raise ParameterError("field", f"unknown gradient field {field!r}") from None
    return check(point, step)
