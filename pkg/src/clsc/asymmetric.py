"""Equilibrium with heterogeneous manufacturers.

Bonuses do not move demand, so total returns factor out of each
manufacturer's bonus problem and the bonus game is solved first. The
wholesale game then takes the bonuses (and hence the return shares) as data
and reduces to a 2x2 linear system.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from clsc.model import (
    AllocationMode,
    ChainParams,
    DomainError,
    EquilibriumOutcome,
    EquilibriumWarning,
    LeaderDecision,
    MarketParams,
    Regime,
    RegimeError,
    ConvergenceError,
    _check_index,
    _other,
    allocation_share,
    allocation_share_gradient,
    assemble_outcome,
)
from clsc.retailer import reduced_demand, reduced_demand_jacobian, retailer_nash_prices


@dataclass(frozen=True)
class BonusBestResponse:
    value: float
    regime: Regime
    quadratic_coefficients: tuple[float, float, float]


@dataclass(frozen=True)
class BonusNashResult:
    b_1: float
    b_2: float
    iterations: int
    converged: bool
    final_step: float
    regimes: tuple[Regime, Regime]


def _rival_pull(i: int, b_j: float, c: ChainParams) -> float:
    """``beta_j b_j + gamma_r``: the rival's weight in the share denominator."""
    return c.beta(_other(i)) * b_j + c.gamma_r


def bonus_quadratic(i: int, b_j: float, c: ChainParams, *,
                    printed: bool = False) -> tuple[float, float, float]:
    """Coefficients ``(a2, a1, a0)`` of the bonus first-order condition.

    ``printed=True`` returns the coefficients as they appear in the source
    derivation, which were obtained from a share derivative with ``2 gamma_r``
    in place of ``gamma_r``. They are kept only to demonstrate that they fail
    the optimality certificates.
    """
    beta, g, margin = c.beta(i), c.gamma_r, c.margin(i)
    if printed:
        big_c = c.beta(_other(i)) * b_j + 2 * g
        return beta**2, beta * (2 * big_c + g), g * big_c - beta * big_c * margin
    pull = _rival_pull(i, b_j, c)
    return beta**2, 2 * beta * (pull + g), g * pull + g**2 - beta * pull * margin


def _positive_root(a2: float, a1: float, a0: float) -> float:
    """The root of ``a2 x^2 + a1 x + a0`` that is positive when ``a0 < 0 < a2``.

    Uses the cancellation-free form: ``q = -(a1 + sign(a1) sqrt(disc)) / 2``,
    roots ``q / a2`` and ``a0 / q``.
    """
    disc = a1 * a1 - 4 * a2 * a0
    q = -0.5 * (a1 + math.copysign(math.sqrt(disc), a1))
    roots = (q / a2, a0 / q)
    return max(roots)


def bonus_threshold(i: int, b_j: float, c: ChainParams) -> bool:
    """True when a small positive bonus raises manufacturer ``i``'s reverse profit."""
    _check_index(i)
    if b_j < 0:
        raise DomainError(f"rival bonus must be nonnegative, got {b_j}")
    pull = _rival_pull(i, b_j, c)
    return c.beta(i) * c.margin(i) * pull > c.gamma_r * (pull + c.gamma_r)


def _printed_threshold(i: int, b_j: float, c: ChainParams) -> bool:
    return c.beta(i) * c.margin(i) > c.beta(_other(i)) * b_j + 2 * c.gamma_r


def bonus_best_response(i: int, b_j: float, c: ChainParams, *,
                        printed: bool = False) -> BonusBestResponse:
    _check_index(i)
    if b_j < 0:
        raise DomainError(f"rival bonus must be nonnegative, got {b_j}")
    coeffs = bonus_quadratic(i, b_j, c, printed=printed)
    if c.margin(i) <= 0:
        return BonusBestResponse(0.0, Regime.REVERSE_INACTIVE, coeffs)
    active = _printed_threshold(i, b_j, c) if printed else bonus_threshold(i, b_j, c)
    if c.beta(i) == 0 or not active:
        return BonusBestResponse(0.0, Regime.BOUNDARY_ZERO, coeffs)
    return BonusBestResponse(_positive_root(*coeffs), Regime.INTERIOR, coeffs)


def bonus_nash(c: ChainParams, tol: float = 1e-10, max_iter: int = 10_000, *,
               printed: bool = False) -> BonusNashResult:
    """Gauss-Seidel best-response iteration from zero bonuses.

    Stops when the sup-norm of one full sweep's update is at most ``tol``.
    If that never happens the last iterate is returned with
    ``converged=False``.
    """
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise DomainError(f"max_iter must be at least 1, got {max_iter}")
    b = [0.0, 0.0]
    regimes = [Regime.BOUNDARY_ZERO, Regime.BOUNDARY_ZERO]
    step = math.inf
    for it in range(1, max_iter + 1):
        step = 0.0
        for idx, i in enumerate((1, 2)):
            br = bonus_best_response(i, b[1 - idx], c, printed=printed)
            step = max(step, abs(br.value - b[idx]))
            b[idx] = br.value
            regimes[idx] = br.regime
        if step <= tol:
            return BonusNashResult(b[0], b[1], it, True, step, tuple(regimes))
    return BonusNashResult(b[0], b[1], max_iter, False, step, tuple(regimes))


def wholesale_nash(m: MarketParams, c: ChainParams, b: tuple[float, float],
                   shares: tuple[float, float] | None = None) -> tuple[float, float]:
    """Solve both manufacturers' wholesale first-order conditions jointly.

    Row ``i`` of the system is
    ``D_i(w) + (w_i - c_i) dD_i/dw_i + theta (v_i - b_i - k_i) s_i d(D_1 + D_2)/dw_i = 0``,
    linear in ``(w_1, w_2)`` because reduced demands are linear.
    """
    jac = reduced_demand_jacobian(m)
    if shares is None:
        s1 = allocation_share(1, b[0], b[1], c)
        shares = (s1, 1.0 - s1)
    intercept = reduced_demand(0.0, 0.0, m)
    lhs = np.empty((2, 2))
    rhs = np.empty(2)
    for row, i in enumerate((1, 2)):
        j = _other(i)
        reverse = c.theta * (c.v(i) - b[row] - c.k(i)) * shares[row]
        lhs[row, i - 1] = 2 * jac.d(i, i)
        lhs[row, j - 1] = jac.d(i, j)
        rhs[row] = -intercept[row] + c.c(i) * jac.d(i, i) - reverse * jac.total(i)
    if abs(np.linalg.det(lhs)) < 1e-12:
        raise DomainError("wholesale first-order system is singular")
    w = np.linalg.solve(lhs, rhs)
    return float(w[0]), float(w[1])


def leader_foc_residuals(dec: LeaderDecision, m: MarketParams, c: ChainParams,
                         shares: tuple[float, float] | None = None
                         ) -> tuple[float, float, float, float]:
    """``(wholesale_1, wholesale_2, bonus_1, bonus_2)`` first-order values.

    With pinned ``shares`` the bonus entries reduce to ``-s_i``, since a
    pinned share does not respond to the bonus.
    """
    jac = reduced_demand_jacobian(m)
    d = reduced_demand(dec.w_1, dec.w_2, m)
    if shares is None:
        s1 = allocation_share(1, dec.b_1, dec.b_2, c)
        s = (s1, 1.0 - s1)
        grads = tuple(allocation_share_gradient(i, dec.b_1, dec.b_2, c) for i in (1, 2))
    else:
        s, grads = shares, (0.0, 0.0)
    out = []
    for i in (1, 2):
        net = c.v(i) - dec.b(i) - c.k(i)
        out.append(d[i - 1] + (dec.w(i) - c.c(i)) * jac.d(i, i)
                   + c.theta * net * s[i - 1] * jac.total(i))
    for i in (1, 2):
        net = c.v(i) - dec.b(i) - c.k(i)
        out.append(-s[i - 1] + net * grads[i - 1])
    return tuple(out)


def _proportional_bonus(c: ChainParams) -> BonusNashResult:
    # A pinned share makes reverse profit strictly decreasing in the bonus.
    regimes = tuple(
        Regime.REVERSE_INACTIVE if c.margin(i) <= 0 else Regime.BOUNDARY_ZERO for i in (1, 2)
    )
    return BonusNashResult(0.0, 0.0, 0, True, 0.0, regimes)


def solve_asymmetric(m: MarketParams, c: ChainParams, tol: float = 1e-10,
                     max_iter: int = 10_000, *,
                     mode: AllocationMode = AllocationMode.INERTIA_RESPONSIVENESS,
                     printed: bool = False) -> EquilibriumOutcome:
    """Full subgame-perfect equilibrium: bonuses, then wholesale, then retail.

    Under ``PROPORTIONAL`` mode both shares are pinned at one half and
    bonuses are zero.
    """
    mode = AllocationMode(mode)
    if mode is AllocationMode.PROPORTIONAL:
        bonus, shares = _proportional_bonus(c), (0.5, 0.5)
    else:
        bonus, shares = bonus_nash(c, tol, max_iter, printed=printed), None
    if not bonus.converged:
        raise ConvergenceError(
            f"bonus best-response iteration did not converge in {bonus.iterations} "
            f"iterations (last step {bonus.final_step:.3g})"
        )
    w1, w2 = wholesale_nash(m, c, (bonus.b_1, bonus.b_2), shares=shares)
    prices = retailer_nash_prices(w1, w2, m)
    dec = LeaderDecision(w1, w2, bonus.b_1, bonus.b_2)
    outcome = assemble_outcome(dec, prices, m, c, regimes=bonus.regimes, shares=shares)
    residuals = leader_foc_residuals(dec, m, c, shares=shares)
    # Bonus conditions only bind for interior firms.
    binding = [residuals[0], residuals[1]] + [
        r for r, reg in zip(residuals[2:], bonus.regimes) if reg is Regime.INTERIOR
    ]
    worst = max(abs(r) for r in binding)
    if worst > 1e-7:
        note = f"first-order residual {worst:.3g} exceeds 1e-7"
        outcome = EquilibriumOutcome(**{**outcome.__dict__, "notes": outcome.notes + (note,)})
    for note in outcome.notes:
        warnings.warn(note, EquilibriumWarning, stacklevel=2)
    return outcome


def bonus_comparative_statics(i: int, b: tuple[float, float],
                              c: ChainParams) -> tuple[float, float]:
    """``(d BR_i / d v_i, d BR_i / d k_i)`` holding the rival bonus fixed."""
    _check_index(i)
    b_i, b_j = (b[0], b[1]) if i == 1 else (b[1], b[0])
    if not bonus_threshold(i, b_j, c) or c.margin(i) <= 0:
        raise RegimeError(f"manufacturer {i} is not in the interior bonus regime")
    beta = c.beta(i)
    pull = _rival_pull(i, b_j, c)
    f_b = 2 * beta**2 * b_i + 2 * beta * (pull + c.gamma_r)
    return beta * pull / f_b, -beta * pull / f_b
