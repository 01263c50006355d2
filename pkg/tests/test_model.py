import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from clsc import (
    ChainParams,
    DomainError,
    LeaderDecision,
    MarketParams,
    ParameterError,
    RetailPrices,
    SymmetricScenario,
    allocation_share,
    allocation_share_gradient,
    demand,
    manufacturer_profit,
    retailer_profit,
    reverse_viability,
    total_returns,
)

bonus = st.floats(min_value=0.0, max_value=200.0)
beta = st.floats(min_value=0.01, max_value=5.0)
gamma = st.floats(min_value=0.1, max_value=50.0)


def chain_with(**kw):
    return ChainParams(**{**SymmetricScenario.baseline().chain().__dict__, **kw})


class TestParams:
    @pytest.mark.parametrize("field,value", [
        ("d_bar_1", 0.0), ("alpha_2", -1.0), ("epsilon", 1.0), ("epsilon", -0.1),
    ])
    def test_market_bounds(self, field, value):
        kw = dict(d_bar_1=200.0, d_bar_2=200.0, alpha_1=4.0, alpha_2=4.0, epsilon=0.4)
        kw[field] = value
        with pytest.raises(ParameterError, match=field):
            MarketParams(**kw)

    @pytest.mark.parametrize("field,value", [
        ("theta", 0.0), ("theta", 1.0), ("gamma_r", 0.0), ("beta_1", -0.1),
        ("k_2", -1.0), ("o_m_1", -1.0), ("c_1", math.nan),
    ])
    def test_chain_bounds(self, chain, field, value):
        with pytest.raises(ParameterError, match=field):
            ChainParams(**{**chain.__dict__, field: value})

    def test_negative_bonus_rejected(self):
        with pytest.raises(ParameterError, match="b_2"):
            LeaderDecision(40.0, 40.0, 0.0, -1.0)

    def test_bad_index(self, market):
        with pytest.raises(ParameterError):
            demand(3, 10.0, 10.0, market)


class TestDemand:
    def test_zero_prices_give_potential(self, market):
        assert demand(1, 0.0, 0.0, market) == 200.0

    def test_symmetric_point(self, market, base):
        p = 58.854166666666664
        expected = (base.d_bar - base.alpha * (1 - base.epsilon) * p)  # hand: 200 - 2.4 p
        assert demand(1, p, p, market) == pytest.approx(expected, abs=1e-12)
        assert demand(1, p, p, market) == pytest.approx(58.75, abs=1e-9)

    def test_clamp(self, market):
        assert demand(1, 1000.0, 0.0, market) == 0.0

    @given(st.floats(0, 40), st.floats(0, 40), st.floats(0, 40), st.floats(0, 40),
           st.floats(0.1, 2.0))
    def test_linear_on_unclamped_region(self, a1, a2, b1, b2, t):
        m = MarketParams(500.0, 500.0, 4.0, 4.0, 0.4)
        # All arguments stay well inside the unclamped region.
        lhs = demand(1, a1 + b1, a2 + b2, m) - m.d_bar_1
        rhs = (demand(1, a1, a2, m) - m.d_bar_1) + (demand(1, b1, b2, m) - m.d_bar_1)
        assert lhs == pytest.approx(rhs, abs=1e-9)
        assert demand(1, t * a1, t * a2, m) - m.d_bar_1 == pytest.approx(
            t * (demand(1, a1, a2, m) - m.d_bar_1), abs=1e-9)

    @given(st.floats(0, 1e4), st.floats(0, 1e4))
    def test_nonnegative(self, p1, p2):
        m = MarketParams(200.0, 150.0, 4.0, 3.0, 0.7)
        assert demand(1, p1, p2, m) >= 0 and demand(2, p1, p2, m) >= 0


class TestAllocation:
    def test_pure_inertia_splits_evenly(self, chain):
        assert allocation_share(1, 0.0, 0.0, chain) == 0.5

    def test_symmetric_bonuses(self, chain):
        assert allocation_share(2, 8.0, 8.0, chain) == 0.5

    def test_hand_value(self, chain):
        assert allocation_share(1, 10.0, 0.0, chain) == pytest.approx(22 / 32, abs=1e-15)

    def test_negative_bonus(self, chain):
        with pytest.raises(DomainError):
            allocation_share(1, -1.0, 0.0, chain)
        with pytest.raises(DomainError):
            allocation_share_gradient(1, 0.0, -1.0, chain)

    @given(bonus, bonus, beta, beta, gamma)
    def test_shares_sum_to_one(self, b1, b2, be1, be2, g):
        c = chain_with(beta_1=be1, beta_2=be2, gamma_r=g)
        assert allocation_share(1, b1, b2, c) + allocation_share(2, b1, b2, c) == pytest.approx(1.0, abs=1e-12)
        assert 0 < allocation_share(1, b1, b2, c) < 1

    @given(bonus, bonus, beta, beta, gamma, st.floats(0.01, 10.0))
    def test_monotone(self, b1, b2, be1, be2, g, db):
        c = chain_with(beta_1=be1, beta_2=be2, gamma_r=g)
        assert allocation_share(1, b1 + db, b2, c) > allocation_share(1, b1, b2, c)
        assert allocation_share(1, b1, b2 + db, c) < allocation_share(1, b1, b2, c)


class TestAllocationGradient:
    def test_symmetric_closed_form(self, chain):
        b = 100 / 9
        assert allocation_share_gradient(1, b, b, chain) == pytest.approx(1.2 / (4 * (1.2 * b + 10)), rel=1e-12)
        assert allocation_share_gradient(1, b, b, chain) == pytest.approx(0.012857142857, abs=1e-12)

    def test_unresponsive(self, chain):
        assert allocation_share_gradient(1, 5.0, 5.0, chain_with(beta_1=0.0)) == 0.0

    def test_at_zero(self, chain):
        # Forward difference oracle on the share itself.
        h = 1e-7
        fd = (allocation_share(1, h, 0.0, chain) - allocation_share(1, 0.0, 0.0, chain)) / h
        assert fd == pytest.approx(0.03, abs=1e-6)
        assert allocation_share_gradient(1, 0.0, 0.0, chain) == pytest.approx(0.03, abs=1e-15)

    def test_matches_central_differences(self, gen):
        h = 1e-6
        for _ in range(100):
            be1, be2 = gen.uniform(0.1, 3.0, size=2)
            g = gen.uniform(1.0, 30.0)
            b1, b2 = gen.uniform(0.01, 40.0, size=2)
            c = chain_with(beta_1=be1, beta_2=be2, gamma_r=g)
            for i in (1, 2):
                if i == 1:
                    fd = (allocation_share(1, b1 + h, b2, c) - allocation_share(1, b1 - h, b2, c)) / (2 * h)
                else:
                    fd = (allocation_share(2, b1, b2 + h, c) - allocation_share(2, b1, b2 - h, c)) / (2 * h)
                analytic = allocation_share_gradient(i, b1, b2, c)
                assert abs(analytic - fd) / analytic <= 1e-6


class TestReturnsAndProfits:
    def test_total_returns(self):
        assert total_returns(0.0, 0.0, 0.3) == 0.0
        assert total_returns(56.25, 56.25, 0.3) == pytest.approx(33.75, abs=1e-12)
        assert total_returns(100.0, 0.0, 0.3) == pytest.approx(30.0, abs=1e-12)

    def test_retailer_zero_margin(self, market):
        c = chain_with(o_r_1=7.0)
        assert retailer_profit(1, RetailPrices(30.0, 30.0), 30.0, market, c) == -7.0

    def test_retailer_clamped_demand(self, market):
        c = chain_with(o_r_1=3.0)
        assert retailer_profit(1, RetailPrices(1000.0, 0.0), 20.0, market, c) == -3.0

    def test_retailer_inertia_point(self, market, chain):
        p = RetailPrices(59.895833333333336, 59.895833333333336)
        # Hand: (59.895833 - 45.833333) * 56.25
        assert retailer_profit(1, p, 45.833333333333336, market, chain) == pytest.approx(791.015625, abs=1e-9)

    def test_manufacturer_zero_margins(self, market, chain):
        dec = LeaderDecision(20.0, 20.0, 50.0, 50.0)
        assert manufacturer_profit(1, dec, 60.0, 60.0, market, chain) == pytest.approx(0.0, abs=1e-12)

    def test_manufacturer_inertia_point(self, market, chain):
        b = 100 / 9
        dec = LeaderDecision(137.5 / 3, 137.5 / 3, b, b)
        expected = (137.5 / 3 - 20) * 56.25 + (50 - b) * 0.3 * 112.5 * 0.5
        assert expected == pytest.approx(2109.375, abs=1e-9)
        assert manufacturer_profit(1, dec, 56.25, 56.25, market, chain) == pytest.approx(2109.375, abs=1e-9)

    def test_manufacturer_proportional_point(self, market, chain):
        w = 132.5 / 3
        dec = LeaderDecision(w, w, 0.0, 0.0)
        # 24.1667 * 58.75 + 50 * 0.3 * 117.5 * 0.5
        expected = (w - 20) * 58.75 + 50 * 0.3 * 117.5 * 0.5
        assert expected == pytest.approx(2301.0416666667, abs=1e-9)
        assert manufacturer_profit(1, dec, 58.75, 58.75, market, chain, share=0.5) == pytest.approx(expected, abs=1e-9)

    def test_pinned_half_share_identity(self, gen):
        """With b = 0 and s = 1/2, profit equals [(w - c) + theta (v - k)] D at symmetry."""
        for _ in range(100):
            s = SymmetricScenario(
                d_bar=gen.uniform(50, 500), alpha=gen.uniform(1, 10), epsilon=gen.uniform(0, 0.95),
                c=gen.uniform(0, 30), v=gen.uniform(0, 100), k=gen.uniform(0, 30),
                theta=gen.uniform(0.05, 0.95), beta=gen.uniform(0, 3), gamma_r=gen.uniform(1, 30),
            )
            w, d = gen.uniform(0, 50), gen.uniform(1, 100)
            dec = LeaderDecision(w, w, 0.0, 0.0)
            got = manufacturer_profit(1, dec, d, d, s.market(), s.chain(), share=0.5)
            want = ((w - s.c) + s.theta * (s.v - s.k)) * d
            assert got == pytest.approx(want, rel=1e-10, abs=1e-10)


class TestViability:
    @pytest.mark.parametrize("v,k,expected", [(60.0, 10.0, True), (10.0, 10.0, False), (5.0, 10.0, False)])
    def test_cases(self, chain, v, k, expected):
        assert reverse_viability(1, chain_with(v_1=v, k_1=k)) is expected
