import numpy as np
import pytest

from clsc import (
    AllocationMode,
    ChainParams,
    ConvergenceError,
    DomainError,
    LeaderDecision,
    MarketParams,
    Regime,
    RegimeError,
    SymmetricScenario,
    allocation_share,
    bonus_best_response,
    bonus_comparative_statics,
    bonus_nash,
    bonus_threshold,
    solve_asymmetric,
    unilateral_wholesale,
    wholesale_nash,
)
from clsc.asymmetric import bonus_quadratic, leader_foc_residuals
from clsc.oracle import (
    central_difference,
    foc_residuals,
    golden_section_max,
    verify_bonus_optimum,
    verify_wholesale_optimum,
)

B_STAR = 100 / 9


def chain_with(chain, **kw):
    return ChainParams(**{**chain.__dict__, **kw})


def reverse_value(i, b_i, b_j, c):
    b1, b2 = (b_i, b_j) if i == 1 else (b_j, b_i)
    return (c.margin(i) - b_i) * allocation_share(i, b1, b2, c)


def grid_best_response(i, b_j, c, points=100_001):
    xs = np.linspace(0.0, c.margin(i), points)
    vals = np.array([reverse_value(i, x, b_j, c) for x in xs])
    k = int(np.argmax(vals))
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, points - 1)]
    x, _ = golden_section_max(lambda b: reverse_value(i, b, b_j, c), lo, hi, tol=1e-12)
    return float(xs[k]), x


def random_chain(gen):
    v = gen.uniform(20, 120, size=2)
    k = gen.uniform(0.0, 0.6, size=2) * v
    return ChainParams(
        c_1=gen.uniform(5, 30), c_2=gen.uniform(5, 30), v_1=v[0], v_2=v[1], k_1=k[0], k_2=k[1],
        theta=gen.uniform(0.05, 0.9), beta_1=gen.uniform(0.5, 3), beta_2=gen.uniform(0.5, 3),
        gamma_r=gen.uniform(1, 10),
    )


class TestBestResponse:
    def test_quadratic_at_symmetric_point(self, chain):
        a2, a1, a0 = bonus_quadratic(1, B_STAR, chain)
        assert (a2, a1, a0) == pytest.approx((1.44, 80.0, -3200 / 3))
        assert a2 * B_STAR**2 + a1 * B_STAR + a0 == pytest.approx(0.0, abs=1e-10)

    def test_fixed_point_consistency(self, chain):
        br = bonus_best_response(1, B_STAR, chain)
        assert br.value == pytest.approx(B_STAR, abs=1e-10)
        assert br.regime is Regime.INTERIOR

    def test_zero_rival_bonus_against_grid(self, chain):
        br = bonus_best_response(1, 0.0, chain)
        grid_x, refined = grid_best_response(1, 0.0, chain)
        assert abs(br.value - grid_x) <= 50 / 100_000
        assert br.value == pytest.approx(refined, abs=1e-5)
        assert br.value == pytest.approx((-48 + np.sqrt(48**2 + 4 * 1.44 * 400)) / 2.88, abs=1e-12)

    def test_random_against_grid(self, gen):
        for _ in range(20):
            c = random_chain(gen)
            b_j = gen.uniform(0, 20)
            br = bonus_best_response(1, b_j, c)
            if br.regime is Regime.INTERIOR:
                _, refined = grid_best_response(1, b_j, c, points=2001)
                assert br.value == pytest.approx(refined, abs=1e-5 * max(1.0, br.value))
            else:
                # Zero bonus: reverse value must not rise with a small bonus.
                assert reverse_value(1, 1e-6, b_j, c) <= reverse_value(1, 0.0, b_j, c)

    def test_negative_rival_bonus(self, chain):
        with pytest.raises(DomainError):
            bonus_best_response(1, -1.0, chain)

    def test_inactive_and_zero_beta(self, chain):
        assert bonus_best_response(1, 5.0, chain_with(chain, k_1=60.0)).regime is Regime.REVERSE_INACTIVE
        assert bonus_best_response(1, 5.0, chain_with(chain, beta_1=0.0)).value == 0.0

    def test_monotone_in_rival_bonus(self, chain):
        values = [bonus_best_response(1, float(b), chain).value for b in np.linspace(0, 20, 201)]
        assert all(y >= x for x, y in zip(values, values[1:]))

    def test_strict_concavity(self, gen):
        h = 1e-3
        for _ in range(100):
            c = random_chain(gen)
            b_j = gen.uniform(0, 20)
            b = gen.uniform(h, c.margin(1) - h)
            second = (reverse_value(1, b + h, b_j, c) - 2 * reverse_value(1, b, b_j, c)
                      + reverse_value(1, b - h, b_j, c))
            assert second < 0


class TestThreshold:
    def test_symmetric_reduction(self, chain):
        # At b_j = 0: beta (v - k) > 2 gamma.
        for beta, expected in ((0.39, False), (0.4, False), (0.41, True)):
            assert bonus_threshold(1, 0.0, chain_with(chain, beta_1=beta)) is expected

    def test_matches_sign_of_derivative(self, gen):
        for _ in range(200):
            c = random_chain(gen)
            b_j = gen.uniform(0, 20)
            slope = central_difference(lambda x: reverse_value(1, max(x, 0.0), b_j, c), 1e-4, 1e-5)
            if abs(slope) > 1e-6:
                assert bonus_threshold(1, b_j, c) is (slope > 0)


class TestBonusNash:
    def test_symmetric_baseline(self, chain):
        res = bonus_nash(chain)
        assert res.converged and res.iterations < 60
        assert res.b_1 == pytest.approx(B_STAR, abs=1e-9) and res.b_2 == pytest.approx(B_STAR, abs=1e-9)
        assert res.final_step <= 1e-10

    def test_one_sided(self, chain):
        c = chain_with(chain, beta_2=0.1)
        res = bonus_nash(c)
        assert res.converged
        assert res.b_2 == 0.0 and res.regimes[1] is Regime.BOUNDARY_ZERO
        assert res.b_1 == pytest.approx(bonus_best_response(1, 0.0, c).value, abs=1e-12)
        assert res.b_1 == pytest.approx(6.903559, abs=1e-6)

    def test_both_below_threshold(self, chain):
        res = bonus_nash(chain_with(chain, beta_1=0.2, beta_2=0.3))
        assert (res.b_1, res.b_2) == (0.0, 0.0) and res.converged

    def test_non_convergence_is_reported(self, chain):
        res = bonus_nash(chain, max_iter=2)
        assert not res.converged and res.iterations == 2
        with pytest.raises(ConvergenceError):
            solve_asymmetric(SymmetricScenario.baseline().market(), chain, max_iter=2)

    def test_mutual_best_responses(self, gen):
        for _ in range(50):
            c = random_chain(gen)
            res = bonus_nash(c)
            assert res.converged
            assert bonus_best_response(1, res.b_2, c).value == pytest.approx(res.b_1, abs=1e-9)
            assert bonus_best_response(2, res.b_1, c).value == pytest.approx(res.b_2, abs=1e-9)

    def test_fixed_point_certificate(self, gen, market):
        for _ in range(10):
            c = random_chain(gen)
            res = bonus_nash(c)
            dec = LeaderDecision(40.0, 40.0, res.b_1, res.b_2)
            for i in (1, 2):
                assert verify_bonus_optimum(i, dec, market, c, grid=2001).passed

    def test_printed_coefficients_fail_certificate(self, chain, market):
        res = bonus_nash(chain, printed=True)
        assert res.b_1 == pytest.approx(15.2145, abs=1e-3)
        report = verify_bonus_optimum(1, LeaderDecision(45.0, 45.0, res.b_1, res.b_2), market, chain)
        assert not report.passed


class TestWholesaleNash:
    def test_symmetric_inputs(self, base, market, chain):
        w = wholesale_nash(market, chain, (B_STAR, B_STAR))
        assert w == pytest.approx((unilateral_wholesale(base, AllocationMode.INERTIA_RESPONSIVENESS),) * 2,
                                  abs=1e-9)
        w0 = wholesale_nash(market, chain, (0.0, 0.0), shares=(0.5, 0.5))
        assert w0[0] == pytest.approx(unilateral_wholesale(base, AllocationMode.PROPORTIONAL), abs=1e-9)

    def test_segmented_markets_by_bisection(self, chain):
        m = MarketParams(200.0, 150.0, 4.0, 3.0, 0.0)
        b = (8.0, 3.0)
        w = wholesale_nash(m, chain, b)
        s1 = allocation_share(1, *b, chain)
        for i, s in ((1, s1), (2, 1 - s1)):
            d_bar, a = m.d_bar(i), m.alpha(i)
            reverse = chain.theta * (chain.v(i) - b[i - 1] - chain.k(i)) * s

            def foc(x):
                return (d_bar - a * x) / 2 - a * (x - chain.c(i)) / 2 - reverse * a / 2

            lo, hi = 0.0, d_bar / a
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                lo, hi = (mid, hi) if foc(mid) > 0 else (lo, mid)
            assert w[i - 1] == pytest.approx(lo, abs=1e-9)

    def test_certificates(self, gen):
        for _ in range(10):
            c = random_chain(gen)
            m = MarketParams(*gen.uniform(150, 300, 2), *gen.uniform(2, 6, 2), gen.uniform(0, 0.8))
            out = solve_asymmetric(m, c)
            for i in (1, 2):
                assert verify_wholesale_optimum(i, out.decision, m, c, grid=2001).passed


class TestSolveAsymmetric:
    def test_symmetric_inputs(self, base, market, chain):
        out = solve_asymmetric(market, chain)
        assert out.decision.b_1 == pytest.approx(B_STAR, abs=1e-9)
        assert out.decision.w_1 == pytest.approx(out.decision.w_2, abs=1e-9)
        assert out.decision.w_1 == pytest.approx(
            unilateral_wholesale(base, AllocationMode.INERTIA_RESPONSIVENESS), abs=1e-9)

    def test_proportional_mode(self, market, chain):
        out = solve_asymmetric(market, chain, mode=AllocationMode.PROPORTIONAL)
        assert out.decision.b_1 == 0.0 and out.share_1 == 0.5

    def test_heterogeneous_margins(self, market, chain):
        c = chain_with(chain, v_2=40.0)
        out = solve_asymmetric(market, c)
        assert out.decision.b_1 > out.decision.b_2 > 0
        assert max(abs(r) for r in leader_foc_residuals(out.decision, market, c)) <= 1e-7
        numeric = foc_residuals(out.decision, market, c)
        assert max(abs(r) for r in numeric) <= 1e-6

    def test_inactive_firm(self, market, chain):
        out = solve_asymmetric(market, chain_with(chain, k_2=70.0))
        assert out.decision.b_2 == 0.0
        assert out.bonus_regime[1] is Regime.REVERSE_INACTIVE


class TestComparativeStatics:
    def test_components_cancel(self, chain):
        dv, dk = bonus_comparative_statics(1, (B_STAR, B_STAR), chain)
        assert dv > 0 > dk and dv + dk == 0.0

    def test_finite_difference_baseline(self, chain):
        dv, _ = bonus_comparative_statics(1, (B_STAR, B_STAR), chain)
        h = 1e-4
        fd = central_difference(
            lambda v: bonus_best_response(1, B_STAR, chain_with(chain, v_1=v)).value, chain.v_1, h)
        assert abs(dv - fd) <= 1e-6

    def test_total_derivative_along_symmetric_path(self, chain):
        dv, _ = bonus_comparative_statics(1, (B_STAR, B_STAR), chain)
        h = 1e-6
        slope = (bonus_best_response(1, B_STAR + h, chain).value
                 - bonus_best_response(1, B_STAR - h, chain).value) / (2 * h)
        assert dv == pytest.approx(0.25, abs=1e-9)
        assert slope == pytest.approx(0.25, abs=1e-6)
        # Symmetric fixed point: db*/dv = partial / (1 - slope).
        assert dv / (1 - slope) == pytest.approx(1 / 3, abs=1e-6)

    def test_boundary_raises(self, chain):
        with pytest.raises(RegimeError):
            bonus_comparative_statics(1, (0.0, 0.0), chain_with(chain, beta_1=0.2))
