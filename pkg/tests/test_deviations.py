import math

import numpy as np
import pytest
from scipy.stats import poisson as sp_poisson

from hawkes_deviations import (
    DeviationQuery, DivergentMomentError, DomainError, ExcitingKernel,
    FourierOracle, HawkesModel, SaturationError, coefficients_a, coefficients_b,
    legendre_check, mc_tail, moderate_expansion, moderate_valid, pmf_expansion,
    pmf_fourier, rate, rate_derivatives, tail_expansion, tail_fourier, theta_star,
    x_derivatives,
)
from hawkes_deviations.deviations import _a_from_derivs, _b_from_derivs, _b_tilde_slice
from hawkes_deviations.verify import _fd_derivative


class TestRate:
    def test_vanishes_at_mean(self, half_model):
        assert rate(half_model, 2.0) == pytest.approx(0.0, abs=1e-15)

    def test_closed_form_value(self, half_model):
        assert rate(half_model, 3.0) == pytest.approx(3.0 * math.log(1.2) - 0.5, rel=1e-14)

    def test_poisson_specialization(self, poisson_model):
        assert rate(poisson_model, math.e) == pytest.approx(1.0, rel=1e-14)

    def test_total_function(self, half_model):
        assert rate(half_model, -0.5) == math.inf
        assert rate(half_model, 0.0) == half_model.nu


class TestRateDerivatives:
    def test_second_derivative_closed_form(self, half_model):
        # nu^2/(x (nu + b x)^2) at x=2 equals 1/8 = (1-b)^3/nu = 1/eta''(0)
        got = rate_derivatives(half_model, 2.0, 2)
        assert got == pytest.approx(0.125, rel=1e-12)
        assert got == pytest.approx(1.0 / (2.0 * (1.0 + 0.5 * 2.0) ** 2), rel=1e-12)

    def test_poisson_second(self, poisson_model):
        for x in (0.5, 1.7):
            assert rate_derivatives(poisson_model, x, 2) == pytest.approx(1.0 / x, rel=1e-13)

    @pytest.mark.parametrize("i", [2, 3, 4])
    def test_matches_rate_finite_differences(self, half_model, i):
        x0 = 3.0
        fd = _fd_derivative(lambda x: rate(half_model, x), x0, i, {2: 3e-3, 3: 1e-2, 4: 1e-1}[i])
        assert rate_derivatives(half_model, x0, i) == pytest.approx(fd, rel=1e-5)

    def test_domain(self, half_model):
        with pytest.raises(ValueError):
            rate_derivatives(half_model, 1.0, 1)
        with pytest.raises(DomainError):
            rate_derivatives(half_model, 0.0, 2)


class TestThetaStar:
    def test_zero_at_mean(self, half_model):
        assert theta_star(half_model, 2.0) == pytest.approx(0.0, abs=1e-15)

    def test_closed_form(self, half_model):
        expect = math.log(1.2) - 0.6 + 0.5
        assert theta_star(half_model, 3.0) == pytest.approx(expect, rel=1e-13)
        # saddle condition eta'(theta*) = x
        eta1 = x_derivatives(half_model, theta_star(half_model, 3.0), 1).eta_derivs[1]
        assert eta1 == pytest.approx(3.0, rel=1e-9)

    def test_poisson_is_log(self, poisson_model):
        assert theta_star(poisson_model, 2.5) == pytest.approx(math.log(2.5), rel=1e-14)

    def test_sign_iff_above_mean(self, geo_model):
        mean = geo_model.mean_rate
        assert theta_star(geo_model, mean * 1.1) > 0
        assert theta_star(geo_model, mean * 0.9) < 0


class TestLegendre:
    def test_grid(self, half_model):
        for x in (0.5, 1.0, 2.5, 3.0, 4.0):
            assert legendre_check(half_model, x) <= 1e-10

    def test_saddle_grid(self, geo_model):
        for x in np.linspace(0.5, 3.0, 20):
            ts = theta_star(geo_model, float(x))
            eta1 = x_derivatives(geo_model, ts, 1).eta_derivs[1]
            assert abs(eta1 - x) <= 1e-9 * max(1.0, x)


class TestCoefficientAssemblies:
    def test_poisson_a1_a2_closed_forms(self, poisson_model):
        x = 1.5
        a = coefficients_a(poisson_model, math.log(x), 2)
        assert a[0] == pytest.approx(-1.0 / (12 * x), rel=1e-10)
        assert a[1] == pytest.approx(1.0 / (288 * x * x), rel=1e-8)

    def test_gaussian_like_a1_vanishes(self):
        # psi' = psi'' = 0 and eta''' = eta'''' = 0 kill every a_1 term
        eta_d = np.array([0.0, 2.0, 3.0, 0.0, 0.0])
        psi_all = np.array([1.0, 0.0, 0.0])
        assert _a_from_derivs(1, eta_d, psi_all)[0] == pytest.approx(0.0, abs=1e-15)

    def test_b_n0_slice_is_lattice_scaled_a(self, half_model):
        ts = theta_star(half_model, 3.0)
        eta_d = x_derivatives(half_model, ts, 4).eta_derivs
        from hawkes_deviations import phi_psi, psi_derivatives
        psi0 = float(np.real(phi_psi(half_model, ts).psi_value))
        psi_all = np.concatenate([[psi0], psi_derivatives(half_model, ts, 2)])
        a1 = _a_from_derivs(1, eta_d, psi_all)[0]
        n0 = _b_tilde_slice(1, 0, ts, eta_d, psi_all)
        assert n0 == pytest.approx(a1 / (1.0 - math.exp(-ts)), rel=1e-12)

    def test_b_approaches_a_for_large_theta(self):
        eta_d = np.array([0.0, 1.0, 2.0, 0.7, 0.3, 0.1, 0.05, 0.01, 0.005])
        psi_all = np.array([1.0, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005])
        for k in (1, 2, 3):
            a = _a_from_derivs(k, eta_d, psi_all)[k - 1]
            b = _b_from_derivs(k, 40.0, eta_d, psi_all)[k - 1]
            assert b == pytest.approx(a, rel=1e-12)

    def test_b_requires_positive_saddle(self, half_model):
        with pytest.raises(DomainError):
            coefficients_b(half_model, -0.1, 1)

    def test_hawkes_a1_matches_oracle_fit(self, geo_model):
        # fit (oracle/leading - psi) * t against 1/t; intercept estimates a_1
        x = 1.8
        ts = theta_star(geo_model, x)
        a1 = coefficients_a(geo_model, ts, 1)[0]
        rows = []
        for t in (200, 400, 800):
            n = int(round(t * x))
            res = pmf_expansion(DeviationQuery(geo_model, t, x, v=1, mode="pmf"))
            lead = res.probability / res.psi_value  # exp(-tI) * prefactor
            rows.append((1.0 / t, (pmf_fourier(geo_model, t, n) / lead - res.psi_value) * t))
        u = np.array([r[0] for r in rows])
        y = np.array([r[1] for r in rows])
        fit = np.linalg.lstsq(np.vstack([np.ones_like(u), u]).T, y, rcond=None)[0]
        assert fit[0] == pytest.approx(a1, rel=0.05)


class TestPmfExpansion:
    def test_poisson_accuracy_tiers(self, poisson_model):
        t, x = 200, 1.5
        exact = sp_poisson.pmf(300, 200)
        v1 = pmf_expansion(DeviationQuery(poisson_model, t, x, v=1, mode="pmf")).probability
        v2 = pmf_expansion(DeviationQuery(poisson_model, t, x, v=2, mode="pmf")).probability
        assert abs(v1 / exact - 1.0) <= 0.02
        assert abs(v2 / exact - 1.0) <= 0.0005

    def test_local_clt_identity_at_mean(self, half_model):
        # leading term at the mean equals 1/sqrt(2 pi t eta''(0)) exactly
        t = 50
        res = pmf_expansion(DeviationQuery(half_model, t, 2.0, v=1, mode="pmf"))
        eta2 = 1.0 / (1.0 - 0.5) ** 3
        assert res.probability == pytest.approx(1.0 / math.sqrt(2 * math.pi * t * eta2), rel=1e-12)
        assert res.exponent == pytest.approx(0.0, abs=1e-12)

    def test_hawkes_vs_mc_pmf(self, geo_model):
        from hawkes_deviations import mc_pmf
        t, x = 200, 1.6  # richly hit lattice point: P ~ 1e-3
        res = pmf_expansion(DeviationQuery(geo_model, t, x, v=2, mode="pmf"))
        est = mc_pmf(geo_model, t, x, 400_000, seed=99)
        assert abs(res.probability - est.value) <= 4.0 * est.std_error

    def test_saturation_error(self, half_model):
        with pytest.raises(SaturationError):
            pmf_expansion(DeviationQuery(half_model, 1, 2000.0, v=1, mode="pmf"))

    def test_dominance_threshold_reported(self, poisson_model):
        res = pmf_expansion(DeviationQuery(poisson_model, 100, 1.5, v=2, mode="pmf"))
        assert res.dominance_threshold_t >= 1
        assert res.valid


class TestTailExpansion:
    def test_poisson_v1_percent_level(self, poisson_model):
        t, x = 400, 1.5
        exact = sp_poisson.sf(int(t * x) - 1, t)
        v1 = tail_expansion(DeviationQuery(poisson_model, t, x, v=1, mode="tail")).probability
        assert abs(v1 / exact - 1.0) <= 0.01

    def test_lattice_factor_blows_up_near_mean(self, half_model):
        # theta* ~ 0.01 makes the lattice factor ~ 1/theta* ~ 100
        x = 2.0
        while theta_star(half_model, x) < 0.01:
            x += 0.001
        res = tail_expansion(DeviationQuery(half_model, 4000, round(4000 * x) / 4000, v=1, mode="tail"))
        assert res.lattice_factor == pytest.approx(1.0 / (1.0 - math.exp(-res.theta_star)), rel=1e-12)
        assert res.lattice_factor > 50.0
        assert res.probability < 1.0

    def test_below_mean_rejected(self, half_model):
        with pytest.raises(DomainError):
            DeviationQuery(half_model, 100, 1.9, v=1, mode="tail")

    def test_monotone_in_x(self, geo_model):
        t = 600
        xs = [1.5, 1.6, 1.7, 1.8, 1.9]
        probs = [tail_expansion(DeviationQuery(geo_model, t, x, v=2, mode="tail")).probability
                 for x in xs]
        assert all(a > b for a, b in zip(probs, probs[1:]))

    def test_hawkes_vs_mc_tail(self, geo_model):
        t, x = 200, 1.6
        res = tail_expansion(DeviationQuery(geo_model, t, x, v=2, mode="tail"))
        est = mc_tail(geo_model, t, x, 400_000, seed=77)
        assert abs(res.probability - est.value) <= 4.0 * est.std_error


class TestModerate:
    def test_m3_gaussian_identity(self, half_model, geo_model):
        for m in (half_model, geo_model):
            for y in (0.5, 2.0, 3.0):
                got = moderate_expansion(m, 10_000, y, 3)
                expect = math.exp(-y * y / 2.0) / (y * math.sqrt(2 * math.pi))
                assert got == pytest.approx(expect, rel=1e-12)

    def test_m4_exponent_value(self, half_model):
        # second term: I'''(2)/3! * eta''(0)^{3/2} y^3 / sqrt(t)
        t, y = 10_000, 2.0
        i3 = rate_derivatives(half_model, 2.0, 3)
        extra = i3 / 6.0 * 8.0**1.5 * y**3 / math.sqrt(t)
        expect = math.exp(-(y * y / 2.0 + extra)) / (y * math.sqrt(2 * math.pi))
        assert moderate_expansion(half_model, t, y, 4) == pytest.approx(expect, rel=1e-12)

    def test_validity_indicator(self):
        assert moderate_valid(10_000, 2.0, 3)
        assert not moderate_valid(100, 9.0, 3)

    def test_domain(self, half_model):
        with pytest.raises(DomainError):
            moderate_expansion(half_model, 100, -1.0, 3)
        with pytest.raises(DomainError):
            moderate_expansion(half_model, 100, 1.0, 2)


class TestFourierOracle:
    def test_matches_exact_poisson(self, poisson_model):
        t, n = 200, 300
        assert pmf_fourier(poisson_model, t, n) == pytest.approx(sp_poisson.pmf(n, t), rel=1e-10)
        assert tail_fourier(poisson_model, t, n) == pytest.approx(sp_poisson.sf(n - 1, t), rel=1e-10)

    def test_below_mean_tail(self, poisson_model):
        t, n = 100, 90
        assert tail_fourier(poisson_model, t, n) == pytest.approx(sp_poisson.sf(n - 1, t), rel=1e-9)

    def test_deep_tail_dynamic_range(self, poisson_model):
        # pmf ~ 1e-30: far beyond untilted double-precision inversion
        t, n = 400, 900
        assert pmf_fourier(poisson_model, t, n) == pytest.approx(sp_poisson.pmf(n, t), rel=1e-9)

    def test_pmf_sums_to_tail(self, geo_model):
        t, n = 150, 260
        orc = FourierOracle(geo_model, t, theta=theta_star(geo_model, n / t))
        manual = sum(orc.pmf(m) for m in range(n, n + 200))
        assert orc.tail(n) == pytest.approx(manual, rel=1e-10)

    def test_hand_rate_query_rejects_custom(self):
        kern = ExcitingKernel.custom(lambda i: 0.1 * 0.5 ** np.asarray(i, float), lambda i: 0.1 * 0.5**i)
        m = HawkesModel(nu=1.0, kernel=kern)
        with pytest.raises(DomainError):
            pmf_fourier(m, 50, 60)


class TestDeviationQuery:
    def test_pmf_needs_integral_tx(self, half_model):
        with pytest.raises(DomainError):
            DeviationQuery(half_model, 100, 1.5005, v=1, mode="pmf")

    def test_order_range(self, half_model):
        with pytest.raises(ValueError):
            DeviationQuery(half_model, 100, 1.5, v=5, mode="pmf")
        with pytest.raises(ValueError):
            DeviationQuery(half_model, 100, 1.5, v=0, mode="pmf")

    def test_moment_hypothesis_enforced(self):
        # alpha_i ~ i^-3: third moment diverges, so v=2 (needs i^3 alpha summable) is refused
        c = 0.2
        kern = ExcitingKernel.custom(
            lambda i: c * np.asarray(i, dtype=float) ** -3.0,
            lambda i: c * 1.21 if i == 0 else c / (2.0 * i * i),
        )
        m = HawkesModel(nu=1.0, kernel=kern)
        with pytest.raises(DivergentMomentError):
            DeviationQuery(m, 100, 2.0, v=2, mode="pmf")
