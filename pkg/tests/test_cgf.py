import math

import numpy as np
import pytest

from hawkes_deviations import (
    DomainError, ExcitingKernel, HawkesModel, borel_divisibility_residual,
    critical_theta, model_theta_c, solve_x, x_derivatives, x_derivatives_jet,
)
from hawkes_deviations.cgf import TruncationWarning
from hawkes_deviations.verify import _FD_STEPS, _fd_derivative


class TestCriticalTheta:
    def test_half(self):
        assert critical_theta(0.5) == pytest.approx(0.1931471806, abs=1e-10)

    def test_quarter(self):
        assert critical_theta(0.25) == pytest.approx(0.6362943611, abs=1e-10)

    def test_vanishes_at_one(self):
        assert critical_theta(1.0 - 1e-9) == pytest.approx(0.0, abs=1e-8)

    @pytest.mark.parametrize("l1", [0.0, -0.1, 1.0, 1.5])
    def test_domain(self, l1):
        with pytest.raises(DomainError):
            critical_theta(l1)

    def test_pure_poisson_unbounded(self, poisson_model):
        assert model_theta_c(poisson_model) == math.inf


class TestSolveX:
    def test_zero_is_fixed_point(self, geo_model, half_model, poisson_model):
        for m in (geo_model, half_model, poisson_model):
            ev = solve_x(m, 0.0)
            assert ev.x_value == pytest.approx(1.0, abs=1e-14)
            assert ev.eta_value == pytest.approx(0.0, abs=1e-14)

    def test_critical_endpoint(self, half_model):
        tc = model_theta_c(half_model)
        ev = solve_x(half_model, tc)
        assert ev.x_value == pytest.approx(2.0, rel=1e-12)

    def test_pure_poisson(self, poisson_model):
        for z in (-2.0, 0.3, 5.0):
            assert solve_x(poisson_model, z).x_value == pytest.approx(math.exp(z), rel=1e-14)

    def test_residual_invariant(self, geo_model):
        tc = model_theta_c(geo_model)
        for theta in np.linspace(-5.0, tc - 1e-9, 25):
            ev = solve_x(geo_model, float(theta))
            assert ev.residual <= 1e-12 * max(1.0, abs(ev.x_value))

    def test_branch_invariant(self, half_model):
        tc = model_theta_c(half_model)
        for theta in np.linspace(-3.0, tc, 30):
            x = solve_x(half_model, float(theta)).x_value
            assert x > 0.0
            assert half_model.l1 * x <= 1.0 + 1e-12

    def test_out_of_domain(self, half_model):
        with pytest.raises(DomainError):
            solve_x(half_model, model_theta_c(half_model) + 1e-3)

    def test_complex_strip(self, geo_model):
        ev = solve_x(geo_model, 0.1 + 0.5j)
        b = geo_model.l1
        assert abs(ev.x_value - np.exp(0.1 + 0.5j + b * (ev.x_value - 1))) <= 1e-12
        with pytest.raises(DomainError):
            solve_x(geo_model, 0.1 + 3.5j)
        with pytest.raises(DomainError):
            solve_x(geo_model, complex(model_theta_c(geo_model), 0.5))


class TestXDerivatives:
    def test_pure_poisson_all_one(self, poisson_model):
        ev = x_derivatives(poisson_model, 0.0, 3)
        assert ev.x_derivs[1:] == pytest.approx([1.0, 1.0, 1.0], rel=1e-14)

    def test_eta_prime_at_zero(self, half_model):
        # nu/(1-b) with nu=1, b=0.5
        ev = x_derivatives(half_model, 0.0, 1)
        assert ev.eta_derivs[1] == pytest.approx(2.0, rel=1e-12)

    def test_eta_second_at_zero(self, half_model):
        # nu/(1-b)^3
        ev = x_derivatives(half_model, 0.0, 2)
        assert ev.eta_derivs[2] == pytest.approx(8.0, rel=1e-12)

    def test_matches_finite_differences(self, geo_model):
        tc = model_theta_c(geo_model)
        f = lambda th: float(solve_x(geo_model, th).x_value)
        for theta in (-1.0, -0.1, 0.0, tc / 2.0):
            ev = x_derivatives(geo_model, theta, 4)
            for k in range(1, 5):
                h = _FD_STEPS[k] * max(1.0, abs(theta))
                fd = _fd_derivative(f, theta, k, h)
                assert ev.x_derivs[k] == pytest.approx(fd, rel=1e-6)

    def test_matches_jet_route(self, geo_model, half_model):
        for m in (geo_model, half_model):
            for theta in (-0.5, 0.0, 0.1):
                rec = x_derivatives(m, theta, 6).x_derivs
                jet = x_derivatives_jet(m, theta, 6)
                assert rec == pytest.approx(jet, rel=1e-11)

    def test_implicit_first_derivative_identity(self, geo_model):
        b = geo_model.l1
        for theta in (-2.0, -0.3, 0.0, 0.2):
            ev = x_derivatives(geo_model, theta, 1)
            x = float(ev.x_value)
            assert ev.x_derivs[1] == pytest.approx(x / (1.0 - b * x), rel=1e-10)

    def test_eta_convex(self, half_model):
        tc = model_theta_c(half_model)
        grid = np.linspace(-5.0, tc - 0.01, 120)
        eta = np.array([float(solve_x(half_model, float(t)).eta_value) for t in grid])
        h = grid[1] - grid[0]
        second = np.diff(eta, 2) / h**2
        assert second.min() >= -1e-10

    def test_blowup_near_critical(self):
        m = HawkesModel(nu=1.0, kernel=ExcitingKernel.geometric(0.5, 0.5))  # l1 = 0.5
        tc = model_theta_c(m)
        for j in range(2, 7):
            ev = x_derivatives(m, tc - 10.0**-j, 1)
            assert ev.x_derivs[1] > 10.0 ** (j / 2.0)

    def test_too_close_to_critical(self, half_model):
        with pytest.raises(DomainError):
            x_derivatives(half_model, model_theta_c(half_model) - 1e-8, 2)

    def test_order_cap(self, geo_model):
        with pytest.raises(ValueError):
            x_derivatives(geo_model, 0.0, 9)


class TestBorelDivisibility:
    def test_pure_poisson_exact(self, poisson_model):
        assert borel_divisibility_residual(poisson_model, 0.4, 100) == pytest.approx(0.0, abs=1e-14)

    def test_borel_sums_to_one_at_zero(self, half_model):
        # x(0) = 1 and the Borel pmf is a probability law
        assert borel_divisibility_residual(half_model, 0.0, 400) <= 1e-12

    def test_positive_theta(self, half_model):
        assert borel_divisibility_residual(half_model, 0.1, 400) <= 1e-10

    def test_matches_on_grid(self, geo_model):
        for theta in (-0.5, -0.1, 0.0, 0.1, 0.3):
            assert borel_divisibility_residual(geo_model, theta, 600) <= 1e-10

    def test_truncation_warning(self):
        m = HawkesModel(nu=1.0, kernel=ExcitingKernel.finite([0.9]))
        with pytest.warns(TruncationWarning):
            borel_divisibility_residual(m, 0.005, 50)

    def test_requires_subcritical_theta(self, half_model):
        with pytest.raises(DomainError):
            borel_divisibility_residual(half_model, model_theta_c(half_model), 100)
