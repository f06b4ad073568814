"""Precise large and moderate deviations for discrete-time linear Hawkes processes.

The model: X_t | past ~ Poisson(nu + sum_{s<t} alpha_s X_{t-s}), N_t = sum X_s,
subcritical (||alpha||_1 < 1).  The package computes the limiting CGF
eta(z) = nu (x(z) - 1) from the fixed point x = e^{z + ||alpha||_1 (x-1)},
the mod-phi limiting function psi, saddle-point pmf/tail expansions with
higher-order corrections, moderate-deviation asymptotics, and validates them
against an exact Fourier-inversion oracle and seeded Monte Carlo.
"""

from .errors import (
    CertificateError, DivergentMomentError, DomainError, HawkesError,
    NearCriticalError, NoConvergenceError, NonSummableKernelError,
    SaturationError, SubcriticalityError,
)
from .kernel import (
    ExcitingKernel, HawkesModel, kernel_from_json, l1_norm, model_from_json,
    power_moment, tail_mass,
)
from .series import (
    abel_identity_residual, convolution_power, gronwall_majorant, renewal_majorant,
)
from .partitions import (
    enumerate_Sk, enumerate_Tk, faa_weight, odd_double_factorial, partition_count,
)
from .taylor import Jet
from .cgf import (
    CgfEval, borel_divisibility_residual, critical_theta, model_theta_c,
    solve_x, x_derivatives, x_derivatives_jet,
)
from .modphi import (
    ModPhiLimit, f_sequence, log_mgf, log_mgf_grid, modphi_residual, phi_psi,
    psi_derivatives, psi_derivatives_explicit, tail_certificate,
)
from .deviations import (
    DeviationQuery, DeviationResult, FourierOracle, coefficients_a,
    coefficients_b, legendre_check, moderate_expansion, moderate_valid,
    pmf_expansion, pmf_fourier, rate, rate_derivatives, tail_expansion,
    tail_fourier, theta_star,
)
from .simulator import (
    McEstimate, SimulationPath, mc_mean_variance, mc_mgf, mc_pmf, mc_tail,
    simulate_path, simulate_totals,
)

__version__ = "0.1.0"
