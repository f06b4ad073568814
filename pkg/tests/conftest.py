import numpy as np
import pytest

from hawkes_deviations import ExcitingKernel, HawkesModel


@pytest.fixture
def geo_model() -> HawkesModel:
    """nu=1, geometric a=0.25 r=0.5 (||alpha||_1 = 0.25); the workhorse model."""
    return HawkesModel(nu=1.0, kernel=ExcitingKernel.geometric(0.25, 0.5))


@pytest.fixture
def half_model() -> HawkesModel:
    """nu=1, single-lag kernel [0.5]."""
    return HawkesModel(nu=1.0, kernel=ExcitingKernel.finite([0.5]))


@pytest.fixture
def poisson_model() -> HawkesModel:
    """nu=1 with the empty kernel: N_t ~ Poisson(t)."""
    return HawkesModel(nu=1.0, kernel=ExcitingKernel.poisson())


def polynomial_kernel(l1: float = 0.25, p: float = 3.05, n: int = 200_000) -> ExcitingKernel:
    """Heavy-tail kernel alpha_i ~ i^-p scaled to mass l1 (finite i^2 moment)."""
    i = np.arange(1, n + 1, dtype=float)
    w = i ** (-p)
    w *= l1 / w.sum()
    return ExcitingKernel.finite(w)
