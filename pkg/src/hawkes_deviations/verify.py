"""Cross-validation battery behind the `verify` CLI subcommand.

Each check pits two independent routes against each other: closed forms vs
solvers, partition recursions vs finite differences, jet assemblies vs
explicit partition sums, expansions vs exact oracles, exact MGF vs Monte
Carlo.  Deterministic given the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson as sp_poisson

from .kernel import ExcitingKernel, HawkesModel
from .cgf import model_theta_c, solve_x, x_derivatives
from .modphi import log_mgf, modphi_residual, psi_derivatives, psi_derivatives_explicit
from .deviations import (
    DeviationQuery, legendre_check, pmf_expansion, tail_expansion, theta_star,
)
from .simulator import mc_mgf


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    bound: float
    note: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: measured={self.measured:.3e} bound={self.bound:.3e} {self.note}"


def _geo_model() -> HawkesModel:
    return HawkesModel(nu=1.0, kernel=ExcitingKernel.geometric(0.25, 0.5))


def _poly_kernel(l1: float = 0.25, p: float = 3.05, n: int = 200_000) -> ExcitingKernel:
    i = np.arange(1, n + 1, dtype=float)
    w = i ** (-p)
    w *= l1 / w.sum()
    return ExcitingKernel.finite(w)


def check_legendre_saddle(model: HawkesModel) -> list[CheckResult]:
    mean = model.mean_rate
    xs = np.linspace(0.4 * mean, 2.2 * mean, 20)
    leg = max(legendre_check(model, float(x)) for x in xs)
    sad = 0.0
    for x in xs:
        ts = theta_star(model, float(x))
        eta1 = x_derivatives(model, ts, 1).eta_derivs[1]
        sad = max(sad, abs(eta1 - x) / max(1.0, x))
    return [
        CheckResult("legendre_transform", leg <= 1e-10, leg, 1e-10),
        CheckResult("saddle_condition", sad <= 1e-9, sad, 1e-9),
    ]


# central-difference base steps balancing truncation against eps/h^k roundoff
_FD_STEPS = {1: 1e-3, 2: 3e-3, 3: 1e-2, 4: 3e-2}


def _fd_derivative(f, theta: float, k: int, h: float) -> float:
    """Central finite difference of order k, two Richardson refinements."""
    def stencil(hh: float) -> float:
        if k == 1:
            return (f(theta + hh) - f(theta - hh)) / (2 * hh)
        if k == 2:
            return (f(theta + hh) - 2 * f(theta) + f(theta - hh)) / hh**2
        if k == 3:
            return (f(theta + 2 * hh) - 2 * f(theta + hh) + 2 * f(theta - hh) - f(theta - 2 * hh)) / (2 * hh**3)
        return (f(theta + 2 * hh) - 4 * f(theta + hh) + 6 * f(theta) - 4 * f(theta - hh) + f(theta - 2 * hh)) / hh**4
    d0, d1, d2 = stencil(h), stencil(h / 2.0), stencil(h / 4.0)
    r0 = (4.0 * d1 - d0) / 3.0
    r1 = (4.0 * d2 - d1) / 3.0
    return (16.0 * r1 - r0) / 15.0


def check_x_derivatives_fd(model: HawkesModel) -> list[CheckResult]:
    tc = model_theta_c(model)
    thetas = [-1.0, -0.1, 0.0] + ([tc / 2.0] if math.isfinite(tc) else [0.5])
    f = lambda th: float(np.real(solve_x(model, th).x_value))
    worst = 0.0
    for theta in thetas:
        ev = x_derivatives(model, theta, 4)
        for k in range(1, 5):
            h = _FD_STEPS[k] * max(1.0, abs(theta))
            fd = _fd_derivative(f, theta, k, h)
            worst = max(worst, abs(ev.x_derivs[k] - fd) / max(1e-12, abs(fd)))
    return [CheckResult("x_derivs_vs_finite_differences", worst <= 1e-6, worst, 1e-6)]


def check_psi_assemblies(model: HawkesModel) -> list[CheckResult]:
    ts = theta_star(model, 1.8)
    jets = psi_derivatives(model, ts, 3)
    expl = psi_derivatives_explicit(model, ts, 3)
    rel = float(np.max(np.abs(jets - expl) / np.maximum(1e-12, np.abs(expl))))
    return [CheckResult("psi_jets_vs_explicit_faa_di_bruno", rel <= 1e-9, rel, 1e-9)]


def check_poisson_reduction() -> list[CheckResult]:
    model = HawkesModel(nu=1.0, kernel=ExcitingKernel.poisson())
    out = []
    for mode, fn in (("pmf", pmf_expansion), ("tail", tail_expansion)):
        errs = {}
        for t in (100, 200, 400):
            n = int(round(1.5 * t))
            ex = sp_poisson.pmf(n, t) if mode == "pmf" else sp_poisson.sf(n - 1, t)
            approx = fn(DeviationQuery(model, t, 1.5, v=2, mode=mode)).probability
            errs[t] = abs(approx / ex - 1.0)
        ratios = [errs[200] / errs[100], errs[400] / errs[200]]
        ok = all(0.15 <= r <= 0.40 for r in ratios)
        out.append(CheckResult(f"poisson_{mode}_second_order_decay", ok,
                               float(np.mean(ratios)), 0.40, note=f"ratios={[f'{r:.3f}' for r in ratios]}"))
    return out


def check_modphi_slope() -> list[CheckResult]:
    model = HawkesModel(nu=1.0, kernel=_poly_kernel())
    ts = [50, 100, 200, 400, 800]
    res = [modphi_residual(model, 0.1, t, tol=1e-8, truncation="heuristic") for t in ts]
    slope = float(np.polyfit(np.log(ts), np.log(res), 1)[0])
    ok = -1.35 <= slope <= -0.85
    return [CheckResult("modphi_residual_slope_polynomial_kernel", ok, slope, -1.0,
                        note="band [-1.35,-0.85]")]


def check_mc_vs_mgf(seed: int) -> list[CheckResult]:
    model = _geo_model()
    z, t = 0.1, 20
    est = mc_mgf(model, z, t, 200_000, seed)
    exact = math.exp(log_mgf(model, z, t))
    dev = abs(est.value - exact) / max(est.std_error, 1e-300)
    return [CheckResult("mc_mgf_vs_recursion", dev <= 4.0, dev, 4.0,
                        note=f"mc={est.value:.6f} exact={exact:.6f}")]


def run_battery(suite: str = "quick", seed: int = 12345) -> list[CheckResult]:
    model = _geo_model()
    results = []
    results += check_legendre_saddle(model)
    results += check_x_derivatives_fd(model)
    results += check_psi_assemblies(model)
    results += check_poisson_reduction()
    results += check_modphi_slope()
    results += check_mc_vs_mgf(seed)
    if suite == "full":
        half = HawkesModel(nu=1.0, kernel=ExcitingKernel.finite([0.5]))
        results += check_legendre_saddle(half)
        results += check_x_derivatives_fd(half)
    return results
