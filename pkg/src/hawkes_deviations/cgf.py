"""The limiting cumulant generating function eta(z) = nu (x(z) - 1).

x(z) is the stable solution of x = exp(z + b(x-1)) with b = ||alpha||_1, the
branch with b*x <= 1 on the real axis.  The domain edge is
theta_c = b - 1 - log b (infinite for the pure-Poisson kernel); values exist
at theta_c (x = 1/b), derivatives do not.

x(z) is also the moment generating function of the Borel distribution with
parameter b evaluated at z, which is what borel_divisibility_residual checks:
eta is then a compound-Poisson CGF, hence infinitely divisible and supported
on the integer lattice.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, NearCriticalError, NoConvergenceError
from .kernel import HawkesModel
from .partitions import enumerate_Sk, faa_weight, partitions_below_top, tuple_weight

_NEWTON_TOL = 1e-14
_NEWTON_MAX_ITER = 200
# derivatives blow up at theta_c; refuse beyond this closeness of b*x to 1
_NEAR_CRITICAL = 1e-8


class TruncationWarning(UserWarning):
    """A truncated series was cut before its terms became negligible."""


def critical_theta(l1: float) -> float:
    """theta_c = l1 - 1 - log(l1), strictly positive on (0,1)."""
    if not 0.0 < l1 < 1.0:
        raise DomainError(f"critical exponent defined for l1 in (0,1), got {l1}")
    return l1 - 1.0 - math.log(l1)


def model_theta_c(model: HawkesModel) -> float:
    """Domain edge for the model; +inf for the pure-Poisson kernel."""
    return math.inf if model.l1 == 0.0 else critical_theta(model.l1)


@dataclass(frozen=True)
class CgfEval:
    """x(z), eta(z) and optional derivative arrays at a single point.

    x_derivs[k] holds x^(k); index 0 is x itself.  eta_derivs likewise, with
    eta_derivs[0] = eta(z).
    """

    z: complex | float
    x_value: complex | float
    eta_value: complex | float
    newton_iterations: int
    residual: float
    x_derivs: np.ndarray | None = field(default=None)
    eta_derivs: np.ndarray | None = field(default=None)


def _fixed_point_residual(x, z, b) -> float:
    return abs(x - np.exp(z + b * (x - 1.0)))


def _newton(z, b, x0, real_branch: bool):
    """Newton on F(x) = x - exp(z + b(x-1)); bisection fallback on the real axis."""
    x = x0
    for it in range(1, _NEWTON_MAX_ITER + 1):
        e = cmath.exp(z + b * (x - 1.0)) if isinstance(x, complex) or isinstance(z, complex) else math.exp(z + b * (x - 1.0))
        F = x - e
        scale = max(1.0, abs(x))
        dF = 1.0 - b * e
        if dF == 0:
            break
        step = F / dF
        x -= step
        if abs(F) <= _NEWTON_TOL * scale and abs(step) <= _NEWTON_TOL * scale:
            return x, it
    if not real_branch:
        raise NoConvergenceError(f"Newton failed to converge at z = {z!r}")
    return _bisect(z.real if isinstance(z, complex) else z, b)


def _bisect(theta: float, b: float):
    # guaranteed bracket: root in [0, 1] for theta <= 0, in [1, 1/b] for theta > 0
    lo, hi = (0.0, 1.0) if theta <= 0.0 else (1.0, 1.0 / b)
    F = lambda x: x - math.exp(theta + b * (x - 1.0))
    it = 0
    for _ in range(200):
        it += 1
        mid = 0.5 * (lo + hi)
        if F(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
    x = 0.5 * (lo + hi)
    # polish with a few safeguarded Newton steps
    for _ in range(8):
        it += 1
        e = math.exp(theta + b * (x - 1.0))
        d = 1.0 - b * e
        if d <= 0.0:
            break
        x -= (x - e) / d
    return x, it


def solve_x(model: HawkesModel, z) -> CgfEval:
    """Solve the fixed point at real theta <= theta_c or complex z in the strip.

    Real axis: returns the branch with ||alpha||_1 * x <= 1, Newton seeded at
    x = 1 (monotone convergent for the concave map), bisection as fallback.
    Complex z needs Re(z) <= theta_c - 1e-9 and |Im(z)| <= pi, and is seeded
    by continuation from the real-axis solution at Re(z).
    """
    b = model.l1
    tc = model_theta_c(model)
    is_complex = isinstance(z, complex) and z.imag != 0.0
    if is_complex:
        if abs(z.imag) > math.pi + 1e-12:
            raise DomainError(f"complex evaluation restricted to |Im z| <= pi, got {z.imag}")
        if z.real > tc - 1e-9:
            raise DomainError(f"Re(z) = {z.real} beyond theta_c - 1e-9 = {tc - 1e-9}")
    else:
        z = float(z.real) if isinstance(z, complex) else float(z)
        if z > tc:
            raise DomainError(f"theta = {z} beyond theta_c = {tc}")

    if b == 0.0:
        x = cmath.exp(z) if is_complex else math.exp(z)
        return CgfEval(z=z, x_value=x, eta_value=model.nu * (x - 1.0), newton_iterations=0, residual=0.0)

    if not is_complex and abs(z - tc) <= 4e-16 * max(1.0, abs(tc)):
        x = 1.0 / b
        return CgfEval(z=tc, x_value=x, eta_value=model.nu * (x - 1.0),
                       newton_iterations=0, residual=_fixed_point_residual(x, tc, b))

    if is_complex:
        x_seed = solve_x(model, z.real).x_value + 0j
        x, it = _newton(z, b, x_seed, real_branch=False)
    else:
        x, it = _newton(z, b, 1.0, real_branch=True)
        if b * x.real > 1.0 + 1e-12:
            raise NoConvergenceError(f"landed on the unstable branch at theta = {z}")
    return CgfEval(z=z, x_value=x, eta_value=model.nu * (x - 1.0),
                   newton_iterations=it, residual=_fixed_point_residual(x, z, b))


def x_derivatives(model: HawkesModel, theta: float, K: int) -> CgfEval:
    """x^(1)..x^(K) and eta^(k) = nu x^(k) at real theta, by partition recursion.

    x^(k) = x/(1-bx) * [ sum over partitions of k into parts <= k-1 of
    k! b^(m1+..) / prod(m_j! j!^m_j) * prod x^(j)^m_j  +  sum_{l<k} C(k,l)
    sum_{S_l} l! b^(..) / prod(..) * prod x^(j)^m_j ].
    """
    if not 1 <= K <= 8:
        raise ValueError(f"derivative order K must lie in 1..8, got {K}")
    tc = model_theta_c(model)
    if theta > tc - 1e-6:
        raise DomainError(f"derivatives need theta <= theta_c - 1e-6 (theta={theta}, theta_c={tc})")
    ev = solve_x(model, theta)
    b, x = model.l1, float(ev.x_value.real if isinstance(ev.x_value, complex) else ev.x_value)
    if b * x > 1.0 - _NEAR_CRITICAL:
        raise NearCriticalError(f"b*x = {b * x} too close to 1; x' blows up at theta_c")
    xd = np.zeros(K + 1)
    xd[0] = x
    pref = x / (1.0 - b * x)
    for k in range(1, K + 1):
        top = 0.0
        for m in partitions_below_top(k):
            term = faa_weight(m) * b ** sum(m)
            for j, mj in enumerate(m, start=1):
                if mj:
                    term *= xd[j] ** mj
            top += term
        low = 0.0
        for l in range(0, k):
            binom = math.comb(k, l)
            inner = 0.0
            for m in enumerate_Sk(l):
                term = faa_weight(m) * b ** sum(m)
                for j, mj in enumerate(m, start=1):
                    if mj:
                        term *= xd[j] ** mj
                inner += term
            low += binom * inner
        xd[k] = pref * (top + low)
    eta_d = model.nu * xd.copy()
    eta_d[0] = model.nu * (x - 1.0)
    return CgfEval(z=ev.z, x_value=ev.x_value, eta_value=ev.eta_value,
                   newton_iterations=ev.newton_iterations, residual=ev.residual,
                   x_derivs=xd, eta_derivs=eta_d)


def x_derivatives_jet(model: HawkesModel, theta: float, K: int) -> np.ndarray:
    """Same derivatives by order-by-order jet solution of x = exp(u(x)).

    Independent of the partition recursion; used as a cross-check.
    Returns [x, x', .., x^(K)].
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    ev = solve_x(model, theta)
    b = model.l1
    x = float(ev.x_value.real if isinstance(ev.x_value, complex) else ev.x_value)
    if b * x > 1.0 - _NEAR_CRITICAL:
        raise NearCriticalError(f"b*x = {b * x} too close to 1")
    c = np.zeros(K + 1)  # Taylor coefficients of x(theta + eps)
    u = np.zeros(K + 1)  # Taylor coefficients of theta + eps + b(x-1)
    c[0] = x
    u[0] = theta + b * (x - 1.0)
    for k in range(1, K + 1):
        # y = exp(u), y_k = (1/k) sum_{j=1..k} j u_j y_{k-j}; y = c and u_k = b c_k (+1 at k=1)
        partial = sum(j * u[j] * c[k - j] for j in range(1, k))
        shift = 1.0 if k == 1 else 0.0
        # c_k = (partial + k*(b c_k + shift) * c_0) / k  ->  solve linearly for c_k
        c[k] = (partial / k + shift * x) / (1.0 - b * x)
        u[k] = b * c[k] + shift
    fact = np.array([math.factorial(k) for k in range(K + 1)])
    return c * fact


def borel_pmf_log(n: np.ndarray, mu: float) -> np.ndarray:
    """log of the Borel pmf e^{-mu n} (mu n)^{n-1} / n! on n >= 1."""
    n = np.asarray(n, dtype=float)
    return -mu * n + (n - 1.0) * np.log(mu * n) - gammaln(n + 1.0)


def borel_divisibility_residual(model: HawkesModel, theta: float, N: int = 200) -> float:
    """| x(theta) - sum_{n=1}^N e^{theta n} borel(n; ||alpha||_1) |.

    The Borel distribution is the total progeny of a Poisson(mu) branching
    process; a small residual certifies that eta = nu (x - 1) is the CGF of a
    compound Poisson with Borel jumps (lattice supported, infinitely
    divisible).  Warns when the series is truncated too early.
    """
    if N < 50:
        raise ValueError(f"need N >= 50, got {N}")
    tc = model_theta_c(model)
    if theta >= tc:
        raise DomainError(f"need theta < theta_c = {tc}, got {theta}")
    mu = model.l1
    x = solve_x(model, theta).x_value
    if mu == 0.0:
        return abs(x - math.exp(theta))
    n = np.arange(1, N + 1)
    terms = np.exp(theta * n + borel_pmf_log(n, mu))
    if terms[-1] > 1e-14:
        warnings.warn(
            f"Borel series truncated at N={N} with last term {terms[-1]:.2e} > 1e-14",
            TruncationWarning,
        )
    return abs(x - math.fsum(terms))
