"""Rate function, saddle point, correction coefficients and the assembled
precise deviation approximations, plus the Fourier-inversion oracle.

Notation: b = ||alpha||_1, mean = nu/(1-b) (the LLN rate),

    I(x)   = x log(x/(nu + b x)) - x + b x + nu,
    theta* = log(x/(nu + b x)) - b x/(nu + b x) + b     (eta'(theta*) = x),

and the pmf/tail approximations

    P(N_t = tx)  ~ e^{-t I} sqrt(I''/(2 pi t)) (psi(theta*) + a_1/t + ...),
    P(N_t >= tx) ~ same * 1/(1 - e^{-theta*}) with b_k coefficients.

The a_k are double partition sums over S_l in the derivatives of eta and psi
at theta*; the b_k add an outer partition sum carrying the lattice-factor
derivatives.  The assembled b_k here carry an extra (1 - e^{-theta*}) factor
relative to the raw triple sum so that the series multiplied by the lattice
prefactor reproduces exact Poisson tails to O(t^-v); the raw n = 0 slice
equals a_k/(1 - e^{-theta*}), which tests assert.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, SaturationError
from .kernel import HawkesModel
from .cgf import model_theta_c, solve_x, x_derivatives
from .modphi import log_mgf_grid, phi_psi, psi_derivatives
from .partitions import enumerate_Sk, odd_double_factorial

MAX_ORDER = 4  # expansion order v; coefficients through a_3/b_3


# ----------------------------------------------------------------------------
# closed forms
# ----------------------------------------------------------------------------


def rate(model: HawkesModel, x: float) -> float:
    """The large-deviation rate I(x); +inf for x < 0, I(0) = nu."""
    if x < 0.0:
        return math.inf
    if x == 0.0:
        return model.nu
    b = model.l1
    return x * math.log(x / (model.nu + x * b)) - x + x * b + model.nu


def rate_derivatives(model: HawkesModel, x: float, i: int) -> float:
    """I^(i)(x) for i >= 2, closed form.

    I''(x) = nu^2 / (x (nu + b x)^2); higher orders via
    (i-2)! (-1)^(i-2) x^(1-i) ((i-1) w^i - i w^(i-1) + 1), w = b x/(nu + b x).
    """
    if i < 2:
        raise ValueError(f"rate derivatives defined for i >= 2, got {i}")
    if x <= 0.0:
        raise DomainError(f"rate derivatives need x > 0, got {x}")
    b = model.l1
    w = b * x / (model.nu + b * x)
    return (
        math.factorial(i - 2)
        * (-1.0) ** (i - 2)
        * x ** (1 - i)
        * ((i - 1) * w**i - i * w ** (i - 1) + 1.0)
    )


def theta_star(model: HawkesModel, x: float) -> float:
    """The saddle point: eta'(theta*) = x; positive iff x exceeds the mean."""
    if x <= 0.0:
        raise DomainError(f"saddle point needs x > 0, got {x}")
    b = model.l1
    d = model.nu + b * x
    return math.log(x / d) - b * x / d + b


def legendre_check(model: HawkesModel, x: float) -> float:
    """| I(x) - (theta* x - eta(theta*)) |; the closed form must equal the transform."""
    ts = theta_star(model, x)
    eta = solve_x(model, ts).eta_value
    return abs(rate(model, x) - (ts * x - float(np.real(eta))))


# ----------------------------------------------------------------------------
# coefficient assemblies
# ----------------------------------------------------------------------------


def _inner_sum(k: int, l: int, eta_d: np.ndarray) -> float:
    """sum over S_l of the eta-derivative products with the double factorial factor."""
    e2 = eta_d[2]
    acc = 0.0
    for m in enumerate_Sk(l):
        msum = sum(m)
        denom = 1.0
        prod = 1.0
        for j, mj in enumerate(m, start=1):
            if mj:
                denom *= math.factorial(mj) * math.factorial(j) ** mj
                prod *= (eta_d[j + 2] / (e2 * (j + 2) * (j + 1))) ** mj
        acc += ((-1.0) ** msum / denom) * prod * (
            (-1.0) ** k * odd_double_factorial(2 * (k + msum) - 1) / e2**k
        )
    return acc


def _a_from_derivs(K: int, eta_d: np.ndarray, psi_all: np.ndarray) -> np.ndarray:
    """a_1..a_K given eta_d[j] = eta^(j)(theta*) and psi_all[j] = psi^(j)(theta*)."""
    out = np.zeros(K)
    for k in range(1, K + 1):
        acc = 0.0
        for l in range(0, 2 * k + 1):
            acc += psi_all[2 * k - l] / math.factorial(2 * k - l) * _inner_sum(k, l, eta_d)
        out[k - 1] = acc
    return out


def _b_tilde_slice(k: int, n: int, ts: float, eta_d: np.ndarray, psi_all: np.ndarray) -> float:
    """The n-th outer slice of the raw (uncompensated) tail coefficient."""
    emt = math.exp(-ts)
    acc = 0.0
    for m in enumerate_Sk(n):
        msum = sum(m)
        denom = 1.0
        sign = 1.0
        for j, mj in enumerate(m, start=1):
            if mj:
                denom *= math.factorial(mj) * math.factorial(j) ** mj
                sign *= (-1.0) ** (j * mj)
        outer = math.exp(-msum * ts) * math.factorial(msum) * (1.0 - emt) ** (-msum - 1) / denom * sign
        inner = 0.0
        for l in range(0, 2 * k - n + 1):
            inner += psi_all[2 * k - n - l] / math.factorial(2 * k - n - l) * _inner_sum(k, l, eta_d)
        acc += outer * inner
    return acc


def _b_from_derivs(K: int, ts: float, eta_d: np.ndarray, psi_all: np.ndarray) -> np.ndarray:
    """b_1..b_K: (1 - e^{-theta*}) times the raw triple partition sum."""
    latt = 1.0 - math.exp(-ts)
    out = np.zeros(K)
    for k in range(1, K + 1):
        out[k - 1] = latt * math.fsum(_b_tilde_slice(k, n, ts, eta_d, psi_all) for n in range(0, 2 * k + 1))
    return out


def _expansion_inputs(model: HawkesModel, ts: float, K: int, tol: float = 1e-12):
    """(psi(theta*), psi_all[0..2K], eta_d[0..2K+2]) with derivatives as needed."""
    lim = phi_psi(model, ts, tol=tol)
    psi0 = float(np.real(lim.psi_value))
    if K == 0:
        return psi0, np.array([psi0]), None
    ev = x_derivatives(model, ts, 2 * K + 2)
    eta_d = ev.eta_derivs
    pd = psi_derivatives(model, ts, 2 * K, tol=tol)
    psi_all = np.concatenate([[psi0], pd])
    return psi0, psi_all, eta_d


def coefficients_a(model: HawkesModel, ts: float, K: int) -> np.ndarray:
    """a_1..a_K at the saddle theta*; K <= 3."""
    if not 1 <= K <= MAX_ORDER - 1:
        raise ValueError(f"K must lie in 1..{MAX_ORDER - 1}, got {K}")
    _, psi_all, eta_d = _expansion_inputs(model, ts, K)
    return _a_from_derivs(K, eta_d, psi_all)


def coefficients_b(model: HawkesModel, ts: float, K: int) -> np.ndarray:
    """b_1..b_K at the saddle theta* > 0; K <= 3."""
    if not 1 <= K <= MAX_ORDER - 1:
        raise ValueError(f"K must lie in 1..{MAX_ORDER - 1}, got {K}")
    if ts <= 0.0:
        raise DomainError(f"tail coefficients need theta* > 0, got {ts}")
    _, psi_all, eta_d = _expansion_inputs(model, ts, K)
    return _b_from_derivs(K, ts, eta_d, psi_all)


# ----------------------------------------------------------------------------
# queries and assembled expansions
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class DeviationQuery:
    """A pmf/tail/moderate request; validates its own invariants."""

    model: HawkesModel
    t: int
    x: float
    v: int = 1
    mode: str = "pmf"

    def __post_init__(self):
        if self.mode not in ("pmf", "tail", "moderate"):
            raise ValueError(f"mode must be pmf, tail or moderate, got {self.mode!r}")
        if self.t < 1:
            raise ValueError(f"horizon t must be >= 1, got {self.t}")
        if not 1 <= self.v <= MAX_ORDER:
            raise ValueError(f"order v must lie in 1..{MAX_ORDER}, got {self.v}")
        if self.mode == "pmf":
            if self.x <= 0.0:
                raise DomainError(f"pmf mode needs x > 0, got {self.x}")
            tx = self.t * self.x
            if abs(tx - round(tx)) > 1e-9 * max(1.0, abs(tx)):
                raise DomainError(f"pmf mode needs t*x integral, got {tx}")
        if self.mode == "tail" and self.x <= self.model.mean_rate:
            raise DomainError(
                f"tail mode needs x above the mean rate {self.model.mean_rate}, got {self.x}"
            )
        # moment hypothesis for the requested order
        self.model.kernel.power_moment(self.v + 1)


@dataclass(frozen=True)
class DeviationResult:
    """Assembled approximation with every ingredient kept inspectable."""

    mode: str
    t: int
    x: float
    v: int
    exponent: float            # t * I(x)
    prefactor: float           # sqrt(I''(x) / (2 pi t))
    lattice_factor: float      # 1/(1 - e^{-theta*}) in tail mode, else 1
    theta_star: float
    psi_value: float
    coefficients: np.ndarray   # a_1..a_{v-1} or b_1..b_{v-1}
    series_value: float        # psi + sum coeff_k / t^k
    probability: float
    valid: bool
    dominance_threshold_t: int
    diagnostics: dict = field(default_factory=dict)


def _dominance_threshold(psi0: float, coeffs: np.ndarray) -> int:
    """Smallest t with sum_k |c_k|/t^k < psi/2 (corrections subdominant)."""
    if coeffs.size == 0:
        return 1
    def ok(t: float) -> bool:
        return sum(abs(c) / t ** (k + 1) for k, c in enumerate(coeffs)) < psi0 / 2.0
    t = 1.0
    while not ok(t):
        t *= 2.0
        if t > 1e15:
            return int(1e15)
    lo, hi = max(1, int(t // 2)), int(t)
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def _assemble(query: DeviationQuery) -> DeviationResult:
    model, t, x, v = query.model, query.t, query.x, query.v
    tc = model_theta_c(model)
    ts = theta_star(model, x)
    if ts >= tc - 1e-6:
        raise SaturationError(
            f"theta*(x) = {ts} within 1e-6 of theta_c = {tc}; x beyond the expansion's reach"
        )
    K = v - 1
    psi0, psi_all, eta_d = _expansion_inputs(model, ts, K)
    if query.mode == "tail":
        coeffs = _b_from_derivs(K, ts, eta_d, psi_all) if K else np.zeros(0)
        latt = 1.0 / (1.0 - math.exp(-ts))
    else:
        coeffs = _a_from_derivs(K, eta_d, psi_all) if K else np.zeros(0)
        latt = 1.0
    I = rate(model, x)
    Ipp = rate_derivatives(model, x, 2)
    pref = math.sqrt(Ipp / (2.0 * math.pi * t))
    series = float(psi0 + sum(c / t ** (k + 1) for k, c in enumerate(coeffs)))
    log_amp = -t * I + math.log(pref) + math.log(latt)
    amp = math.exp(log_amp) if log_amp > -745.0 else 0.0
    prob = amp * series
    t_dom = _dominance_threshold(psi0, coeffs)
    valid = bool(series > 0.0 and 0.0 < prob <= 1.0)
    return DeviationResult(
        mode=query.mode, t=t, x=x, v=v,
        exponent=t * I, prefactor=pref, lattice_factor=latt, theta_star=ts,
        psi_value=psi0, coefficients=coeffs, series_value=series,
        probability=prob, valid=valid, dominance_threshold_t=t_dom,
        diagnostics={"log_amplitude": log_amp, "rate": I, "rate_second": Ipp},
    )


def pmf_expansion(query: DeviationQuery) -> DeviationResult:
    """P(N_t = t x) through order v-1."""
    if query.mode != "pmf":
        raise ValueError("pmf_expansion needs a pmf-mode query")
    return _assemble(query)


def tail_expansion(query: DeviationQuery) -> DeviationResult:
    """P(N_t >= t x) through order v-1, with the lattice factor."""
    if query.mode != "tail":
        raise ValueError("tail_expansion needs a tail-mode query")
    return _assemble(query)


def moderate_valid(t: int, y: float, m: int) -> bool:
    """Whether y sits inside the o(t^(1/2 - 1/m)) moderate regime."""
    return y <= t ** (0.5 - 1.0 / m)


def moderate_expansion(model: HawkesModel, t: int, y: float, m: int) -> float:
    """Moderate-deviation approximation of
    P(N_t >= mean t + sqrt(t) sqrt(nu)/(1-b)^{3/2} y).

    Returns 1/(y sqrt(2 pi)) * exp(- sum_{i=2}^{m-1} I^(i)(mean)/i! *
    eta''(0)^{i/2} y^i / t^{(i-2)/2}); the leading i = 2 term is y^2/2
    exactly.  The (1 + o(1)) factor is NOT folded in; callers should treat
    the value as asymptotic (see moderate_valid).
    """
    if y <= 0.0:
        raise DomainError(f"moderate deviations need y > 0, got {y}")
    if m < 3:
        raise DomainError(f"moderate order m must be >= 3, got {m}")
    if t < 1:
        raise ValueError(f"horizon t must be >= 1, got {t}")
    mean = model.mean_rate
    eta2 = model.nu / (1.0 - model.l1) ** 3
    expo = 0.0
    for i in range(2, m):
        expo += (
            rate_derivatives(model, mean, i) / math.factorial(i)
            * eta2 ** (i / 2.0) * y**i / t ** ((i - 2) / 2.0)
        )
    return math.exp(-expo) / (y * math.sqrt(2.0 * math.pi))


# ----------------------------------------------------------------------------
# Fourier-inversion oracle
# ----------------------------------------------------------------------------


class FourierOracle:
    """Exact finite-t pmf/tail by lattice inversion of the MGF on a tilted contour.

    P(N_t = n) = (1/2 pi) int_{-pi}^{pi} exp(log_mgf(theta + i phi, t)
    - (theta + i phi) n) d phi for any theta in the strip; the trapezoid rule
    on 2^16 nodes is exact for lattice laws up to aliasing (< 1e-300 here).
    Tilting at theta ~ theta*(n/t) keeps the integrand O(1) relative to the
    target so double precision resolves pmfs down to ~1e-290.
    """

    def __init__(self, model: HawkesModel, t: int, theta: float = 0.0, nodes: int = 1 << 16):
        tc = model_theta_c(model)
        if theta > tc - 1e-6:
            raise DomainError(f"tilt theta = {theta} too close to theta_c = {tc}")
        self.model, self.t, self.theta, self.nodes = model, t, theta, nodes
        z = theta + 2j * math.pi * np.arange(nodes) / nodes
        L = log_mgf_grid(model, z, t)
        self.log_norm = float(L[0].real)  # log E[e^{theta N_t}]
        self.q = np.fft.fft(np.exp(L - self.log_norm)).real / nodes

    def log_pmf(self, n: int) -> float:
        qn = self.q[n]
        if qn <= 0.0:
            return -math.inf
        return math.log(qn) + self.log_norm - self.theta * n

    def pmf(self, n: int) -> float:
        lp = self.log_pmf(n)
        return math.exp(lp) if lp > -745.0 else 0.0

    def log_tail(self, n: int) -> float:
        m = np.arange(self.nodes)
        logs = np.where(self.q > 0.0, np.log(np.maximum(self.q, 1e-320)), -np.inf)
        if self.theta > 0.0:
            sel = m >= n
            return float(logsumexp(logs[sel] - self.theta * m[sel])) + self.log_norm
        # below-mean tilt: sum the complement, which the tilted weights resolve
        sel = m < n
        if not sel.any():
            return 0.0
        head = float(logsumexp(logs[sel] - self.theta * m[sel])) + self.log_norm
        return math.log1p(-min(math.exp(head), 1.0)) if head < 0.0 else -math.inf

    def tail(self, n: int) -> float:
        lt = self.log_tail(n)
        return math.exp(lt) if lt > -745.0 else 0.0


def _auto_tilt(model: HawkesModel, t: int, n: int) -> float:
    x = max(n, 1) / t
    ts = theta_star(model, x)
    tc = model_theta_c(model)
    hi = tc - 1e-3 if math.isfinite(tc) else 50.0
    return float(np.clip(ts, -30.0, hi))


def pmf_fourier(model: HawkesModel, t: int, n: int, nodes: int = 1 << 16) -> float:
    """Oracle P(N_t = n), tilted at theta*(n/t)."""
    return FourierOracle(model, t, _auto_tilt(model, t, n), nodes).pmf(n)


def tail_fourier(model: HawkesModel, t: int, n: int, nodes: int = 1 << 16) -> float:
    """Oracle P(N_t >= n), tilted at theta*(n/t)."""
    return FourierOracle(model, t, _auto_tilt(model, t, n), nodes).tail(n)
