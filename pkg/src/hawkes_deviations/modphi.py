"""Finite-time MGF recursion, the limiting functions phi and psi, and their
derivatives, with certified truncation of the infinite series.

The recursion f_s(z) = z + sum_{i=1}^s alpha_i (e^{f_{s-i}(z)} - 1) gives the
exact finite-time log-MGF; e^{f_i} -> x(z) and

    phi(z) = sum_{i>=0} (e^{f_i(z)} - x(z)),     psi(z) = e^{nu phi(z)}.

The truncation certificate bounds the discarded tail with the renewal
majorant machinery from :mod:`.series`: the error sequence
p(i) = |e^{f_i} - x| eventually satisfies the contraction

    p(i) <= (1+delta)|x| ( sum_{j<=i} alpha_j p(i-j) + |x-1| tail_mass(i) ),

so p is dominated by the Gronwall bound with q(i) = (1+delta)|x| alpha_i and
g(i) = C1 tail_mass(i) + C0 alpha_i + C2 1{i<=M}, whose tail sum_{i>T} has a
closed form in terms of the total renewal mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CertificateError, DomainError
from .kernel import ExcitingKernel, HawkesModel
from .cgf import model_theta_c, solve_x, x_derivatives
from .partitions import enumerate_Sk, faa_weight
from .series import renewal_majorant
from .taylor import Jet

_OVERFLOW = 1e300
_DELTA_SCAN = (0.5, 0.25, 0.1, 0.01, 1e-4, 1e-6)
_CONTRACTION_RUN = 20  # consecutive indices the contraction must hold for
_M_SCAN_CAP = 20_000
_T_CAP = 400_000


# ----------------------------------------------------------------------------
# finite-time recursion and log-MGF
# ----------------------------------------------------------------------------


def _f_and_exp(model: HawkesModel, z, T: int):
    """f_i and E_i = e^{f_i} for i = 0..T, straight from the recursion."""
    kern = model.kernel
    is_c = isinstance(z, complex) and z.imag != 0.0
    dtype = complex if is_c else float
    f = np.empty(T + 1, dtype=dtype)
    E = np.empty(T + 1, dtype=dtype)
    f[0] = z
    E[0] = np.exp(z)
    if T == 0:
        return f, E
    if kern.form == "geometric":
        a, r = kern.a, kern.r
        U = 0.0
        for s in range(1, T + 1):
            U = r * (U + a * E[s - 1])
            P = a * r * (1.0 - r**s) / (1.0 - r)
            f[s] = z + U - P
            E[s] = np.exp(f[s])
            if abs(E[s]) > _OVERFLOW:
                raise DomainError(f"e^(f_{s}) overflowed; z = {z!r} outside the convergent regime")
        return f, E
    w = kern.terms(T)  # alpha_1..alpha_T
    Pcum = np.concatenate([[0.0], np.cumsum(w)])
    L = len(kern.weights) if kern.form == "finite" else T
    for s in range(1, T + 1):
        m = min(s, L)
        U = np.dot(w[:m], E[s - m : s][::-1]) if m else 0.0
        f[s] = z + U - Pcum[s]
        E[s] = np.exp(f[s])
        if abs(E[s]) > _OVERFLOW:
            raise DomainError(f"e^(f_{s}) overflowed; z = {z!r} outside the convergent regime")
    return f, E


def f_sequence(model: HawkesModel, z, T: int) -> np.ndarray:
    """f_0(z)..f_T(z); f_0 = z exactly.

    O(T) for geometric kernels (running-sum update), O(T L) for finite
    kernels of length L, O(T^2) otherwise.
    """
    if T < 0:
        raise ValueError(f"T must be >= 0, got {T}")
    f, _ = _f_and_exp(model, z, T)
    return f


def log_mgf(model: HawkesModel, z, t: int):
    """log E[e^{z N_t}] = nu (-t + sum_{i=0}^{t-1} e^{f_i(z)}), exact at finite t."""
    if t < 1:
        raise ValueError(f"horizon must be >= 1, got {t}")
    _, E = _f_and_exp(model, z, t - 1)
    if np.iscomplexobj(E):
        s = complex(math.fsum(E.real), math.fsum(E.imag))
    else:
        s = math.fsum(E)
    return model.nu * (-t + s)


def log_mgf_grid(model: HawkesModel, z: np.ndarray, t: int) -> np.ndarray:
    """log E[e^{z N_t}] on an array of points at once (Fourier-oracle workhorse).

    Supported for geometric and finite kernels, where the per-step state is
    O(1) or O(L) arrays over the grid.
    """
    if t < 1:
        raise ValueError(f"horizon must be >= 1, got {t}")
    z = np.asarray(z, dtype=complex)
    kern = model.kernel
    E = np.exp(z)
    S = E.copy()
    if kern.form == "geometric":
        a, r = kern.a, kern.r
        U = np.zeros_like(z)
        for s in range(1, t):
            U = r * (U + a * E)
            P = a * r * (1.0 - r**s) / (1.0 - r)
            E = np.exp(z + U - P)
            S += E
        return model.nu * (-t + S)
    if kern.form == "finite":
        w = np.asarray(kern.weights)
        L = w.size
        if L == 0:
            return model.nu * t * (np.exp(z) - 1.0)
        Pcum = np.concatenate([[0.0], np.cumsum(w), np.full(max(t - L, 0), float(np.sum(w)))])
        hist = [E]  # last L values of e^{f_.}, newest first
        for s in range(1, t):
            m = min(s, L)
            U = np.zeros_like(z)
            for i in range(1, m + 1):
                U += w[i - 1] * hist[i - 1]
            E = np.exp(z + U - Pcum[min(s, L)])
            S += E
            hist.insert(0, E)
            if len(hist) > L:
                hist.pop()
        return model.nu * (-t + S)
    raise DomainError("grid evaluation supports finite and geometric kernels only")


# ----------------------------------------------------------------------------
# certified truncation of the phi series
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class TailCertificate:
    """Constants of the certified bound and the chosen truncation index."""

    T: int
    tail_bound: float
    delta: float
    M: int
    q_mass: float
    C0: float
    C1: float
    C2: float
    certified: bool


def _tail_masses(kern: ExcitingKernel, n: int) -> np.ndarray:
    """tail_mass(1)..tail_mass(n) as an array."""
    return np.maximum(kern.l1_norm() - np.cumsum(kern.terms(n)), 0.0)


def _contraction_holds(p, w, tails, i: int, fac: float, xm1: float) -> bool:
    conv = float(np.dot(w[:i], p[i - 1 :: -1][:i])) if i else 0.0
    return p[i] <= fac * (conv + xm1 * tails[i - 1]) + 1e-18


def tail_certificate(model: HawkesModel, z, tol: float) -> tuple[TailCertificate, np.ndarray]:
    """Find (delta, M, T) such that sum_{i>T} |e^{f_i}-x| <= tol, certified.

    Returns the certificate and the computed E_0..E_T array.  Raises
    CertificateError when no delta in the scan gives (1+delta)|x| ||alpha||_1 < 1.
    """
    kern = model.kernel
    x = solve_x(model, z).x_value
    xa = abs(x)
    l1 = model.l1

    delta = None
    for d in _DELTA_SCAN:
        if (1.0 + d) * xa * l1 < 1.0:
            delta = d
            break
    if delta is None:
        raise CertificateError(
            f"(1+delta)|x| ||alpha||_1 >= 1 for every delta >= 1e-6 at z = {z!r} (|x| = {xa})"
        )
    fac = (1.0 + delta) * xa
    q_mass = fac * l1

    # grow E and p until the contraction holds on a run of indices
    horizon = 256
    _, E = _f_and_exp(model, z, horizon)
    p = np.abs(E - x)
    w = kern.terms(horizon)
    tails = _tail_masses(kern, horizon)
    xm1 = abs(x - 1.0)

    M = None
    run = 0
    i = 1
    while i <= _M_SCAN_CAP:
        if i + 1 >= horizon:
            horizon *= 2
            _, E = _f_and_exp(model, z, horizon)
            p = np.abs(E - x)
            w = kern.terms(horizon)
            tails = _tail_masses(kern, horizon)
        if _contraction_holds(p, w, tails, i, fac, xm1):
            run += 1
            if run >= _CONTRACTION_RUN:
                M = i - _CONTRACTION_RUN + 1
                break
        else:
            run = 0
        i += 1
    if M is None:
        raise CertificateError(f"contraction inequality never stabilized below index {_M_SCAN_CAP}")

    C1 = fac * xm1
    C0 = fac * float(p[0])
    C2 = float(p[: M + 1].max())
    Q_total = q_mass / (1.0 - q_mass)

    # cheap feasibility screen: even with the renewal term ignored the bound
    # cannot drop below the g-tail; slowly decaying kernels fail here fast
    floor = C1 * kern.tail_mass_cumulative(_T_CAP) + C0 * kern.tail_mass(_T_CAP)
    if floor > tol:
        raise CertificateError(
            f"certified bound cannot reach tol={tol:g} within T={_T_CAP} "
            f"(kernel tail too heavy; residual floor {floor:g})"
        )

    def g_array(n: int) -> np.ndarray:
        g = C1 * _tail_masses(kern, n) + C0 * kern.terms(n)
        g[: min(M, n)] += C2
        return g

    def G_tail(T: int) -> float:
        # sum_{j>T} g(j)
        return C1 * kern.tail_mass_cumulative(T) + C0 * kern.tail_mass(T) + C2 * max(0, M - T)

    def tail_bound(T: int, Q: np.ndarray, g: np.ndarray) -> float:
        # sum_{i>T} b(i) <= G_tail(T) (1 + Q_total) + sum_{j<=T} g(j) TailQ(T-j)
        Qcum = np.concatenate([[0.0], np.cumsum(Q[:T])])
        tailQ = np.maximum(Q_total - Qcum, 0.0)  # tailQ[s] = sum_{u>s} Q(u)
        s_idx = T - np.arange(1, T + 1)
        return G_tail(T) * (1.0 + Q_total) + float(np.dot(g[:T], tailQ[s_idx]))

    T_try = max(M + 2, 8)
    Q = g = None
    while True:
        if T_try > _T_CAP:
            raise CertificateError(f"certified truncation index exceeded cap {_T_CAP}")
        q = fac * kern.terms(T_try)
        Q = renewal_majorant(q, T_try)
        g = g_array(T_try)
        if tail_bound(T_try, Q, g) <= tol:
            break
        T_try *= 2

    # walk back to the smallest T with bound <= tol (the bound is the exact
    # tail of the fixed majorant sequence, hence monotone in T)
    lo, hi = max(M + 1, 1), T_try
    while lo < hi:
        mid = (lo + hi) // 2
        if tail_bound(mid, Q, g) <= tol:
            hi = mid
        else:
            lo = mid + 1
    T = lo
    bound = tail_bound(T, Q, g)

    if T >= E.size:
        _, E = _f_and_exp(model, z, T)
    cert = TailCertificate(T=T, tail_bound=float(bound), delta=delta, M=M,
                           q_mass=q_mass, C0=C0, C1=C1, C2=C2, certified=True)
    return cert, E[: T + 1]


# ----------------------------------------------------------------------------
# phi, psi and derivatives
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ModPhiLimit:
    """Truncated phi(z), psi(z) and the truncation bookkeeping."""

    z: complex | float
    f_values: np.ndarray
    phi_value: complex | float
    psi_value: complex | float
    tail_bound: float
    T: int
    certified: bool
    x_value: complex | float
    psi_derivs: np.ndarray | None = field(default=None)
    certificate: TailCertificate | None = field(default=None)


def phi_psi(model: HawkesModel, z, tol: float = 1e-12, allow_uncertified: bool = False,
            truncation: str = "certified") -> ModPhiLimit:
    """phi(z) = sum (e^{f_i} - x) truncated so the certified tail is <= tol.

    truncation modes: "certified" raises CertificateError when no certified
    bound reaches tol; "heuristic" skips the certificate entirely (25
    consecutive terms below tol/100, flagged uncertified; the only option for
    kernels whose polynomial tails put a certified tol out of reach).
    ``allow_uncertified=True`` tries the certificate first and falls back.
    """
    if tol < 1e-14:
        raise ValueError(f"tolerance must be >= 1e-14, got {tol}")
    if truncation not in ("certified", "heuristic"):
        raise ValueError(f"unknown truncation mode {truncation!r}")
    tc = model_theta_c(model)
    re = z.real if isinstance(z, complex) else z
    if re > tc - 1e-9:
        raise DomainError(f"Re(z) = {re} beyond theta_c - 1e-9 (theta_c = {tc})")
    if truncation == "heuristic":
        cert, E = _heuristic_truncation(model, z, tol)
    else:
        try:
            cert, E = tail_certificate(model, z, tol)
        except CertificateError:
            if not allow_uncertified:
                raise
            cert, E = _heuristic_truncation(model, z, tol)
    x = solve_x(model, z).x_value
    diff = E - x
    if np.iscomplexobj(diff):
        phi = complex(math.fsum(diff.real), math.fsum(diff.imag))
    else:
        phi = math.fsum(diff)
    psi = np.exp(model.nu * phi)
    f_vals = f_sequence(model, z, cert.T)
    return ModPhiLimit(z=z, f_values=f_vals, phi_value=phi, psi_value=psi,
                       tail_bound=cert.tail_bound, T=cert.T, certified=cert.certified,
                       x_value=x, certificate=cert)


def _heuristic_truncation(model: HawkesModel, z, tol: float):
    x = solve_x(model, z).x_value
    horizon, run_need = 512, 25
    while horizon <= _T_CAP:
        _, E = _f_and_exp(model, z, horizon)
        p = np.abs(E - x)
        small = p < tol / 100.0
        run = 0
        for i in range(1, horizon + 1):
            run = run + 1 if small[i] else 0
            if run >= run_need:
                T = i
                cert = TailCertificate(T=T, tail_bound=math.nan, delta=math.nan, M=-1,
                                       q_mass=math.nan, C0=math.nan, C1=math.nan,
                                       C2=math.nan, certified=False)
                return cert, E[: T + 1]
        horizon *= 2
    raise CertificateError("heuristic truncation found no stable tail")


def modphi_residual(model: HawkesModel, z, t: int, tol: float = 1e-13,
                    truncation: str = "certified") -> float:
    """| e^{log_mgf(z,t) - t eta(z)} - psi(z) |, the finite-t mod-phi gap.

    tol/truncation control the psi reference; heavy-tail kernels need
    truncation="heuristic" with a tol matched to the residuals measured.
    """
    eta = solve_x(model, z).eta_value
    psi = phi_psi(model, z, tol=tol, truncation=truncation).psi_value
    return abs(np.exp(log_mgf(model, z, t) - t * eta) - psi)


# -- derivative engines ------------------------------------------------------


def _f_exp_jets(model: HawkesModel, theta: float, K: int, T: int, explicit_exp: bool):
    """Jets of e^{f_i} for i = 0..T at real theta.

    ``explicit_exp`` selects how e^{f_i} derivatives are assembled from the
    f_i jets: the Jet.exp recurrence (production) or the nested partition-sum
    formula (oracle path).  Everything upstream of that choice is shared.
    """
    kern = model.kernel
    zj = Jet.variable(theta, K)

    def exp_jet(fj: Jet) -> Jet:
        if not explicit_exp:
            return fj.exp()
        derivs = fj.derivatives()
        e0 = math.exp(derivs[0])
        out = np.zeros(K + 1)
        out[0] = e0
        for j in range(1, K + 1):
            acc = 0.0
            for q in enumerate_Sk(j):
                term = faa_weight(q) * e0
                for r, qr in enumerate(q, start=1):
                    if qr:
                        term *= derivs[r] ** qr
                acc += term
            out[j] = acc
        return Jet.from_derivatives(out)

    E = [exp_jet(zj)]
    if T == 0:
        return E
    if kern.form == "geometric":
        a, r = kern.a, kern.r
        U = Jet.constant(0.0, K)
        for s in range(1, T + 1):
            U = (U + a * E[s - 1]) * r
            P = a * r * (1.0 - r**s) / (1.0 - r)
            E.append(exp_jet(zj + U - P))
        return E
    w = kern.terms(T)
    L = len(kern.weights) if kern.form == "finite" else T
    Pcum = np.concatenate([[0.0], np.cumsum(w)])
    for s in range(1, T + 1):
        m = min(s, L)
        U = Jet.constant(0.0, K)
        for i in range(1, m + 1):
            if w[i - 1]:
                U = U + w[i - 1] * E[s - i]
        E.append(exp_jet(zj + U - Pcum[s]))
    return E


def _phi_derivative_sums(model: HawkesModel, theta: float, K: int, tol: float, explicit_exp: bool):
    """S_j = sum_{i=0}^{T_ext} ((e^{f_i})^(j) - x^(j)) for j = 0..K.

    T_ext = 2 T_cert + 128 extends the certified value-series truncation; the
    index is a deterministic function of the certificate so the jet and
    explicit assemblies sum identical ranges.
    """
    cert, _ = tail_certificate(model, theta, tol)
    xev = x_derivatives(model, theta, max(K, 1))
    x_d = xev.x_derivs[: K + 1]

    T_ext = min(2 * cert.T + 128, _T_CAP)
    E = _f_exp_jets(model, theta, K, T_ext, explicit_exp)
    sums = np.zeros(K + 1)
    for i in range(T_ext + 1):
        sums += E[i].derivatives() - x_d
    return sums, x_d, cert, T_ext


def psi_derivatives(model: HawkesModel, theta: float, K: int, tol: float = 1e-12) -> np.ndarray:
    """psi^(1)..psi^(K) at real theta by jet propagation through the recursion.

    psi = exp(nu phi) with phi^(j) summed as a series with the same certified
    truncation as phi_psi.
    """
    if not 1 <= K <= 6:
        raise ValueError(f"K must lie in 1..6, got {K}")
    tc = model_theta_c(model)
    if theta > tc - 1e-6:
        raise DomainError(f"psi derivatives need theta <= theta_c - 1e-6 (theta_c = {tc})")
    sums, _, _, _ = _phi_derivative_sums(model, theta, K, tol, explicit_exp=False)
    phi_jet = Jet.from_derivatives(sums)
    psi_jet = (model.nu * phi_jet).exp()
    return psi_jet.derivatives()[1:]


def psi_derivatives_explicit(model: HawkesModel, theta: float, K: int, tol: float = 1e-12) -> np.ndarray:
    """Test oracle: psi^(k) assembled by the nested partition sums.

    psi^(k) = sum_{S_k} k! nu^(m1+..+mk) psi / prod(m_j! j!^m_j)
              * prod_j (sum_i ((e^{f_i})^(j) - x^(j)))^m_j,
    with (e^{f_i})^(j) itself a partition sum over the f_i derivatives.
    """
    if not 1 <= K <= 6:
        raise ValueError(f"K must lie in 1..6, got {K}")
    sums, _, _, _ = _phi_derivative_sums(model, theta, K, tol, explicit_exp=True)
    psi = math.exp(model.nu * sums[0])
    out = np.zeros(K)
    for k in range(1, K + 1):
        acc = 0.0
        for m in enumerate_Sk(k):
            term = faa_weight(m) * model.nu ** sum(m) * psi
            for j, mj in enumerate(m, start=1):
                if mj:
                    term *= sums[j] ** mj
            acc += term
        out[k - 1] = acc
    return out
