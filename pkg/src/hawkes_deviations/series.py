"""Sequence utilities: convolution powers, the renewal majorant Q, the
generalized Gronwall bound, and an Abel rearrangement self-test.

Sequences are indexed from 1.  The functions take plain arrays (or lists)
whose element 0 holds the index-1 term, and return arrays in the same
convention.  Index 0 of the underlying recursions is implicitly zero.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import fftconvolve

from .errors import SubcriticalityError

# relative truncation target for the j-series of Q (geometric remainder bound)
_Q_SERIES_REL = 1e-16


def _as_seq(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _conv1(x: np.ndarray, y: np.ndarray, n: int) -> np.ndarray:
    """(x*y)(i) = sum_{u=1}^{i-1} x(u) y(i-u) on 1..n, 1-indexed arrays.

    FFT convolution beyond 4096 entries; roundoff there is ~1e-15 relative,
    negligible against every tolerance used, with negatives clamped so
    majorants stay nonnegative.
    """
    if n <= 1:
        return np.zeros(n)
    if n <= 4096:
        z = np.convolve(x[: n], y[: n])[: n - 1]
    else:
        z = fftconvolve(x[: n], y[: n])[: n - 1]
        np.maximum(z, 0.0, out=z)
    return np.concatenate([[0.0], z])


def convolution_power(q, j: int, n: int) -> np.ndarray:
    """q^{*j} on indices 1..n, with q^{*1} = q.

    The discrete convolution runs over interior indices only, so q^{*j}
    concentrates on indices >= j.
    """
    q = _as_seq(q, "q")
    if j < 1:
        raise ValueError(f"convolution power must be >= 1, got {j}")
    if n < 1:
        raise ValueError(f"length must be >= 1, got {n}")
    base = np.zeros(n)
    m = min(n, q.size)
    base[:m] = q[:m]
    out = base.copy()
    for _ in range(j - 1):
        out = _conv1(out, base, n)
    return out


def renewal_majorant(q, n: int) -> np.ndarray:
    """Q(i) = sum_{j>=1} q^{*j}(i) on 1..n, for subcritical q (sum q < 1).

    The j-series is truncated when the geometric remainder bound
    (sum q)^{J+1} / (1 - sum q) drops below 1e-16 of the running total mass.
    Partial sums are doubled (Q_2J = Q_J + q^{*J} * Q_J) so near-critical q,
    where J runs into the tens of thousands, costs only log J convolutions.
    """
    q = _as_seq(q, "q")
    if n < 1:
        raise ValueError(f"length must be >= 1, got {n}")
    if q.size and q.min() < 0.0:
        raise ValueError("q must be nonnegative")
    mass = float(q.sum())
    if mass >= 1.0:
        raise SubcriticalityError(f"renewal series needs sum q < 1, got {mass}")
    qn = np.zeros(n)
    qn[: min(n, q.size)] = q[: min(n, q.size)]
    Q = qn.copy()
    if mass == 0.0:
        return Q
    power = qn.copy()  # q^{*J} with J the current partial-sum length
    J = 1
    while mass ** (J + 1) / (1.0 - mass) > _Q_SERIES_REL * max(float(Q.sum()), 1e-300):
        if not power.any():
            break  # q^{*J} has left the window; higher powers contribute nothing
        Q = Q + _conv1(power, Q, n)
        power = _conv1(power, power, n)
        J *= 2
    return Q


def gronwall_majorant(q, g, n: int) -> np.ndarray:
    """The bound b(i) = sum_{j<i} Q(i-j) g(j) + g(i) on 1..n.

    Any nonnegative p with p(1) <= g(1) and
    p(i) <= sum_{j<i} q(i-j) p(j) + g(i) satisfies p(i) <= b(i).
    """
    q = _as_seq(q, "q")
    g = _as_seq(g, "g")
    if n < 1:
        raise ValueError(f"length must be >= 1, got {n}")
    if (q.size and q.min() < 0.0) or (g.size and g.min() < 0.0):
        raise ValueError("q and g must be nonnegative")
    gn = np.zeros(n)
    gn[: min(n, g.size)] = g[: min(n, g.size)]
    Q = renewal_majorant(q, n)
    return _conv1(Q, gn, n) + gn


def abel_tail_sums(b, p: int) -> np.ndarray:
    """B_k = sum_{i>k} b_i for k = 0..p, from the finite tail of b."""
    b = _as_seq(b, "b")
    total = float(b.sum())
    B = np.empty(p + 1)
    run = total
    for k in range(p + 1):
        B[k] = run
        if k < b.size:
            run -= b[k]
    return B


def abel_identity_residual(a, b, p: int) -> float:
    """| sum_{k=1}^p a_k b_k  -  (a_1 B_0 + sum_{k=1}^{p-1} (a_{k+1}-a_k) B_k - a_p B_p) |.

    A pure self-test of the rearrangement identity and of B_k bookkeeping.
    """
    a = _as_seq(a, "a")
    b = _as_seq(b, "b")
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    if a.size < p:
        raise ValueError(f"need at least p={p} terms of a, got {a.size}")
    B = abel_tail_sums(b, p)
    bn = np.zeros(p)
    bn[: min(p, b.size)] = b[: min(p, b.size)]
    lhs = float(np.dot(a[:p], bn))
    rhs = a[0] * B[0] + float(math.fsum((a[k] - a[k - 1]) * B[k] for k in range(1, p))) - a[p - 1] * B[p]
    return abs(lhs - rhs)
