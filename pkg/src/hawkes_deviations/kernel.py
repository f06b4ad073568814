"""Exciting kernels and the Hawkes model container.

The kernel is the nonnegative weight sequence alpha = (alpha_i)_{i>=1} feeding
past counts back into the intensity (alpha_0 = 0 by convention).  Three forms
are supported:

* ``finite``    explicit weights w_1..w_L,
* ``geometric`` alpha_i = a * r**i with a >= 0, 0 < r < 1,
* ``custom``    a callable term function plus a caller-supplied summable
                majorant tail, which makes every sum certifiably convergent.

All sums (l1 norm, tails, power moments) are exact closed forms where they
exist and tail-bounded summation otherwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DivergentMomentError, NonSummableKernelError, SubcriticalityError

# Truncation rule for majorant-bounded sums: stop once the majorant tail is
# below this fraction of the running partial sum.
_TAIL_REL = 1e-16
_MAX_TERMS = 50_000_000


def _check_weight(w: float, where: str) -> float:
    w = float(w)
    if math.isnan(w) or math.isinf(w):
        raise NonSummableKernelError(f"{where}: weight {w!r} is not finite")
    if w < 0.0:
        raise NonSummableKernelError(f"{where}: negative weight {w}")
    return w


@dataclass(frozen=True)
class ExcitingKernel:
    """Immutable exciting sequence with queryable l1 norm, tails and moments.

    Use the constructors :meth:`finite`, :meth:`geometric`, :meth:`custom`.
    """

    form: str
    weights: tuple[float, ...] = ()
    a: float = 0.0
    r: float = 0.0
    term_fn: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    majorant_tail: Callable[[int], float] | None = field(default=None, repr=False)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def finite(weights: Sequence[float]) -> "ExcitingKernel":
        ws = tuple(_check_weight(w, "finite kernel") for w in weights)
        return ExcitingKernel(form="finite", weights=ws)

    @staticmethod
    def geometric(a: float, r: float) -> "ExcitingKernel":
        a = _check_weight(a, "geometric kernel amplitude")
        r = float(r)
        if not (0.0 < r < 1.0):
            raise NonSummableKernelError(f"geometric ratio must lie in (0,1), got {r}")
        return ExcitingKernel(form="geometric", a=a, r=r)

    @staticmethod
    def custom(
        term_fn: Callable[[np.ndarray], np.ndarray],
        majorant_tail: Callable[[int], float],
    ) -> "ExcitingKernel":
        """Kernel from a vectorized term function alpha(i) for integer i >= 1.

        ``majorant_tail(i)`` must bound sum_{j>i} alpha_j from above and
        decrease to 0; it certifies truncation of every sum.
        """
        k = ExcitingKernel(form="custom", term_fn=term_fn, majorant_tail=majorant_tail)
        t0 = float(majorant_tail(0))
        if not math.isfinite(t0) or t0 < 0.0:
            raise NonSummableKernelError(f"majorant tail at 0 is {t0!r}, not a finite bound")
        probe = np.asarray(term_fn(np.arange(1, 9)), dtype=float)
        if np.any(~np.isfinite(probe)) or np.any(probe < 0.0):
            raise NonSummableKernelError("custom kernel terms must be finite and nonnegative")
        return k

    @staticmethod
    def poisson() -> "ExcitingKernel":
        """The empty kernel: no self-excitation, N_t is plain Poisson(nu*t)."""
        return ExcitingKernel.finite([])

    # -- elementwise access ------------------------------------------------

    def terms(self, n: int) -> np.ndarray:
        """alpha_1..alpha_n as a dense array (index 0 of the result is alpha_1)."""
        if n <= 0:
            return np.zeros(0)
        if self.form == "finite":
            out = np.zeros(n)
            L = min(n, len(self.weights))
            out[:L] = self.weights[:L]
            return out
        if self.form == "geometric":
            return self.a * self.r ** np.arange(1, n + 1)
        return np.asarray(self.term_fn(np.arange(1, n + 1)), dtype=float)

    # -- summaries ---------------------------------------------------------

    def l1_norm(self) -> float:
        """sum_{i>=1} alpha_i."""
        if self.form == "finite":
            return float(math.fsum(self.weights))
        if self.form == "geometric":
            return self.a * self.r / (1.0 - self.r)
        return self._custom_sum(power=0)

    def tail_mass(self, i: int) -> float:
        """sum_{j>i} alpha_j; tail_mass(0) equals the l1 norm."""
        if i < 0:
            raise ValueError(f"tail index must be >= 0, got {i}")
        if self.form == "finite":
            return float(math.fsum(self.weights[i:]))
        if self.form == "geometric":
            return self.a * self.r ** (i + 1) / (1.0 - self.r)
        return self.l1_norm() - self._custom_sum(power=0, stop=i)

    def tail_mass_cumulative(self, i: int) -> float:
        """sum_{j>i} tail_mass(j) = sum_{m>i+1} (m-i-1) alpha_m.

        Exact (closed form) for finite and geometric kernels; for custom
        kernels a certified upper bound from the majorant tail (used only
        inside truncation bounds, where overestimating is safe).
        """
        if self.form == "finite":
            L = len(self.weights)
            if i + 2 > L:
                return 0.0
            m = np.arange(i + 2, L + 1)
            return float(np.dot(m - i - 1, np.asarray(self.weights[i + 1 :])))
        if self.form == "geometric":
            return self.a * self.r ** (i + 2) / (1.0 - self.r) ** 2
        return self._first_moment_tail_bound(i + 1, shift=i + 1)

    def power_moment(self, p: int) -> float:
        """sum_{i>=1} i**p alpha_i.

        Raises DivergentMomentError when the moment is infinite, or when a
        custom kernel's majorant decays too slowly to certify the sum to the
        1e-16 relative truncation target within the term budget (conservative
        refusal: the moment gates expansion orders, so failing closed is safe).
        """
        if p < 0:
            raise ValueError(f"moment order must be >= 0, got {p}")
        if self.form == "finite":
            return float(math.fsum((i + 1) ** p * w for i, w in enumerate(self.weights)))
        if self.form == "geometric":
            if p == 0:
                return self.l1_norm()
            if p == 1:
                return self.a * self.r / (1.0 - self.r) ** 2
            if p == 2:
                return self.a * self.r * (1.0 + self.r) / (1.0 - self.r) ** 3
            return self._geometric_moment_sum(p)
        return self._custom_sum(power=p)

    # -- internal summation helpers ----------------------------------------

    def _geometric_moment_sum(self, p: int) -> float:
        # i^p r^i decays geometrically once r*((i+1)/i)^p < 1
        total, i, block = 0.0, 1, 4096
        while i <= _MAX_TERMS:
            idx = np.arange(i, i + block, dtype=float)
            total += float(np.dot(idx**p, self.a * self.r**idx))
            i += block
            ratio = self.r * ((i + 1) / i) ** p
            if ratio < 1.0:
                rem = self.a * i**p * self.r**i / (1.0 - ratio)
                if rem <= _TAIL_REL * max(total, 1e-300):
                    return total
        raise DivergentMomentError(f"geometric moment p={p} summation exhausted")

    def _abel_tail_series(self, hi: int, increment) -> float:
        """Upper bound on sum_{k>hi} increment(k, step) . T(k) style Abel tails.

        Sums doubling blocks, bounding each block by its leading majorant
        value; once block contributions decay at a measured ratio < 0.95 the
        geometric extrapolation closes the remainder (inflated 2x).  Returns
        inf when blocks refuse to decay (divergent or too slow to certify).
        """
        T = self.majorant_tail
        k, step = hi + 1, 1
        acc, last = 0.0, None
        for _ in range(260):
            piece = increment(k, step) * float(T(k - 1))
            acc += piece
            if piece < 1e-300:
                return acc
            if last is not None and piece < 0.95 * last:
                ratio = piece / last
                rem = piece * ratio / (1.0 - ratio)
                if rem <= 1e-2 * max(acc, 1e-300):
                    return acc + 2.0 * rem
            last = piece
            k += step
            step *= 2
        return math.inf

    def _first_moment_tail_bound(self, hi: int, shift: int = 0) -> float:
        """Upper bound on sum_{m>hi} (m-shift) alpha_m from the majorant tail.

        Abel rearrangement: (hi+1-shift) T(hi) + sum_{k>hi} T(k).
        """
        lead = (hi + 1 - shift) * float(self.majorant_tail(hi))
        tail = self._abel_tail_series(hi, lambda k, step: float(step))
        if not math.isfinite(tail):
            raise NonSummableKernelError("majorant tail decays too slowly to certify")
        return lead + tail

    def _custom_sum(self, power: int, stop: int | None = None) -> float:
        """sum_{i=1}^{stop or infinity} i**power alpha_i with certified truncation."""
        if stop is not None:
            if stop <= 0:
                return 0.0
            idx = np.arange(1, stop + 1, dtype=float)
            return float(np.dot(idx**power, np.asarray(self.term_fn(np.arange(1, stop + 1)), dtype=float)))
        total, lo, block = 0.0, 1, 8192
        while lo <= _MAX_TERMS:
            idx = np.arange(lo, lo + block)
            vals = np.asarray(self.term_fn(idx), dtype=float)
            if np.any(~np.isfinite(vals)) or np.any(vals < 0.0):
                raise NonSummableKernelError("custom kernel produced an invalid term")
            total += float(np.dot(idx.astype(float) ** power, vals))
            hi = lo + block - 1
            if power == 0:
                rem = float(self.majorant_tail(hi))
            else:
                # sum_{m>hi} m^p alpha_m <= sum_{m>hi} m^p (T(m-1)-T(m)); bound via Abel
                rem = self._power_moment_tail_bound(hi, power)
            if not math.isfinite(rem):
                raise DivergentMomentError(f"majorant moment p={power} diverges")
            if rem <= _TAIL_REL * max(total, 1e-300) or rem < 1e-300:
                return total
            lo += block
            block *= 2
        raise DivergentMomentError(f"moment p={power} summation exhausted ({_MAX_TERMS} terms)")

    def _power_moment_tail_bound(self, hi: int, p: int) -> float:
        """Upper bound on sum_{m>hi} m^p alpha_m via Abel against the majorant tail.

        sum_{m>hi} m^p alpha_m = (hi+1)^p T(hi) + sum_{k>hi} ((k+1)^p - k^p) T(k);
        inf when the Abel series fails to decay (divergent moment).
        """
        lead = float(hi + 1) ** p * float(self.majorant_tail(hi))
        tail = self._abel_tail_series(hi, lambda k, step: float(k + step) ** p - float(k) ** p)
        return lead + tail

    # -- serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        if self.form == "finite":
            return {"type": "finite", "weights": list(self.weights)}
        if self.form == "geometric":
            return {"type": "geometric", "a": self.a, "r": self.r}
        raise ValueError("custom kernels have no JSON descriptor")


def kernel_from_json(obj: dict | str) -> ExcitingKernel:
    """Parse {"type":"finite","weights":[...]} or {"type":"geometric","a":..,"r":..}."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    problems = []
    kind = obj.get("type")
    if kind == "finite":
        if "weights" not in obj or not isinstance(obj["weights"], list):
            problems.append("weights: required list of nonnegative reals")
        if problems:
            raise ValueError("invalid kernel descriptor: " + "; ".join(problems))
        return ExcitingKernel.finite(obj["weights"])
    if kind == "geometric":
        for key in ("a", "r"):
            if key not in obj or not isinstance(obj[key], (int, float)):
                problems.append(f"{key}: required real")
        if problems:
            raise ValueError("invalid kernel descriptor: " + "; ".join(problems))
        return ExcitingKernel.geometric(obj["a"], obj["r"])
    raise ValueError(f"invalid kernel descriptor: type must be 'finite' or 'geometric', got {kind!r}")


@dataclass(frozen=True)
class HawkesModel:
    """Baseline rate nu > 0 plus an exciting kernel with ||alpha||_1 < 1.

    The single source of model parameters; immutable and safe to share.
    """

    nu: float
    kernel: ExcitingKernel
    l1: float = field(init=False)

    def __post_init__(self):
        nu = float(self.nu)
        if not (nu > 0.0) or not math.isfinite(nu):
            raise SubcriticalityError(f"baseline intensity must be positive and finite, got {nu}")
        l1 = self.kernel.l1_norm()
        if not (l1 < 1.0):
            raise SubcriticalityError(f"subcritical regime requires ||alpha||_1 < 1, got {l1}")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "l1", l1)

    @property
    def mean_rate(self) -> float:
        """Long-run events per step, nu / (1 - ||alpha||_1)."""
        return self.nu / (1.0 - self.l1)

    def to_json_dict(self) -> dict:
        return {"nu": self.nu, "kernel": self.kernel.to_json_dict()}


def model_from_json(obj: dict | str) -> HawkesModel:
    """Parse {"nu": x, "kernel": {...}}; reports every offending field."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    problems = []
    if "nu" not in obj or not isinstance(obj["nu"], (int, float)):
        problems.append("nu: required positive real")
    if "kernel" not in obj or not isinstance(obj["kernel"], dict):
        problems.append("kernel: required descriptor object")
    if problems:
        raise ValueError("invalid model descriptor: " + "; ".join(problems))
    return HawkesModel(nu=float(obj["nu"]), kernel=kernel_from_json(obj["kernel"]))


def l1_norm(kernel: ExcitingKernel) -> float:
    return kernel.l1_norm()


def tail_mass(kernel: ExcitingKernel, i: int) -> float:
    return kernel.tail_mass(i)


def power_moment(kernel: ExcitingKernel, p: int) -> float:
    return kernel.power_moment(p)
