"""Truncated Taylor arithmetic (jets) for higher-order derivatives.

A Jet stores Taylor coefficients c_0..c_K of a function at a point, so
c_k = f^(k)/k!.  Propagating jets through the f-recursion gives every
derivative of e^{f_i}, phi and psi in one pass, without nested Faa di Bruno
sums; the explicit partition-sum assembly lives in modphi as a test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np


@dataclass(frozen=True)
class Jet:
    """Taylor coefficients c_0..c_K (degree K truncation), real or complex."""

    coeffs: np.ndarray

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @staticmethod
    def variable(value, order: int) -> "Jet":
        """The identity jet: value + epsilon."""
        c = np.zeros(order + 1, dtype=complex if isinstance(value, complex) else float)
        c[0] = value
        if order >= 1:
            c[1] = 1.0
        return Jet(c)

    @staticmethod
    def constant(value, order: int) -> "Jet":
        c = np.zeros(order + 1, dtype=complex if isinstance(value, complex) else float)
        c[0] = value
        return Jet(c)

    @staticmethod
    def from_derivatives(derivs) -> "Jet":
        """Build from [f, f', f'', ...]."""
        d = np.asarray(derivs)
        fact = np.array([factorial(k) for k in range(d.size)], dtype=float)
        return Jet(d / fact)

    def derivatives(self) -> np.ndarray:
        """[f, f', f'', ...] up to order K."""
        fact = np.array([factorial(k) for k in range(self.coeffs.size)], dtype=float)
        return self.coeffs * fact

    def derivative(self, k: int):
        return self.coeffs[k] * factorial(k)

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.coeffs + other.coeffs)
        c = self.coeffs.copy()
        c[0] = c[0] + other
        return Jet(c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coeffs)

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.coeffs - other.coeffs)
        c = self.coeffs.copy()
        c[0] = c[0] - other
        return Jet(c)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            n = self.coeffs.size
            out = np.convolve(self.coeffs, other.coeffs)[:n]
            return Jet(out)
        return Jet(self.coeffs * other)

    __rmul__ = __mul__

    def exp(self) -> "Jet":
        """exp of the jet via the standard recurrence y' = u' y."""
        n = self.coeffs.size
        u = self.coeffs
        y = np.zeros(n, dtype=np.result_type(u.dtype, float))
        y[0] = np.exp(u[0])
        for k in range(1, n):
            acc = 0.0
            for j in range(1, k + 1):
                acc += j * u[j] * y[k - j]
            y[k] = acc / k
        return Jet(y)


def jet_exp(j: Jet) -> Jet:
    return j.exp()
