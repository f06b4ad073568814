#!/usr/bin/env python3
"""Mod-phi residual decay: geometric kernels vs a polynomial-tail kernel.

Demonstrates why a t^-1 convergence slope is only visible for kernels with a
heavy (polynomial) tail: geometric kernels converge exponentially fast and
the residual sinks below double-precision roundoff by t ~ 100.

    python3 scripts/residual_decay.py
"""

import numpy as np

from hawkes_deviations import ExcitingKernel, HawkesModel, modphi_residual


def polynomial_kernel(l1=0.25, p=3.05, n=200_000):
    i = np.arange(1, n + 1, dtype=float)
    w = i**-p
    w *= l1 / w.sum()
    return ExcitingKernel.finite(w)


def main():
    z = 0.1
    ts = [50, 100, 200, 400, 800]
    geo = HawkesModel(nu=1.0, kernel=ExcitingKernel.geometric(0.25, 0.5))
    poly = HawkesModel(nu=1.0, kernel=polynomial_kernel())

    print(f"{'t':>6} {'geometric':>13} {'alpha~i^-3.05':>14}")
    rows = []
    for t in ts:
        rg = modphi_residual(geo, z, t)
        rp = modphi_residual(poly, z, t, tol=1e-8, truncation="heuristic")
        rows.append((t, rg, rp))
        print(f"{t:>6} {rg:13.3e} {rp:14.3e}")

    logt = np.log([r[0] for r in rows])
    slope_poly = np.polyfit(logt, np.log([r[2] for r in rows]), 1)[0]
    print(f"\npolynomial-kernel log-log slope: {slope_poly:.3f} (rate ~ t^-1.05)")
    print("geometric-kernel residuals hit the double-precision floor after t=50;")
    print("their true decay is exponential, so no power-law slope exists to fit.")


if __name__ == "__main__":
    main()
