#!/usr/bin/env python3
"""Three-way cross-check: expansion vs Fourier oracle vs Monte Carlo.

Picks (t, x) where plain MC has a healthy hit rate so all three agree within
binomial error bars.

    python3 scripts/mc_crosscheck.py [--paths 1000000] [--seed 12345]
"""

import argparse

from hawkes_deviations import (
    DeviationQuery, ExcitingKernel, HawkesModel, mc_tail, tail_expansion,
    tail_fourier,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=12345)
    args = ap.parse_args()

    model = HawkesModel(nu=1.0, kernel=ExcitingKernel.geometric(0.25, 0.5))
    print(f"{'t':>5} {'x':>5} {'expansion(v=2)':>15} {'fourier':>12} {'mc':>12} {'mc se':>10} {'|exp-mc|/se':>12}")
    for t, x in ((200, 1.6), (400, 1.5), (600, 1.5)):
        n = round(t * x)
        exp2 = tail_expansion(DeviationQuery(model, t, x, v=2, mode="tail")).probability
        orc = tail_fourier(model, t, n)
        est = mc_tail(model, t, x, args.paths, seed=args.seed)
        dev = abs(exp2 - est.value) / est.std_error if est.std_error else float("nan")
        print(f"{t:>5} {x:>5} {exp2:15.6e} {orc:12.6e} {est.value:12.6e} {est.std_error:10.2e} {dev:12.2f}")


if __name__ == "__main__":
    main()
