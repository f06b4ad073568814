#!/usr/bin/env python3
"""Table: precise pmf/tail expansions against the Fourier-inversion oracle.

Shows the O(t^-v) sharpening as correction orders are added, for the
workhorse model nu=1, geometric kernel a=0.25 r=0.5, at x = 1.8.

    python3 scripts/expansion_vs_oracle.py [--x 1.8] [--t 200 400 800 1600]
"""

import argparse

from hawkes_deviations import (
    DeviationQuery, ExcitingKernel, HawkesModel, pmf_expansion, pmf_fourier,
    tail_expansion, tail_fourier,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--x", type=float, default=1.8)
    ap.add_argument("--t", type=int, nargs="+", default=[200, 400, 800, 1600])
    args = ap.parse_args()

    model = HawkesModel(nu=1.0, kernel=ExcitingKernel.geometric(0.25, 0.5))
    print(f"model: nu=1, geometric a=0.25 r=0.5 (l1={model.l1}), x={args.x}")
    header = f"{'t':>6} {'mode':>5} {'oracle':>13} " + " ".join(f"{'relerr v=' + str(v):>12}" for v in (1, 2, 3))
    print(header)
    for t in args.t:
        n = round(t * args.x)
        if abs(n - t * args.x) > 1e-9:
            print(f"{t:>6}  skipped (t*x not integral)")
            continue
        for mode, expand, oracle_fn in (
            ("pmf", pmf_expansion, pmf_fourier),
            ("tail", tail_expansion, tail_fourier),
        ):
            oracle = oracle_fn(model, t, n)
            rels = []
            for v in (1, 2, 3):
                got = expand(DeviationQuery(model, t, args.x, v=v, mode=mode)).probability
                rels.append(abs(got / oracle - 1.0))
            print(f"{t:>6} {mode:>5} {oracle:13.6e} " + " ".join(f"{r:12.3e}" for r in rels))


if __name__ == "__main__":
    main()
