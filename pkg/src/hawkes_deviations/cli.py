"""Command-line front end.

Subcommands: cgf, modphi, rate, pmf, tail, moderate, simulate, verify.
JSON is the canonical output schema; CSV is available for grids and is the
simulate default.  Exit codes: 0 success, 1 domain error, 2 verification
failure, 64 usage error.  All randomness flows from --seed (default 12345).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import HawkesError
from .kernel import model_from_json
from .cgf import borel_divisibility_residual, solve_x, x_derivatives
from .modphi import log_mgf, modphi_residual, phi_psi
from .deviations import (
    DeviationQuery, moderate_expansion, moderate_valid, pmf_expansion, rate,
    tail_expansion, theta_star,
)
from .simulator import mc_mean_variance, mc_mgf, mc_pmf, mc_tail
from .verify import run_battery

DEFAULT_SEED = 12345

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_VERIFY = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _load_model(spec: str):
    path = Path(spec)
    text = path.read_text() if path.exists() else spec
    return model_from_json(json.loads(text))


def _emit(rows: list[dict], fmt: str, out: str | None):
    if fmt == "json":
        payload = rows[0] if len(rows) == 1 else rows
        text = json.dumps(payload, indent=2, default=_jsonable) + "\n"
    else:
        cols = list(rows[0].keys())
        lines = [",".join(cols)]
        for r in rows:
            lines.append(",".join(_csv_cell(r[c]) for c in cols))
        text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x)}")


def _csv_cell(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    if isinstance(x, (list, tuple, np.ndarray)):
        return ";".join(format(float(v), ".17g") for v in x)
    return str(x)


def _deviation_row(res) -> dict:
    return {
        "mode": res.mode,
        "t": res.t,
        "x": res.x,
        "v": res.v,
        "exponent": res.exponent,
        "prefactor": res.prefactor,
        "lattice_factor": res.lattice_factor,
        "theta_star": res.theta_star,
        "psi": res.psi_value,
        "coefficients": list(map(float, res.coefficients)),
        "probability": res.probability,
        "valid": res.valid,
        "dominance_threshold_t": res.dominance_threshold_t,
    }


def build_parser() -> _Parser:
    p = _Parser(prog="hawkesdev", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, model=True):
        if model:
            sp.add_argument("--model", required=True,
                            help="model descriptor: JSON file path or inline JSON")
        sp.add_argument("--format", choices=("json", "csv"), default=None)
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)

    sp = sub.add_parser("cgf", help="fixed point x(theta), eta and derivatives")
    common(sp)
    sp.add_argument("--theta", type=float, required=True, action="append")
    sp.add_argument("--k", type=int, default=0, help="derivative order (0 for values only)")
    sp.add_argument("--borel", type=int, default=0,
                    help="N > 0 adds the Borel-series divisibility residual")

    sp = sub.add_parser("modphi", help="mod-phi residuals on a t-grid")
    common(sp)
    sp.add_argument("--z-re", type=float, default=0.1)
    sp.add_argument("--z-im", type=float, default=0.0)
    sp.add_argument("--t", type=int, required=True, action="append")
    sp.add_argument("--tol", type=float, default=1e-12)

    sp = sub.add_parser("rate", help="rate function I(x)")
    common(sp)
    sp.add_argument("--x", type=float, required=True, action="append")

    for mode in ("pmf", "tail"):
        sp = sub.add_parser(mode, help=f"precise {mode} expansion")
        common(sp)
        sp.add_argument("--t", type=int, required=True)
        sp.add_argument("--x", type=float, required=True, action="append")
        sp.add_argument("--v", type=int, default=1, help="expansion order (1..4)")

    sp = sub.add_parser("moderate", help="moderate-deviation approximation")
    common(sp)
    sp.add_argument("--t", type=int, required=True)
    sp.add_argument("--y", type=float, required=True)
    sp.add_argument("--m", type=int, default=3)

    sp = sub.add_parser("simulate", help="Monte Carlo estimators")
    common(sp)
    sp.add_argument("--t", type=int, required=True)
    sp.add_argument("--paths", type=int, required=True)
    sp.add_argument("--stat", required=True,
                    help="mean | var | mgf:<z> | tail:<x> | pmf:<x>")

    sp = sub.add_parser("verify", help="cross-validation battery")
    common(sp, model=False)
    sp.add_argument("--suite", choices=("quick", "full"), default="quick")
    return p


def _cmd_cgf(args) -> int:
    model = _load_model(args.model)
    rows = []
    for theta in args.theta:
        if args.k > 0:
            ev = x_derivatives(model, theta, args.k)
        else:
            ev = solve_x(model, theta)
        row = {
            "theta": theta,
            "x": float(np.real(ev.x_value)),
            "eta": float(np.real(ev.eta_value)),
            "residual": ev.residual,
            "newton_iterations": ev.newton_iterations,
        }
        if ev.x_derivs is not None:
            row["x_derivs"] = [float(v) for v in ev.x_derivs[1:]]
            row["eta_derivs"] = [float(v) for v in ev.eta_derivs[1:]]
        if args.borel:
            row["borel_residual"] = borel_divisibility_residual(model, theta, args.borel)
        rows.append(row)
    _emit(rows, args.format or "json", args.out)
    return EXIT_OK


def _cmd_modphi(args) -> int:
    model = _load_model(args.model)
    z = complex(args.z_re, args.z_im) if args.z_im else args.z_re
    lim = phi_psi(model, z, tol=args.tol)
    rows = []
    for t in args.t:
        rows.append({
            "z_re": args.z_re,
            "z_im": args.z_im,
            "t": t,
            "residual": modphi_residual(model, z, t),
            "phi": float(np.real(lim.phi_value)),
            "psi_re": float(np.real(lim.psi_value)),
            "psi_im": float(np.imag(lim.psi_value)),
        })
    _emit(rows, args.format or "csv", args.out)
    return EXIT_OK


def _cmd_rate(args) -> int:
    model = _load_model(args.model)
    rows = [{"x": x, "rate": rate(model, x),
             "theta_star": theta_star(model, x) if x > 0 else None}
            for x in args.x]
    _emit(rows, args.format or "json", args.out)
    return EXIT_OK


def _cmd_deviation(args, mode: str) -> int:
    model = _load_model(args.model)
    fn = pmf_expansion if mode == "pmf" else tail_expansion
    rows = []
    for x in args.x:
        res = fn(DeviationQuery(model, args.t, x, v=args.v, mode=mode))
        rows.append(_deviation_row(res))
    _emit(rows, args.format or "json", args.out)
    return EXIT_OK


def _cmd_moderate(args) -> int:
    model = _load_model(args.model)
    prob = moderate_expansion(model, args.t, args.y, args.m)
    row = {
        "t": args.t, "y": args.y, "m": args.m,
        "probability": prob,
        "valid": moderate_valid(args.t, args.y, args.m),
        "threshold": model.mean_rate * args.t
        + math.sqrt(args.t) * math.sqrt(model.nu) / (1.0 - model.l1) ** 1.5 * args.y,
    }
    _emit([row], args.format or "json", args.out)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    model = _load_model(args.model)
    stat = args.stat
    if stat == "mean":
        est, _ = mc_mean_variance(model, args.t, args.paths, args.seed)
    elif stat == "var":
        _, est = mc_mean_variance(model, args.t, args.paths, args.seed)
    elif stat.startswith("mgf:"):
        est = mc_mgf(model, float(stat[4:]), args.t, args.paths, args.seed)
    elif stat.startswith("tail:"):
        est = mc_tail(model, args.t, float(stat[5:]), args.paths, args.seed)
    elif stat.startswith("pmf:"):
        est = mc_pmf(model, args.t, float(stat[4:]), args.paths, args.seed)
    else:
        raise HawkesError(f"unknown stat {stat!r}")
    rows = [{"stat": stat, "value": est.value, "std_error": est.std_error,
             "n_paths": est.n_paths, "seed": est.seed_base}]
    _emit(rows, args.format or "csv", args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    results = run_battery(args.suite, args.seed)
    lines = [r.line() for r in results]
    ok = all(r.passed for r in results)
    lines.append(f"{'OK' if ok else 'FAILED'}: {sum(r.passed for r in results)}/{len(results)} checks passed")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_VERIFY


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.command == "cgf":
            return _cmd_cgf(args)
        if args.command == "modphi":
            return _cmd_modphi(args)
        if args.command == "rate":
            return _cmd_rate(args)
        if args.command in ("pmf", "tail"):
            return _cmd_deviation(args, args.command)
        if args.command == "moderate":
            return _cmd_moderate(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_verify(args)
    except (HawkesError, ValueError, OSError, json.JSONDecodeError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_DOMAIN


if __name__ == "__main__":
    raise SystemExit(main())
