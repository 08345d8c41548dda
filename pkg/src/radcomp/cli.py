"""Batch front-end: ``radcomp {solve,verify,oracle,bounds,calibrate}``.

Exit codes: 0 success, 2 configuration or precondition error, 3 comparison
failure, 4 non-convergence (including blow-up of ``m`` inside the window).
All floats are written with 17 significant digits and no timestamps, so
repeated runs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import io
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import config as config_mod
from .bounds import KINDS, calibrate_gamma, evaluate_windows, sample_suite_windows
from .constants import ComparisonConstants
from .errors import (CalibrationUndefined, ComparisonFailure, ConfigError, InvalidInputError,
                     NotAdmissibleError, PreconditionError, RadcompError, WindowError)
from .model import DriftB, ProblemParams, RadialGrid
from .oracle import manufacture, verify_comparison
from .picard import solve_comparison_function
from .verify import flux_residual, independent_integrate, observed_orders, pointwise_residual_2_5

log = logging.getLogger("radcomp")

EXIT_OK, EXIT_CONFIG, EXIT_COMPARISON, EXIT_NONCONVERGED = 0, 2, 3, 4
COLUMN_ORDER = ("r", "M", "m", "bound", "kernel", "flux_residual")
SUITE_PROFILES = ("quadratic", "power:3", "exp")
DEFAULT_SCENARIO = """\
[params]
p = 2
a = 1
k = 1
sigma = 4
n = 3
R0 = 0
Rmax = 1
"""


def fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(columns: Dict[str, Sequence[float]], footer: Dict[str, object], out) -> str:
    """Render columns (in :data:`COLUMN_ORDER` first, extras after) plus ``#`` footer."""
    names = [c for c in COLUMN_ORDER if c in columns] + [c for c in columns if c not in COLUMN_ORDER]
    buf = io.StringIO()
    buf.write(",".join(names) + "\n")
    for row in zip(*(columns[c] for c in names)):
        buf.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")
    for key, value in footer.items():
        if isinstance(value, float):
            value = fmt(value)
        buf.write(f"# {key}={value}\n")
    text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    return text


def _params_footer(params: ProblemParams, consts: ComparisonConstants) -> Dict[str, object]:
    footer = {f"param.{k}": (float(v) if not isinstance(v, int) else v)
              for k, v in params.as_dict().items()}
    footer["alpha"] = consts.alpha
    footer["beta"] = consts.beta
    for i in sorted(consts.gamma):
        footer[f"gamma{i}"] = float(consts.gamma[i])
    return footer


def _parse_gammas(items: Optional[List[str]]) -> Dict[int, float]:
    out = {}
    for item in items or []:
        try:
            key, value = item.split("=", 1)
            out[int(key)] = float(value)
        except ValueError:
            raise ConfigError(f"--gamma expects i=value (got {item!r})") from None
    return out


def _load(args) -> config_mod.Scenario:
    if getattr(args, "config", None):
        scenario = config_mod.load(args.config)
    else:
        scenario = config_mod.load_text(DEFAULT_SCENARIO)
    if args.grid_n is not None:
        if args.grid_n < 4:
            raise ConfigError("--grid-n must be at least 4")
        scenario.nodes = args.grid_n
    return scenario


def _constants(args, params, beta=None) -> ComparisonConstants:
    beta = args.beta if args.beta is not None else beta
    return ComparisonConstants.from_params(params, _parse_gammas(args.gamma),
                                           alpha=args.alpha, beta=beta)


def cmd_solve(args) -> int:
    sc = _load(args)
    consts = _constants(args, sc.params)
    grid = RadialGrid.for_params(sc.params, sc.nodes, sc.b)
    res = solve_comparison_function(sc.f, sc.params, consts, sc.M0, grid,
                                    tol=args.tol, max_iter=args.max_iter)
    footer = {"iterations": res.iterations, "converged": res.converged,
              "final_delta": float(res.final_delta),
              "blowup_radius": "none" if res.blowup is None else fmt(res.blowup[1]),
              "M0": float(sc.M0)}
    footer.update(_params_footer(sc.params, consts))
    text = write_csv({"r": grid.nodes, "m": res.m.values, "kernel": res.kernel.values}, footer, args.out)
    if not args.out:
        sys.stdout.write(text)
    if res.blowup is not None:
        print(f"blow-up near r = {fmt(res.blowup[1])}", file=sys.stderr)
        return EXIT_NONCONVERGED
    if not res.converged:
        print(f"no convergence after {res.iterations} iterations", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_verify(args) -> int:
    sc = _load(args)
    consts = _constants(args, sc.params)
    rows = {"nodes": [], "h": [], "sup_flux_residual": [], "sup_independent_diff": [],
            "sup_pointwise_residual": []}
    status = EXIT_OK
    for level in range(args.levels):
        nodes = (sc.nodes - 1) * 2 ** level + 1
        grid = RadialGrid.for_params(sc.params, nodes, sc.b)
        res = solve_comparison_function(sc.f, sc.params, consts, sc.M0, grid,
                                        tol=args.tol, max_iter=args.max_iter)
        if res.blowup is not None or not res.converged:
            status = EXIT_NONCONVERGED
            break
        D = flux_residual(res.m, sc.f, sc.params, consts).values
        ind = independent_integrate(sc.f, sc.b, sc.params, consts, sc.M0, grid).values
        pw = (np.max(np.abs(pointwise_residual_2_5(res.m, sc.f, sc.b, sc.params, consts).values))
              if sc.params.p == 2 else float("nan"))
        rows["nodes"].append(nodes)
        rows["h"].append(float(grid.nodes[1] - grid.nodes[0]))
        rows["sup_flux_residual"].append(float(np.max(np.abs(D))))
        rows["sup_independent_diff"].append(float(np.max(np.abs(res.m.values - ind))))
        rows["sup_pointwise_residual"].append(pw)
    orders = ["nan"] + [fmt(o) for o in observed_orders(rows["sup_flux_residual"])] \
        if len(rows["nodes"]) > 1 else ["nan"] * len(rows["nodes"])
    rows["flux_order"] = orders
    footer = {"M0": float(sc.M0)}
    footer.update(_params_footer(sc.params, consts))
    text = write_csv(rows, footer, args.out)
    sys.stdout.write(text)
    return status


def _drift_or_none(b: DriftB, params: ProblemParams) -> Optional[DriftB]:
    probe = b(np.linspace(params.R0, params.Rmax, 17))
    return None if np.all(probe == 0) else b


def cmd_oracle(args) -> int:
    sc = _load(args)
    consts = _constants(args, sc.params)
    scen = manufacture(args.profile, sc.params, sc.nodes, _drift_or_none(sc.b, sc.params))
    try:
        rep = verify_comparison(scen.M, scen.f, scen.b, sc.params, consts, tol=args.comparison_tol,
                                picard_tol=args.tol, max_iter=args.max_iter)
    except ComparisonFailure as exc:
        print(f"comparison failure: {exc}", file=sys.stderr)
        return EXIT_COMPARISON
    worst_m, worst_b = rep.worst_m, rep.worst_bound
    footer = {"profile": args.profile, "passed": rep.passed,
              "iterations": rep.result.iterations,
              "min_margin_m": worst_m[0], "min_margin_m_radius": worst_m[2],
              "min_margin_bound": worst_b[0], "min_margin_bound_radius": worst_b[2]}
    footer.update(_params_footer(sc.params, consts))
    cols = {"r": scen.grid.nodes, "M": scen.M.values, "m": rep.result.m.values,
            "bound": rep.bound.values, "kernel": rep.result.kernel.values,
            "margin_m": rep.margin_m, "margin_bound": rep.margin_bound}
    text = write_csv(cols, footer, args.out)
    if not args.out:
        sys.stdout.write(text)
    if not rep.passed:
        print("comparison check failed", file=sys.stderr)
        return EXIT_COMPARISON
    return EXIT_OK


def _suite(sc, profiles):
    drift = _drift_or_none(sc.b, sc.params)
    return [manufacture(p, sc.params, sc.nodes, drift) for p in profiles]


def cmd_bounds(args) -> int:
    sc = _load(args)
    consts = _constants(args, sc.params)
    scen = _suite(sc, [args.profile])
    cols = {"kind": [], "r0": [], "r1": [], "lhs": [], "rhs": [], "margin": []}
    for kind in KINDS:
        windows = sample_suite_windows(kind, scen, sc.params, consts, args.samples, args.seed)
        for rec in evaluate_windows(windows[0], scen[0].M, scen[0].f, scen[0].b, sc.params, consts):
            cols["kind"].append(rec.kind)
            cols["r0"].append(rec.r0)
            cols["r1"].append(rec.r1)
            cols["lhs"].append(rec.lhs)
            cols["rhs"].append(rec.rhs)
            cols["margin"].append(rec.margin)
    footer = {"profile": args.profile, "seed": args.seed}
    footer.update(_params_footer(sc.params, consts))
    text = write_csv(cols, footer, args.out)
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    sc = _load(args)
    consts = _constants(args, sc.params)
    profiles = [args.profile] if args.profile else list(SUITE_PROFILES)
    scen = _suite(sc, profiles)
    cols = {"kind": [], "gamma_hat": []}
    for kind in KINDS:
        try:
            value = fmt(calibrate_gamma(kind, scen, sc.params, consts, args.samples, args.seed))
        except CalibrationUndefined:
            value = "undefined"
        cols["kind"].append(kind)
        cols["gamma_hat"].append(value)
    footer = {"profiles": " ".join(profiles), "seed": args.seed, "samples": args.samples}
    footer.update(_params_footer(sc.params, consts))
    text = write_csv(cols, footer, args.out)
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radcomp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("config", help="scenario configuration file")
        else:
            p.add_argument("config", nargs="?", help="scenario configuration file (optional)")
        p.add_argument("--out", help="write the CSV here instead of stdout")
        p.add_argument("--grid-n", type=int, help="number of grid nodes")
        p.add_argument("--tol", type=float, default=1e-10, help="Picard tolerance")
        p.add_argument("--max-iter", type=int, default=200, help="Picard iteration limit")
        p.add_argument("--gamma", action="append", metavar="i=v", help="override gamma_i")
        p.add_argument("--alpha", type=float, help="use this alpha instead of the formula")
        p.add_argument("--beta", type=float, help="use this beta instead of the formula")

    p = sub.add_parser("solve", help="compute the comparison function m")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="residuals and convergence orders of m")
    common(p)
    p.add_argument("--levels", type=int, default=3, help="number of grid refinements")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="check the comparison on a manufactured solution")
    common(p, config_required=False)
    p.add_argument("--profile", default="quadratic", help="quadratic, power:<q> or exp")
    p.add_argument("--comparison-tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bounds", help="margins of the growth estimates on sampled windows")
    common(p, config_required=False)
    p.add_argument("--profile", default="quadratic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=20, help="windows per estimate kind")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("calibrate", help="empirical gamma constants per estimate kind")
    common(p, config_required=False)
    p.add_argument("--profile", help="restrict to one profile (default: whole suite)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=200, help="windows per estimate kind")
    p.set_defaults(func=cmd_calibrate)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InvalidInputError, PreconditionError, NotAdmissibleError,
            WindowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ComparisonFailure as exc:
        print(f"comparison failure: {exc}", file=sys.stderr)
        return EXIT_COMPARISON


def main():
    sys.exit(run())
