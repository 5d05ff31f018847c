"""Command-line interface.

Subcommands:
    analyze   - evaluate the risk lower bounds for a function spec
    fit       - fit one estimator on a sampled dataset and report metrics
    sweep     - run a config-driven grid x replicate sweep to CSV
    coverage  - per-feature split coverage of a grow-to-purity tree
    validate  - Monte-Carlo validation suites for the selection lemmas

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import rng
from .boolcube import NoiseModel, sample_dataset
from .bounds import (
    best_robust_bound,
    gamma_window,
    nonmsp_bound,
    rate_values,
    xor_bound,
)
from .errors import ConfigError, CubelabError, FunctionIsMsp
from .fourier import msp_closure, parse_function
from .greedy import CartParams, fit_cart
from .harness import (
    ExperimentConfig,
    GridPoint,
    config_from_dict,
    run_fit,
    run_sweep,
    run_validation,
)
from .trees import coverage_all, exact_risk, expected_path_length

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cubelab",
        description="Recursive-partitioning regression lab on the "
        "Boolean hypercube",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="evaluate risk lower bounds")
    p.add_argument("--function", required=True,
                   help="term grammar, e.g. '1*x1*x2 + 0.02*x1'")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--clip", type=float, default=None,
                   help="response bound M for ensemble bounds")
    p.add_argument("--json", action="store_true", dest="as_json")

    p = sub.add_parser("fit", help="fit one estimator, report metrics")
    p.add_argument("--function", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--estimator", default="cart",
                   choices=("cart", "rf", "erm", "random"))
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--gamma-grid", action="store_true",
                   help="select gamma on a held-out validation split")
    p.add_argument("--depth", type=int, default=2,
                   help="depth budget (erm/random)")
    p.add_argument("--trees", type=int, default=100, help="forest size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", dest="as_json")

    p = sub.add_parser("sweep", help="run a config-driven sweep to CSV")
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("coverage",
                       help="per-feature coverage of a purity-grown tree")
    p.add_argument("--function", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--top", type=int, default=10,
                   help="print the top-k features by coverage")

    p = sub.add_parser("validate", help="run a Monte-Carlo validation suite")
    p.add_argument("--suite", required=True,
                   choices=("depth", "halving", "xor_selection",
                            "nonadaptive_selection"))
    p.add_argument("--d", type=int, default=50)
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--runs", type=int, default=200)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_analyze(args) -> int:
    f = parse_function(args.function, args.d)
    reports = []
    try:
        reports.append(nonmsp_bound(f, args.d, args.n, M=args.clip))
    except FunctionIsMsp:
        pass
    if args.sigma > 0:
        try:
            reports.append(best_robust_bound(f, args.d, args.n, args.sigma))
        except FunctionIsMsp:
            pass
    closure = msp_closure(f)
    if args.as_json:
        print(json.dumps({
            "is_msp": closure.is_msp,
            "covered_features": sorted(closure.covered),
            "variance": f.variance,
            "reports": [r.to_dict() for r in reports],
        }, indent=2))
        return EXIT_OK
    print(f"function: {args.function}  (d={args.d}, n={args.n})")
    print(f"  MSP: {closure.is_msp}   Var = {f.variance:.6g}")
    if not reports:
        print("  no lower bound applies (function is MSP"
              + ("" if args.sigma > 0 else "; try --sigma for robust")
              + ")")
    for r in reports:
        print(r.pretty())
    return EXIT_OK


def _cmd_fit(args) -> int:
    config = ExperimentConfig(
        function=args.function,
        d_grid=(args.d,),
        log2n_grid=(int(round(math.log2(args.n))),),
        sigma2_grid=(args.sigma ** 2,),
        alpha_grid=(0.0,),
        estimator=args.estimator,
        estimator_params={"depth": args.depth, "depth_budget": args.depth,
                          "trees": args.trees}
        if args.estimator in ("erm", "random", "rf")
        else {},
        seed=args.seed,
        gamma=None if args.gamma_grid else (args.gamma or 0.0),
        metrics=("risk_exact", "depth"),
    )
    if 2 ** config.log2n_grid[0] != args.n:
        raise ConfigError("--n must be a power of two")
    point = GridPoint(args.d, config.log2n_grid[0], args.sigma ** 2, 0.0)
    row = run_fit(config, point, replicate=0)
    payload = {
        "estimator": row.estimator,
        "gamma_used": row.gamma_used,
        "risk_exact": row.risk_exact,
        "mean_depth": row.mean_depth,
        "node_count": row.node_count,
        "seed": row.seed,
    }
    if args.as_json:
        print(json.dumps(payload, indent=2))
    else:
        for key, val in payload.items():
            print(f"{key} = {val}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    with open(args.config) as fh:
        config = config_from_dict(json.load(fh))
    rows = run_sweep(config, args.out, jobs=args.jobs)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _cmd_coverage(args) -> int:
    f = parse_function(args.function, args.d)
    noise = (NoiseModel("gaussian", args.sigma) if args.sigma > 0
             else NoiseModel("none"))
    ds = sample_dataset(f, args.d, args.n, noise, args.seed)
    tree = fit_cart(ds, CartParams(gamma=0.0, tie_break="random"),
                    seed=rng.derive_seed(args.seed, "fit"))
    cov = coverage_all(tree)
    order = np.argsort(-cov)[: args.top]
    print(f"expected path length = {expected_path_length(tree):.4f}")
    for i in order:
        print(f"  coverage(x{i + 1}) = {cov[i]:.4f}")
    print(f"exact risk = {exact_risk(tree, f).risk:.6g}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    report = run_validation(args.suite, d=args.d, n=args.n,
                            runs=args.runs, s=args.s, seed=args.seed)
    print(report.pretty())
    return EXIT_OK if report.passed else EXIT_RUNTIME


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "analyze": _cmd_analyze,
        "fit": _cmd_fit,
        "sweep": _cmd_sweep,
        "coverage": _cmd_coverage,
        "validate": _cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CubelabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
