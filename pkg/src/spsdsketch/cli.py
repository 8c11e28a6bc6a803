"""Command-line interface.

Subcommands::

    spsdsketch run --config cfg.json --out outdir [--threads N] [--predictors]
    spsdsketch kernel --type {linear|rbf|sparse-rbf|laplacian} --input F --out M.mtx ...
    spsdsketch levscores --algo {exact|tall|frob|spec|power} --input F --k K --out S.csv ...
    spsdsketch bounds --check --input M.mtx --k K --ell L --method M [--q Q] [--seed S]

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

import argparse
import sys

import numpy as np

from . import bounds as bounds_mod
from .builder import approximate, approximation_errors, build
from .core import eigendecompose, leverage_scores, tail_norms
from .dataio import DataFormatError, load_dataset, write_matrix_market
from .harness import ExperimentConfig, report, run_experiment
from .kernels import linear_kernel, normalized_laplacian, rbf_kernel, sparse_rbf_kernel, whiten
from .levscores import approx_lev_frob, approx_lev_power, approx_lev_spectral, approx_lev_tall
from .sketching import (
    SamplingDistribution,
    gaussian_sketch,
    leverage_sketch,
    srft_sketch,
    uniform_sketch,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="spsdsketch",
        description="Randomized low-rank approximation benchmarks for SPSD matrices",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a benchmark experiment from a JSON config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--predictors", action="store_true")

    p_kernel = sub.add_parser("kernel", help="build an SPSD matrix from a data file")
    p_kernel.add_argument(
        "--type", required=True, choices=("linear", "rbf", "sparse-rbf", "laplacian")
    )
    p_kernel.add_argument("--input", required=True)
    p_kernel.add_argument("--out", required=True)
    p_kernel.add_argument("--sigma", type=float)
    p_kernel.add_argument("--nu", type=float)
    p_kernel.add_argument("--cutoff", type=float)
    p_kernel.add_argument("--whiten", action="store_true")

    p_lev = sub.add_parser("levscores", help="exact or approximate leverage scores")
    p_lev.add_argument(
        "--algo", required=True, choices=("exact", "tall", "frob", "spec", "power")
    )
    p_lev.add_argument("--input", required=True)
    p_lev.add_argument(
        "--format", default=None, choices=("matrix_market", "csv_points", "edge_list")
    )
    p_lev.add_argument("--k", type=int)
    p_lev.add_argument("--out", required=True)
    p_lev.add_argument("--epsilon", type=float, default=1.0)
    p_lev.add_argument("--delta", type=float, default=0.1)
    p_lev.add_argument("--q", type=int, default=0)
    p_lev.add_argument("--r", type=int)
    p_lev.add_argument("--tol", type=float, default=1e-2)
    p_lev.add_argument("--seed", type=int, default=0)

    p_bounds = sub.add_parser("bounds", help="a-posteriori bound certification")
    p_bounds.add_argument("--check", action="store_true", required=True)
    p_bounds.add_argument("--input", required=True)
    p_bounds.add_argument("--k", type=int, required=True)
    p_bounds.add_argument("--ell", type=int, required=True)
    p_bounds.add_argument(
        "--method", default="gaussian", choices=("unif", "lev", "gaussian", "srft")
    )
    p_bounds.add_argument("--q", type=int, default=1)
    p_bounds.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_run(args):
    try:
        cfg = ExperimentConfig.from_json(args.config)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_experiment(cfg, threads=args.threads)
    except DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    paths = report(result, args.out, predictors=args.predictors)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return EXIT_OK


def _cmd_kernel(args):
    fmt = "edge_list" if args.type == "laplacian" else "csv_points"
    try:
        data = load_dataset(args.input, fmt)
    except (OSError, DataFormatError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    try:
        if args.type == "laplacian":
            matrix = normalized_laplacian(data)
        else:
            if args.whiten:
                data = whiten(data)
            if args.type == "linear":
                matrix = linear_kernel(data)
            elif args.type == "rbf":
                _require(args.sigma, "--sigma")
                matrix = rbf_kernel(data, sigma=args.sigma)
            else:
                _require(args.sigma, "--sigma")
                matrix = sparse_rbf_kernel(
                    data, sigma=args.sigma, nu=args.nu, cutoff=args.cutoff
                )
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    write_matrix_market(matrix, args.out)
    print(f"wrote {args.out} (n={matrix.n})")
    return EXIT_OK


def _require(value, flag):
    if value is None:
        raise ValueError(f"{flag} is required for this kernel type")


def _cmd_levscores(args):
    fmt = args.format or ("csv_points" if args.algo == "tall" else "matrix_market")
    try:
        data = load_dataset(args.input, fmt)
    except (OSError, DataFormatError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    try:
        if args.algo == "tall":
            result = approx_lev_tall(
                data.X, epsilon=args.epsilon, delta=args.delta, seed=args.seed
            )
            scores = result.scores
        else:
            _require(args.k, "--k")
            if args.algo == "exact":
                scores = leverage_scores(eigendecompose(data, args.k)).scores
            elif args.algo == "frob":
                result = approx_lev_frob(
                    data, args.k, q=args.q, epsilon=args.epsilon, seed=args.seed,
                    r=args.r,
                )
                scores = result.scores
            elif args.algo == "spec":
                result = approx_lev_spectral(
                    data.entries, args.k, epsilon=args.epsilon, delta=args.delta,
                    seed=args.seed,
                )
                scores = result.scores
            else:
                result = approx_lev_power(
                    data, args.k, tol=args.tol, seed=args.seed
                )
                scores = result.scores
                if not result.converged:
                    print("warning: power iteration hit max_iters", file=sys.stderr)
    except (ValueError, AttributeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    with open(args.out, "w", encoding="ascii") as fh:
        fh.write("index,score\n")
        for i, s in enumerate(scores):
            fh.write(f"{i},{float(s)!r}\n")
    print(f"wrote {args.out} ({len(scores)} scores)")
    return EXIT_OK


def _cmd_bounds(args):
    try:
        matrix = load_dataset(args.input, "matrix_market")
    except (OSError, DataFormatError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    try:
        partition = eigendecompose(matrix, args.k)
        if args.method == "unif":
            op = uniform_sketch(matrix.n, args.ell, seed=args.seed)
        elif args.method == "gaussian":
            op = gaussian_sketch(matrix.n, args.ell, seed=args.seed)
        elif args.method == "srft":
            op = srft_sketch(matrix.n, args.ell, seed=args.seed)
        else:
            dist = SamplingDistribution.from_leverage(leverage_scores(partition))
            op = leverage_sketch(dist, args.ell, seed=args.seed)
        sk = build(matrix, op, q=args.q)
        approx = approximate(sk)
        observed = approximation_errors(matrix, approx)
        pair = bounds_mod.interaction(partition, op)
        optimal = tail_norms(partition)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"full_row_rank: {pair.full_row_rank}")
    for norm in ("spectral", "frobenius", "trace"):
        obs = observed.by_name(norm)
        opt = optimal.by_name(norm)
        if pair.full_row_rank:
            rhs = bounds_mod.deterministic_bounds(partition, pair, args.q)[norm]
            ok = obs <= rhs + 1e-8 * max(rhs, 1.0)
            print(
                f"{norm:>9}: observed={obs:.6e} bound={rhs:.6e} optimal={opt:.6e} "
                f"certified={'yes' if ok else 'NO'}"
            )
        else:
            crude = np.linalg.norm(matrix.entries, 2)
            print(
                f"{norm:>9}: observed={obs:.6e} bound=(crude) optimal={opt:.6e} "
                f"(interaction rank deficient)"
            )
    return EXIT_OK


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handler = {
        "run": _cmd_run,
        "kernel": _cmd_kernel,
        "levscores": _cmd_levscores,
        "bounds": _cmd_bounds,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
