"""Command-line interface.

Subcommands: ``entropy``, ``dime``, ``mi``, ``indep``, ``optimize``,
``staircase``, ``sweep``, ``grid`` and ``replay``.  Result rows go to
``--output`` (CSV by default, JSON lines with ``--format jsonl``) or to
standard output.  Next to every output file a ``<stem>.meta.json`` sidecar
records the fully resolved configuration; ``replay`` re-runs it.

Exit codes: 0 success, 2 invalid flags or input, 3 numerical failure,
4 I/O failure.
"""

import argparse
import logging
import math
import sys

import numpy as np

from . import __version__
from .entropy import EntropyOrder, conditional_entropy, joint_entropy, matrix_entropy
from .errors import NumericalError, RejectedInputError
from .estimator import (
    DEFAULT_LR,
    BandwidthParams,
    dime,
    independence_test,
    optimize_bandwidth,
    sample_permutations,
)
from .harness import (
    StaircaseConfig,
    log_sigma_grid,
    run_bandwidth_sweep,
    run_grid,
    run_staircase,
    summarize_grid,
)
from .kernels import KernelFamily, KernelSpec, as_data_matrix, gram_matrix
from .records import FORMATS, MetaFormatError, atomic_write_text, check_writable, read_meta, render, write_meta
from .seeding import derive_seed
from .synthdata import GaussianPairConfig, rho_for_mi, sample_correlated_gaussian, true_mi

EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

SIGMA_KEYWORDS = ("auto", "init-sqrt-d")


class UsageError(Exception):
    """A flag failed validation; ``flag`` names it."""

    def __init__(self, flag, message):
        super().__init__(f"argument {flag}: {message}")
        self.flag = flag


# argparse type converters; argparse reports the offending flag on failure


def positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def seed_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2**64), got {text!r}")
    return value


def _float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text!r}")
    return value


def positive_float(text):
    value = _float(text)
    if value <= 0.0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def nonneg_float(text):
    value = _float(text)
    if value < 0.0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text!r}")
    return value


def correlation(text):
    value = _float(text)
    if not 0.0 <= value < 1.0:
        raise argparse.ArgumentTypeError(f"correlation must lie in [0, 1), got {text!r}")
    return value


def sigma_value(text):
    if text in SIGMA_KEYWORDS:
        return text
    try:
        return positive_float(text)
    except argparse.ArgumentTypeError:
        raise argparse.ArgumentTypeError(
            f"expected a positive number, 'auto' (sqrt(d/2)) or 'init-sqrt-d' (sqrt(d)), got {text!r}"
        ) from None


def int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"expected comma-separated positive integers, got {text!r}")
    return values


def float_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values or any(not math.isfinite(v) or v < 0.0 for v in values):
        raise argparse.ArgumentTypeError(f"expected comma-separated non-negative numbers, got {text!r}")
    return values


def resolve_sigma(value, d):
    if value == "auto":
        return math.sqrt(d / 2.0)
    if value == "init-sqrt-d":
        return math.sqrt(d)
    return float(value)


# shared option groups


def _add_output(p):
    p.add_argument("--output", "-o", help="output file (default: standard output)")
    p.add_argument("--format", choices=FORMATS, default="csv", help="output format (default: csv)")


def _add_common(p, sigma_default="auto"):
    p.add_argument("--seed", type=seed_int, default=0, help="master seed (default: 0)")
    p.add_argument("--alpha", type=positive_float, default=1.01, help="entropy order (default: 1.01)")
    p.add_argument(
        "--kernel",
        choices=[f.value for f in KernelFamily],
        default=KernelFamily.GAUSSIAN.value,
        help="kernel family (default: gaussian)",
    )
    p.add_argument(
        "--sigma",
        type=sigma_value,
        default=sigma_default,
        help=f"bandwidth: a number, 'auto' = sqrt(d/2) or 'init-sqrt-d' = sqrt(d) (default: {sigma_default})",
    )
    p.add_argument("--sigma-y", type=sigma_value, default=None, help="separate bandwidth for Y (default: --sigma)")


def _add_pair_source(p):
    p.add_argument("--x", dest="x_path", help="X data file (.npy, or comma-separated text, one sample per row)")
    p.add_argument("--y", dest="y_path", help="Y data file (same format as --x)")
    p.add_argument("--n", type=positive_int, default=1024, help="generated sample count (default: 1024)")
    p.add_argument("--d", type=positive_int, default=20, help="generated dimensionality (default: 20)")
    dep = p.add_mutually_exclusive_group()
    dep.add_argument("--rho", type=correlation, help="per-coordinate correlation of generated data")
    dep.add_argument("--mi", type=nonneg_float, help="target Shannon MI (nats) of generated data")
    dep.add_argument("--independent", action="store_true", help="generate independent X and Y (rho = 0)")


def load_matrix(path, flag):
    try:
        if str(path).endswith(".npy"):
            data = np.load(path)
        else:
            data = np.loadtxt(path, delimiter=",", ndmin=2)
    except OSError:
        raise
    except ValueError as exc:
        raise UsageError(flag, f"cannot parse {path}: {exc}") from exc
    try:
        return as_data_matrix(data, name=str(path))
    except RejectedInputError as exc:
        raise UsageError(flag, str(exc)) from exc


def _pair(args):
    """Resolve the data pair; returns ``(X, Y, info)``."""
    if args.x_path or args.y_path:
        if not (args.x_path and args.y_path):
            raise UsageError("--x/--y", "both --x and --y are required when reading data from files")
        X = load_matrix(args.x_path, "--x")
        Y = load_matrix(args.y_path, "--y")
        if X.shape[0] != Y.shape[0]:
            raise UsageError("--y", f"row count {Y.shape[0]} differs from --x row count {X.shape[0]}")
        return X, Y, {"n": X.shape[0], "d_x": X.shape[1], "d_y": Y.shape[1], "rho": math.nan, "true_mi": math.nan}
    if args.n < 2:
        raise UsageError("--n", "at least two samples are required")
    if args.mi is not None:
        rho = rho_for_mi(args.d, args.mi)
    elif args.rho is not None:
        rho = args.rho
    else:
        rho = 0.0
    X, Y = sample_correlated_gaussian(GaussianPairConfig(args.d, rho, args.n, derive_seed(args.seed, "cli-data")))
    info = {"n": args.n, "d_x": args.d, "d_y": args.d, "rho": rho, "true_mi": true_mi(args.d, rho)}
    return X, Y, info


def _specs(args, info):
    sigma_x = resolve_sigma(args.sigma, info["d_x"])
    sigma_y = resolve_sigma(args.sigma if args.sigma_y is None else args.sigma_y, info["d_y"])
    return KernelSpec(args.kernel, sigma_x), KernelSpec(args.kernel, sigma_y)


# subcommands; each returns a list of rows


def cmd_entropy(args):
    if args.identity is not None:
        K = np.eye(args.identity)
    elif args.ones is not None:
        K = np.ones((args.ones, args.ones))
    else:
        if args.input:
            data = load_matrix(args.input, "--input")
        else:
            rng_seed = derive_seed(args.seed, "cli-entropy-data")
            data, _ = sample_correlated_gaussian(GaussianPairConfig(args.d, 0.0, max(args.n, 2), rng_seed))
            data = data[: args.n]
        sigma = resolve_sigma(args.sigma, data.shape[1])
        K = gram_matrix(data, KernelSpec(args.kernel, sigma))
    value = matrix_entropy(K, EntropyOrder(args.alpha))
    print(f"{value:.12f}")
    return [{"n": K.shape[0], "alpha": args.alpha, "entropy": value}]


def cmd_dime(args):
    X, Y, info = _pair(args)
    specs = _specs(args, info)
    perms = sample_permutations(info["n"], args.permutations, derive_seed(args.seed, "cli-permutations"))
    est = dime(X, Y, specs, EntropyOrder(args.alpha), perms)
    row = dict(info, sigma_x=specs[0].bandwidth, sigma_y=specs[1].bandwidth, alpha=args.alpha)
    row.update(permutations=args.permutations, seed=args.seed, dime_value=est.value, paired_joint=est.paired_joint)
    for k, h in enumerate(est.permuted_joints):
        row[f"permuted_joint_{k}"] = h
    return [row]


def cmd_mi(args):
    X, Y, info = _pair(args)
    spec_x, spec_y = _specs(args, info)
    order = EntropyOrder(args.alpha)
    K_x, K_y = gram_matrix(X, spec_x), gram_matrix(Y, spec_y)
    h_x, h_y = matrix_entropy(K_x, order), matrix_entropy(K_y, order)
    h_xy = joint_entropy(K_x, K_y, order)
    row = dict(info, sigma_x=spec_x.bandwidth, sigma_y=spec_y.bandwidth, alpha=args.alpha)
    row.update(
        entropy_x=h_x,
        entropy_y=h_y,
        joint_entropy=h_xy,
        conditional_entropy_x_given_y=conditional_entropy(K_x, K_y, order),
        matrix_mi=h_x + h_y - h_xy,
    )
    return [row]


def cmd_indep(args):
    X, Y, info = _pair(args)
    specs = _specs(args, info)
    p = independence_test(X, Y, specs, EntropyOrder(args.alpha), args.trials, derive_seed(args.seed, "cli-indep"))
    row = dict(info, sigma_x=specs[0].bandwidth, sigma_y=specs[1].bandwidth, alpha=args.alpha)
    row.update(trials=args.trials, seed=args.seed, p_value=p)
    return [row]


def cmd_optimize(args):
    X, Y, info = _pair(args)
    spec_x, spec_y = _specs(args, info)
    perms = sample_permutations(info["n"], args.permutations, derive_seed(args.seed, "cli-permutations"))
    init = BandwidthParams.from_sigmas(spec_x.bandwidth, spec_y.bandwidth)
    rows = []

    def record(step, value, params):
        rows.append({"step": step, "dime_value": value, "sigma_x": params.sigma_x, "sigma_y": params.sigma_y})

    params, _ = optimize_bandwidth(
        X, Y, init, EntropyOrder(args.alpha), perms, args.steps, args.lr, args.kernel, args.tie, on_step=record
    )
    print(f"final sigma_x={params.sigma_x!r} sigma_y={params.sigma_y!r}", file=sys.stderr)
    return rows


def cmd_staircase(args):
    sigma = resolve_sigma(args.sigma, args.d)
    cfg = StaircaseConfig(
        d=args.d,
        mi_levels=tuple(args.levels),
        iterations_per_level=args.iterations,
        batch_size=args.n,
        alpha=args.alpha,
        permutations=args.permutations,
        sigma_init=sigma,
        optimize=args.optimize,
        lr=args.lr,
        window=args.window,
        seed=args.seed,
        family=args.kernel,
        tie=args.tie,
        track_matrix_mi=not args.no_matrix_mi,
    )
    return list(run_staircase(cfg))


def cmd_sweep(args):
    grid = log_sigma_grid(args.d, args.points, args.low, args.high)
    return run_bandwidth_sweep(args.d, args.n, args.mi, grid, args.alpha, args.permutations, args.seed)


def cmd_grid(args):
    rows = run_grid(
        batch_sizes=args.batch_sizes,
        dims=args.dims,
        target_mi=args.mi,
        modes=args.modes,
        iterations=args.iterations,
        repeats=args.repeats,
        seed=args.seed,
        alpha=args.alpha,
        permutations=args.permutations,
        lr=args.lr,
    )
    return summarize_grid(rows) if args.summary else rows


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dime",
        description="Matrix-based Renyi entropy and DiME dependence measures.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--verbose", "-v", action="store_true", help="log progress to standard error")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("entropy", help="matrix-based entropy of one Gram matrix")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--identity", type=positive_int, metavar="N", help="use the N x N identity matrix")
    src.add_argument("--ones", type=positive_int, metavar="N", help="use the N x N all-ones matrix")
    src.add_argument("--input", help="data file; its Gram matrix is used")
    p.add_argument("--n", type=positive_int, default=256, help="generated sample count (default: 256)")
    p.add_argument("--d", type=positive_int, default=20, help="generated dimensionality (default: 20)")
    _add_common(p)
    _add_output(p)
    p.set_defaults(handler=cmd_entropy)

    for name, handler, helptext in (
        ("dime", cmd_dime, "DiME between paired samples"),
        ("mi", cmd_mi, "matrix-based entropies and mutual information"),
        ("indep", cmd_indep, "permutation independence test"),
        ("optimize", cmd_optimize, "learn kernel bandwidths by maximizing DiME"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_pair_source(p)
        _add_common(p, sigma_default="init-sqrt-d" if name == "optimize" else "auto")
        if name in ("dime", "optimize"):
            p.add_argument("--permutations", "-p", type=positive_int, default=5, help="permutations (default: 5)")
        if name == "indep":
            p.add_argument("--trials", type=positive_int, default=99, help="permutation trials, >= 20 (default: 99)")
        if name == "optimize":
            p.add_argument("--steps", type=positive_int, default=200, help="Adam steps (default: 200)")
            p.add_argument("--lr", type=nonneg_float, default=DEFAULT_LR, help=f"learning rate (default: {DEFAULT_LR})")
            p.add_argument("--tie", action="store_true", help="share one bandwidth between X and Y")
        _add_output(p)
        p.set_defaults(handler=handler)

    p = sub.add_parser("staircase", help="MI staircase on correlated Gaussians")
    p.add_argument("--d", type=positive_int, default=20, help="dimensionality (default: 20)")
    p.add_argument("--n", type=positive_int, default=1024, help="batch size (default: 1024)")
    p.add_argument("--levels", type=float_list, default=[2.0, 4.0, 6.0, 8.0, 10.0], help="MI levels in nats (default: 2,4,6,8,10)")
    p.add_argument("--iterations", type=positive_int, default=500, help="iterations per level (default: 500)")
    p.add_argument("--permutations", "-p", type=positive_int, default=5, help="permutations (default: 5)")
    p.add_argument("--optimize", action="store_true", help="learn bandwidths with Adam while running")
    p.add_argument("--lr", type=nonneg_float, default=DEFAULT_LR, help=f"learning rate (default: {DEFAULT_LR})")
    p.add_argument("--tie", action="store_true", help="share one bandwidth between X and Y")
    p.add_argument("--window", type=positive_int, default=200, help="sliding window length (default: 200)")
    p.add_argument("--no-matrix-mi", action="store_true", help="skip matrix-based MI (saves two eigensolves per iteration)")
    _add_common(p, sigma_default="init-sqrt-d")
    _add_output(p)
    p.set_defaults(handler=cmd_staircase)

    p = sub.add_parser("sweep", help="DiME and matrix-based MI over a bandwidth grid")
    p.add_argument("--d", type=positive_int, default=20, help="dimensionality (default: 20)")
    p.add_argument("--n", type=positive_int, default=1024, help="sample count (default: 1024)")
    p.add_argument("--mi", type=nonneg_float, default=10.0, help="true MI in nats (default: 10)")
    p.add_argument("--points", type=positive_int, default=20, help="grid points, >= 10 (default: 20)")
    p.add_argument("--low", type=positive_float, default=1e-2, help="smallest sigma as a multiple of sqrt(d) (default: 0.01)")
    p.add_argument("--high", type=positive_float, default=1e2, help="largest sigma as a multiple of sqrt(d) (default: 100)")
    p.add_argument("--permutations", "-p", type=positive_int, default=5, help="permutations (default: 5)")
    p.add_argument("--seed", type=seed_int, default=0, help="master seed (default: 0)")
    p.add_argument("--alpha", type=positive_float, default=1.01, help="entropy order (default: 1.01)")
    _add_output(p)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("grid", help="DiME over batch size x dimensionality x bandwidth mode")
    p.add_argument("--batch-sizes", type=int_list, default=[64, 1024], help="batch sizes (default: 64,1024)")
    p.add_argument("--dims", type=int_list, default=[5, 128], help="dimensionalities (default: 5,128)")
    p.add_argument("--mi", type=nonneg_float, default=10.0, help="true MI in nats (default: 10)")
    p.add_argument("--modes", type=lambda s: s.split(","), default=["fixed", "learned"], help="fixed,learned")
    p.add_argument("--iterations", type=positive_int, default=20, help="batches per cell (default: 20)")
    p.add_argument("--repeats", type=positive_int, default=20, help="seeds per cell (default: 20)")
    p.add_argument("--permutations", "-p", type=positive_int, default=1, help="permutations (default: 1)")
    p.add_argument("--lr", type=nonneg_float, default=0.05, help="learning rate for learned cells (default: 0.05)")
    p.add_argument("--summary", action="store_true", help="emit seed-averaged summaries instead of per-seed rows")
    p.add_argument("--seed", type=seed_int, default=0, help="master seed (default: 0)")
    p.add_argument("--alpha", type=positive_float, default=1.01, help="entropy order (default: 1.01)")
    _add_output(p)
    p.set_defaults(handler=cmd_grid)

    p = sub.add_parser("replay", help="re-run a configuration from its .meta.json sidecar")
    p.add_argument("meta", help="path to a .meta.json file")
    p.add_argument("--output", "-o", help="output file (default: standard output)")
    p.add_argument("--format", choices=FORMATS, default=None, help="override the recorded format")
    p.set_defaults(handler=None)
    return parser


HANDLERS = {
    "entropy": cmd_entropy,
    "dime": cmd_dime,
    "mi": cmd_mi,
    "indep": cmd_indep,
    "optimize": cmd_optimize,
    "staircase": cmd_staircase,
    "sweep": cmd_sweep,
    "grid": cmd_grid,
}


def _validate(args):
    """Checks argparse cannot express, run before any computation."""
    cmd = args.command
    if cmd == "indep" and args.trials < 20:
        raise UsageError("--trials", f"the independence test needs at least 20 trials, got {args.trials}")
    if cmd in ("dime", "mi", "indep", "optimize") and not (args.x_path or args.y_path) and args.n < 2:
        raise UsageError("--n", "at least two samples are required")
    if cmd == "sweep":
        if args.points < 10:
            raise UsageError("--points", f"the sweep needs at least 10 grid points, got {args.points}")
        if args.high <= args.low:
            raise UsageError("--high", "must exceed --low")
        if args.n < 2:
            raise UsageError("--n", "at least two samples are required")
    if cmd == "staircase":
        if args.n < 2:
            raise UsageError("--n", "batch size must be at least 2")
        if any(b < a for a, b in zip(args.levels, args.levels[1:])):
            raise UsageError("--levels", "MI levels must be nondecreasing")
    if cmd == "grid":
        bad = [m for m in args.modes if m not in ("fixed", "learned")]
        if bad:
            raise UsageError("--modes", f"unknown mode(s) {bad}; expected fixed and/or learned")
        if any(n < 2 for n in args.batch_sizes):
            raise UsageError("--batch-sizes", "batch sizes must be at least 2")
    try:
        EntropyOrder(args.alpha)
    except RejectedInputError as exc:
        raise UsageError("--alpha", str(exc)) from exc


def _config(args):
    return {k: v for k, v in vars(args).items() if k not in ("handler", "verbose")}


def _execute(args, stdout):
    _validate(args)
    if args.output:
        check_writable(args.output)
    rows = HANDLERS[args.command](args)
    text = render(rows, args.format)
    if args.output:
        atomic_write_text(args.output, text)
        write_meta(args.output, args.command, _config(args), __version__)
    elif args.command != "entropy":
        stdout.write(text)


def _replay(args, stdout):
    record = read_meta(args.meta)
    command = record["command"]
    if command not in HANDLERS:
        raise MetaFormatError(f"{args.meta} records unknown command {command!r}")
    # re-parse the recorded flags so defaults and types match a fresh run
    defaults = vars(build_parser().parse_args([command]))
    config = dict(defaults, **record["config"])
    config["output"] = args.output
    if args.format is not None:
        config["format"] = args.format
    if config.get("format") not in FORMATS:
        raise MetaFormatError(f"{args.meta} records unknown format {config.get('format')!r}")
    replay_args = argparse.Namespace(**config)
    replay_args.command = command
    _execute(replay_args, stdout)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        if args.command == "replay":
            _replay(args, sys.stdout)
        else:
            _execute(args, sys.stdout)
    except UsageError as exc:
        parser.error(str(exc))
    except RejectedInputError as exc:
        print(f"dime: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"dime: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, MetaFormatError) as exc:
        print(f"dime: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
