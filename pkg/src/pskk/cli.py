"""Command-line interface: ``pskk {cbc,fit,eval,bench}``.

Exit codes: 0 on success, 2 for invalid arguments or inputs, 3 for runtime
and numerical failures. ``--threads`` (or the ``PSKK_THREADS`` environment
variable) sets the worker count used inside the library.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from ._parallel import resolve_workers
from .errors import InvalidSampleError, PskkError, ValidationError
from .estimator import default_params, evaluate, fit
from .io import load_model, read_points_csv, save_model, write_values_csv
from .kernel import KernelParams
from .lattice import cbc_construct, format_lattice, load_lattice
from .mise import StudyConfig, convergence_study, fit_loglog_slope, write_report_csv
from .mixtures import EXAMPLES

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3


def _auto_or(kind):
    def parse(text):
        if text == "auto":
            return None
        try:
            return kind(float(text)) if kind is int else kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}") from None

    return parse


def _count(text) -> int:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a count, got {text!r}") from None
    if v != int(v) or v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(v)


def _count_list(text) -> list[int]:
    return [_count(t) for t in text.split(",") if t.strip()]


def _schedule_flags(p: argparse.ArgumentParser, epsilon_default: float, eta_default: float) -> None:
    g = p.add_argument_group("parameter schedule (used for every 'auto' value)")
    g.add_argument("--beta", type=float, help="decay rate of the density tails")
    g.add_argument("--q", type=float, help="decay exponent of the density tails")
    g.add_argument("--epsilon", type=float, default=epsilon_default, help="rate slack (default %(default)s)")
    g.add_argument("--eta", type=float, default=eta_default, help="scale constant (default %(default)s)")
    g.add_argument("--n-max", type=int, default=4001, help="cap on the lattice size (default %(default)s)")
    g.add_argument("--prime-rounding", choices=("nearest", "up"), default="nearest",
                   help="prime chosen near the target lattice size (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pskk", description="Periodic scaled Korobov kernel density estimation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $PSKK_THREADS or 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cbc", help="construct a lattice generating vector")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--n", type=int, required=True, help="prime number of lattice points")
    p.add_argument("--alpha", type=int, required=True)
    p.add_argument("--a", type=float, default=0.5,
                   help="half-width of the box the criterion is measured on (default: unit cube)")
    p.add_argument("--out", help="output file (default: stdout)")

    p = sub.add_parser("fit", help="fit a model to samples in a CSV file")
    p.add_argument("samples", help="CSV file, one sample per row")
    p.add_argument("--alpha", type=int, default=2)
    p.add_argument("--a", type=_auto_or(float), default=None, help="box half-width or 'auto'")
    p.add_argument("--n", type=_auto_or(int), default=None, help="prime lattice size or 'auto'")
    p.add_argument("--lambda", dest="lam", type=_auto_or(float), default=None,
                   help="regularisation parameter or 'auto'")
    p.add_argument("--lattice", help="generating-vector file to use instead of CBC")
    p.add_argument("--out", required=True, help="model file to write")
    _schedule_flags(p, epsilon_default=0.1, eta_default=1.0)

    p = sub.add_parser("eval", help="evaluate a fitted model at points")
    p.add_argument("model")
    p.add_argument("points", help="CSV file, one point per row")
    p.add_argument("--out", help="output CSV (default: stdout)")

    p = sub.add_parser("bench", help="MISE benchmark on a named test density")
    p.add_argument("--example", required=True, help=f"one of {', '.join(EXAMPLES)}")
    p.add_argument("--m", type=_count_list, required=True, help="comma-separated sample sizes, e.g. 1e2,1e3")
    p.add_argument("--methods", default="pskk,kde", help="comma-separated subset of pskk,kde")
    p.add_argument("--alpha", type=int, default=2)
    p.add_argument("--a", type=_auto_or(float), default=None)
    p.add_argument("--n", type=_auto_or(int), default=None)
    p.add_argument("--lambda", dest="lam", type=_auto_or(float), default=None)
    p.add_argument("--S", type=int, default=20, help="replications (default %(default)s)")
    p.add_argument("--t", type=int, default=16, help="log2 of the Sobol' point count (default %(default)s)")
    p.add_argument("--l", type=float, default=6.0, help="KDE integration half-width (default %(default)s)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-trunc", type=_count, default=10**6, help="draws for the exterior term")
    p.add_argument("--no-shift", action="store_true", help="use the unshifted Sobol' grid")
    p.add_argument("--no-timing", action="store_true",
                   help="leave runtime_seconds empty so reruns give identical files")
    p.add_argument("--out", help="report CSV (default: stdout)")
    p.add_argument("--plot", help="SVG file for the log-log convergence plot")
    _schedule_flags(p, epsilon_default=0.1, eta_default=1.0)
    return parser


def _schedule_args(args) -> dict:
    return dict(beta=args.beta, q=args.q, epsilon=args.epsilon, eta=args.eta, n_max=args.n_max,
                prime_rounding=args.prime_rounding)


def _need_schedule(args) -> bool:
    if args.a is None or args.n is None or args.lam is None:
        if args.beta is None or args.q is None:
            raise ValidationError("'auto' parameters need the decay prior --beta and --q")
        return True
    return False


def cmd_cbc(args, out) -> None:
    lat = cbc_construct(args.dim, args.n, args.alpha, args.a)
    text = format_lattice(lat, args.alpha)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        out.write(text)


def cmd_fit(args, out) -> None:
    Y = read_points_csv(args.samples)
    M, d = Y.shape
    a, N, lam = args.a, args.n, args.lam
    if _need_schedule(args):
        sched = default_params(M, args.alpha, **_schedule_args(args))
        a = sched.a if a is None else a
        N = sched.N if N is None else N
        lam = sched.lam if lam is None else lam
    lattice = None
    if args.lattice:
        lattice, _ = load_lattice(args.lattice)
    kp = KernelParams(args.alpha, a, d)
    model = fit(Y, kp, N, lam, lattice=lattice, workers=args.threads)
    save_model(model, args.out)
    out.write(f"M={M} d={d} alpha={args.alpha} a={a:.6g} N={model.N} lambda={lam:.6g} mass={model.mass():.6f}\n")


def cmd_eval(args, out) -> None:
    model = load_model(args.model)
    pts = read_points_csv(args.points)
    values = evaluate(model, pts, workers=args.threads)
    if args.out:
        write_values_csv(args.out, values)
    else:
        out.write("density\n")
        out.writelines(format(v, ".17g") + "\n" for v in values)


def cmd_bench(args, out) -> None:
    if args.example not in EXAMPLES:
        raise ValidationError(f"unknown example {args.example!r}; choose from {', '.join(EXAMPLES)}")
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in ("pskk", "kde"):
            raise ValidationError(f"unknown method {m!r}; choose pskk or kde")
    pskk_args = dict(alpha=args.alpha, a=args.a, N=args.n, lam=args.lam)
    if "pskk" in methods and _need_schedule(args):
        pskk_args.update(_schedule_args(args))
    config = StudyConfig(example=args.example, Ms=args.m, methods=methods, S=args.S, t=args.t, l=args.l,
                         seed=args.seed, n_trunc=args.n_trunc, shift=not args.no_shift, pskk=pskk_args,
                         workers=args.threads)
    reports = convergence_study(config, plot_path=args.plot)
    write_report_csv(reports, args.out if args.out else out, timing=not args.no_timing)
    for m in methods:
        rs = [r for r in reports if r.method == m]
        try:
            slope, _ = fit_loglog_slope([r.M for r in rs], [r.mise for r in rs])
            print(f"{m}: fitted log-log slope {slope:.3f}", file=sys.stderr)
        except ValidationError:
            pass


COMMANDS = {"cbc": cmd_cbc, "fit": cmd_fit, "eval": cmd_eval, "bench": cmd_bench}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        args.threads = resolve_workers(args.threads)
        COMMANDS[args.command](args, out)
    except (ValidationError, InvalidSampleError, FileNotFoundError) as exc:
        print(f"pskk {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PskkError, ArithmeticError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"pskk {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
