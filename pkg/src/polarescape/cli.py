"""Command-line front end: ``polarescape <subcommand> [flags]``.

Every run prints one summary line to standard output and, with
``--output``, writes a CSV or JSON report whose header echoes the resolved
configuration. Failures print a one-line JSON error and exit with

* 2 for usage and domain errors,
* 3 when an enumeration budget is exceeded,
* 4 for numerical failures.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .design import enumerate_subchannels, select_information_set, unpolarized_fraction
from .errors import BudgetExceeded, DomainError, NumericalError, PolarEscapeError, TooFewPoints
from .exact import (
    DEFAULT_BUDGET,
    DEFAULT_TOL,
    LOWER_BOUND_BITS,
    SIMULATED_RATE_BITS,
    UPPER_BOUND_BITS,
    escape_curve,
    exact_count,
    extrapolate_rate,
    preimage_cells,
)
from .maps import TargetInterval
from .reports import Report, sig6
from .stochastic import (
    RngSpec,
    ks_uniformity,
    lyapunov_estimate,
    mc_pn,
    qn_ratio_check,
    reverse_chain_marginal,
    threshold_samples,
)
from .zeta import ZetaParams, markov_tail_constant, minimize_zeta, zeta

EXIT_USAGE, EXIT_BUDGET, EXIT_NUMERICAL = 2, 3, 4
LN2 = math.log(2.0)
#: execution details left out of the echoed configuration
_NOT_ECHOED = {"output", "threads", "config", "no_timestamp", "func"}
# keys a report echoes that are not arguments; tolerated when replaying
_ECHO_ONLY = {"subcommand", "version", "timestamp"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def depths(text: str) -> list[int]:
    """Parse ``"12"``, ``"8..28"`` or ``"8,10,12"`` into a list of depths."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            out = list(range(int(lo), int(hi) + 1))
        else:
            out = [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad depth list {text!r}") from None
    if not out or min(out) < 0:
        raise argparse.ArgumentTypeError(f"bad depth list {text!r}")
    return out


def floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def pair(text: str) -> list[float]:
    v = floats(text)
    if len(v) != 2:
        raise argparse.ArgumentTypeError(f"expected two numbers, got {text!r}")
    return v


def _rate(args, bits: float) -> str:
    if args.nats:
        return f"{sig6(bits * LN2)} nats"
    return f"{sig6(bits)} bits"


def _target(args) -> TargetInterval:
    return TargetInterval(args.a, args.b)


def _rng(args) -> RngSpec:
    return RngSpec(args.seed, args.stream)


# -- subcommands ------------------------------------------------------------------


def cmd_exact_pn(args):
    target = _target(args)
    zs = np.asarray(args.z, dtype=float)
    counts = np.atleast_1d(exact_count(zs, args.n, target, args.budget))
    ps = [math.ldexp(int(k), -args.n) for k in counts]
    rows = [[float(z), args.n, int(k), p] for z, k, p in zip(zs, counts, ps)]
    best = max(ps)
    expo = math.log2(best) / args.n if best > 0 and args.n > 0 else float("-inf")
    result = {"n": args.n, "points": len(ps), "max_p_n": best, "max_exponent_bits": expo}
    line = f"exact-pn n={args.n}: p_n={sig6(best)} exponent={_rate(args, expo)}"
    return Report({}, result, ["z", "n", "count", "p_n"], rows), line


def cmd_preimage(args):
    enum = preimage_cells(args.n, _target(args), tol=args.tol, cap=args.cap, threads=args.threads)
    rep = enum.report()
    words = ["".join(map(str, c.word)) for c in enum.cells] if args.n > 0 else [""]
    rows = [[w, float(lo), float(hi)] for w, lo, hi in zip(words, enum.lo, enum.hi)]
    line = f"preimage n={args.n}: {rep['cell_count']} cells, b_n={_rate(args, rep['exponent_bits'])}"
    return Report({}, rep, ["word", "lo", "hi"], rows), line


def _curve(args, kind):
    curve = escape_curve(
        args.n,
        kind=kind,
        target=_target(args),
        region=TargetInterval(*args.region),
        z=args.z,
        budget=args.budget,
        tol=args.tol,
        threads=args.threads,
    )
    window = (min(args.window), max(args.window)) if args.window else None
    result = {"kind": kind, "bracket": [LOWER_BOUND_BITS, UPPER_BOUND_BITS]}
    try:
        fit = extrapolate_rate(curve, window)
    except TooFewPoints:
        fit = None
    if fit is not None:
        result.update(
            tail_estimate=fit.estimate,
            tail_slope=fit.slope,
            tail_window=list(fit.window),
            in_bracket=bool(fit.lower <= fit.estimate <= fit.upper),
            distance_to_simulated=abs(fit.estimate - SIMULATED_RATE_BITS),
        )
    rows = [[n, e] for n, e in curve.points]
    if fit is not None:
        line = f"{args.subcommand}: tail estimate {_rate(args, fit.estimate)} over n={fit.window[0]}..{fit.window[1]}"
    else:
        n, e = curve.points[-1]
        line = f"{args.subcommand}: exponent at n={n} {_rate(args, e)}"
    return Report({}, result, ["n", "exponent_bits"], rows), line


def cmd_escape_curve(args):
    return _curve(args, args.kind)


def cmd_bn_curve(args):
    return _curve(args, "b_n_integral")


def cmd_mc_pn(args):
    est = mc_pn(args.z[0], args.n, _target(args), args.samples, _rng(args), args.threads)
    result = {"z": args.z[0], "n": args.n, "p_n": est.mean, "std_error": est.std_error, "samples": est.samples}
    line = f"mc-pn n={args.n}: p_n={sig6(est.mean)} +- {sig6(est.std_error)}"
    return Report({}, result), line


def cmd_threshold_dist(args):
    if args.source == "threshold":
        xs = threshold_samples(args.depth, args.samples, _rng(args), args.threads)
    else:
        xs = reverse_chain_marginal(args.z0, args.depth, args.samples, _rng(args), args.threads)
    ks = ks_uniformity(xs, args.alpha)
    result = {
        "source": args.source,
        "depth": args.depth,
        "samples": ks.samples,
        "ks_statistic": ks.statistic,
        "ks_critical": ks.critical,
        "passed": ks.passed,
    }
    rows = [[float(x)] for x in xs] if args.dump else []
    verdict = "pass" if ks.passed else "fail"
    line = f"threshold-dist: D={sig6(ks.statistic)} critical={sig6(ks.critical)} {verdict}"
    return Report({}, result, ["value"] if args.dump else [], rows), line


def cmd_lyapunov(args):
    est = lyapunov_estimate(args.z0, args.steps, args.burnin, _rng(args), args.batches)
    result = {
        "mean_nats": est.mean_nats,
        "mean_bits": est.mean_bits,
        "std_error_nats": est.std_error,
        "std_error_bits": est.std_error_bits,
        "steps": est.steps,
        "burnin": est.burnin,
    }
    line = f"lyapunov: {_rate(args, est.mean_bits)} +- {_rate(args, est.std_error_bits)}"
    return Report({}, result), line


def cmd_zeta(args):
    res = zeta(ZetaParams(args.alpha, args.beta))
    result = res.as_dict()
    result["markov_tail_constant"] = markov_tail_constant(_target(args), res.params)
    line = f"zeta({sig6(args.alpha)}, {sig6(args.beta)}) = {sig6(res.zeta)}, bound {_rate(args, res.bound_bits)}"
    return Report({}, result), line


def cmd_zeta_min(args):
    search = minimize_zeta(tuple(args.box), args.starts, args.seed, args.line)
    result = search.as_dict()
    result["markov_tail_constant"] = markov_tail_constant(_target(args), search.best.params)
    rows = [[r.params.alpha, r.params.beta, r.zeta, r.bound_bits] for r in search.runs]
    b = search.best
    line = (
        f"zeta-min: alpha={sig6(b.params.alpha)} beta={sig6(b.params.beta)} "
        f"bound {_rate(args, b.bound_bits)}{'' if search.converged else ' (iteration cap hit)'}"
    )
    return Report({}, result, ["alpha", "beta", "zeta", "bound_bits"], rows), line


def cmd_qn_check(args):
    chk = qn_ratio_check(args.alpha, args.beta, args.z[0], args.n, args.samples, _rng(args), args.threads)
    result = {
        "alpha": chk.alpha,
        "beta": chk.beta,
        "n": chk.n,
        "growth": chk.growth,
        "growth_std_error": chk.growth_std_error,
        "zeta": chk.zeta,
        "passed": chk.passed,
    }
    ratios = [float("nan")] + chk.step_ratios()
    rows = [[k, m, s, r] for k, (m, s, r) in enumerate(zip(chk.mean_q, chk.mean_q_std_error, ratios))]
    verdict = "pass" if chk.passed else "fail"
    line = f"qn-check: growth {sig6(chk.growth)} vs zeta {sig6(chk.zeta)} {verdict}"
    return Report({}, result, ["step", "mean_q", "std_error", "ratio"], rows), line


def cmd_construct(args):
    table = enumerate_subchannels(args.z[0], args.n, threads=args.threads)
    sel = select_information_set(table, rate=args.rate, block_error=args.block_error)
    result = sel.as_dict()
    result["unpolarized_fraction"] = unpolarized_fraction(table, _target(args))
    rows = [[i, v] for i, v in enumerate(table.values.tolist())]
    line = f"construct n={args.n}: |info|={len(sel.info_set)} union bound {sig6(sel.union_bound)}"
    return Report({}, result, ["index", "bhattacharyya"], rows), line


# -- parser -------------------------------------------------------------------------


def _common(p, z_list=False):
    p.add_argument("--a", type=float, default=0.25, help="target interval lower end")
    p.add_argument("--b", type=float, default=0.75, help="target interval upper end")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--output", help="write the report here")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--config", help="JSON file of defaults; explicit flags win")
    p.add_argument("--nats", action="store_true", help="print rates in nats")
    p.add_argument("--no-timestamp", action="store_true", help="omit the run timestamp")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polarescape", description="Escape-rate experiments for the BEC polarization process.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        _common(p)
        p.set_defaults(func=func)
        return p

    p = add("exact-pn", cmd_exact_pn, "exact un-polarized mass at one or more z")
    p.add_argument("--z", type=floats, default=[0.5])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)

    p = add("preimage", cmd_preimage, "enumerate preimage cells of the target")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--cap", type=int, default=2**24)

    for name, func, help in (
        ("escape-curve", cmd_escape_curve, "finite-n escape exponents and tail fit"),
        ("bn-curve", cmd_bn_curve, "b_n curve from preimage lengths"),
    ):
        p = add(name, func, help)
        p.add_argument("--n", type=depths, required=True, help="depths, e.g. 8..28")
        p.add_argument("--z", type=float, default=0.5, help="start point for kind theta_at_z")
        p.add_argument("--region", type=pair, default=[0.25, 0.75], help="sup region a,b")
        p.add_argument("--window", type=depths, help="tail-fit window, e.g. 16..32")
        p.add_argument("--tol", type=float, default=DEFAULT_TOL)
        p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
        if name == "escape-curve":
            p.add_argument("--kind", choices=("a_n_sup", "theta_at_z"), default="a_n_sup")

    p = add("mc-pn", cmd_mc_pn, "Monte Carlo un-polarized mass")
    p.add_argument("--z", type=floats, default=[0.5])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=10**5)

    p = add("threshold-dist", cmd_threshold_dist, "KS uniformity of threshold samples")
    p.add_argument("--source", choices=("threshold", "reverse-chain"), default="threshold")
    p.add_argument("--depth", type=int, default=64, help="word length or chain burn-in")
    p.add_argument("--samples", type=int, default=10**5)
    p.add_argument("--z0", type=float, default=0.5, help="reverse-chain start")
    p.add_argument("--alpha", type=float, default=0.01, help="KS significance level")
    p.add_argument("--dump", action="store_true", help="include the samples in the report")

    p = add("lyapunov", cmd_lyapunov, "ergodic average along the reverse chain")
    p.add_argument("--steps", type=int, default=10**6)
    p.add_argument("--burnin", type=int, default=1000)
    p.add_argument("--z0", type=float, default=0.5)
    p.add_argument("--batches", type=int, default=100)

    p = add("zeta", cmd_zeta, "supermartingale factor at one (alpha, beta)")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)

    p = add("zeta-min", cmd_zeta_min, "minimize the supermartingale bound")
    p.add_argument("--box", type=pair, default=[0.0, 4.0])
    p.add_argument("--starts", type=int, default=16)
    p.add_argument("--line", action="store_true", help="restrict to alpha = beta")

    p = add("qn-check", cmd_qn_check, "Monte Carlo check of the Q_n growth rate")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--z", type=floats, default=[0.5])
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--samples", type=int, default=10**5)

    p = add("construct", cmd_construct, "BEC polar-code construction")
    p.add_argument("--z", type=floats, default=[0.5])
    p.add_argument("--n", type=int, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--rate", type=float)
    g.add_argument("--block-error", type=float)
    return parser


def parse(argv):
    """Parse ``argv``; values from ``--config`` sit under explicit flags."""
    parser = build_parser()
    subparsers = parser._subparsers._group_actions[0].choices
    # first pass only locates the subcommand and --config
    required = [a for sp in subparsers.values() for a in sp._actions if a.required]
    for action in required:
        action.required = False
    args = parser.parse_args(argv)
    cfg = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError(f"config {args.config} is not a JSON object")
        cfg = {str(k).replace("-", "_"): v for k, v in cfg.items()}
        unknown = set(cfg) - set(vars(args)) - _ECHO_ONLY
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        for key in _ECHO_ONLY:
            cfg.pop(key, None)
        subparsers[args.subcommand].set_defaults(**cfg)
    for action in required:
        action.required = action.dest not in cfg
    return parser.parse_args(argv)


def resolved_config(args) -> dict:
    cfg = {"subcommand": args.subcommand, "version": __version__}
    cfg.update({k: v for k, v in sorted(vars(args).items()) if k not in _NOT_ECHOED and k != "subcommand"})
    if not args.no_timestamp:
        cfg["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return cfg


def _fail(kind, message, code, out):
    out.write(json.dumps({"error": kind, "message": str(message), "exit_code": code}) + "\n")
    return code


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = parse(sys.argv[1:] if argv is None else argv)
        report, line = args.func(args)
        report.config = resolved_config(args)
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(report.dumps(args.format))
        out.write(line + "\n")
        return 0
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE, out)
    except BudgetExceeded as exc:
        return _fail("budget", exc, EXIT_BUDGET, out)
    except (NumericalError, TooFewPoints, FloatingPointError) as exc:
        return _fail("numerical", exc, EXIT_NUMERICAL, out)
    except (DomainError, PolarEscapeError, ValueError) as exc:
        return _fail("usage", exc, EXIT_USAGE, out)


if __name__ == "__main__":
    sys.exit(main())
