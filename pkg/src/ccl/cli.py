"""Command-line front end.

Exit codes: 0 success, 1 runtime or tolerance failure, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import tempfile
import time

import numpy as np

from . import theory
from .config import (
    OUTPUT_ENV,
    build_dataset,
    external_scores,
    load_config,
    validate_paths,
    write_bundle,
)
from .exceptions import ConfigError, FormatError, InvalidParamsError, ParseError
from .schedule import ScheduleParams, cyclical_sizes
from .selection import (
    inclusion_frequencies,
    inclusion_probabilities_bruteforce,
    sample_sequential,
)
from .trainer import run_experiment

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
EXACT_MAX_N, EXACT_MAX_K = 12, 6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _default_output():
    return os.environ.get(OUTPUT_ENV, "ccl_output")


# schedule ------------------------------------------------------------------

def cmd_schedule(args, out=None):
    out = out or sys.stdout
    try:
        params = ScheduleParams(args.sp, args.ep, args.alpha, args.epochs)
    except InvalidParamsError as exc:
        raise UsageError(str(exc)) from None
    print(",".join(repr(float(f)) for f in cyclical_sizes(params)), file=out)
    return EXIT_OK


# train ---------------------------------------------------------------------

def _summary(report):
    rows = report.table_rows()
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)


def cmd_train(args, out=None):
    out = out or sys.stdout
    cfg = load_config(args.config)
    if args.output:
        cfg.output_dir = args.output
    validate_paths(cfg)
    try:
        dataset = build_dataset(cfg)
    except (FormatError, ParseError) as exc:
        raise ConfigError(f"cannot load dataset: {exc}") from None
    scores = external_scores(cfg, len(dataset.train[1]))
    started = time.time()
    report = run_experiment(dataset, cfg.train, jobs=args.jobs, scores=scores)
    files = write_bundle(cfg, report, started)
    print(_summary(report), file=out)
    print(f"wrote {len(files)} files to {os.path.abspath(cfg.output_dir)}", file=out)
    return EXIT_OK


# theory --------------------------------------------------------------------

def default_cases():
    """(label, distribution, weighting) for the closed-form checks."""
    D, W = theory.DistSpec, theory.WeightingSpec
    return [
        ("normal/uniform", D("normal", 1.0, 0.5), W("uniform")),
        ("normal/exponential", D("normal", 1.0, 0.5), W("exponential", 1.0)),
        ("half_normal/uniform", D("half_normal", 0.0, 1.0), W("uniform")),
        ("half_normal/exponential", D("half_normal", 0.0, 1.0), W("exponential", 1.0)),
    ]


def _parse_grid(tokens):
    spec = {"sigma": (0.1, 4.0), "lambda": (0.1, 4.0), "steps": 32}
    for tok in tokens:
        key, sep, val = tok.partition("=")
        if not sep or key not in spec:
            raise UsageError(f"bad grid token {tok!r}; use sigma=a:b lambda=a:b steps=N")
        try:
            if key == "steps":
                spec[key] = int(val)
            else:
                a, b = (float(x) for x in val.split(":"))
                spec[key] = (a, b)
        except ValueError:
            raise UsageError(f"bad grid token {tok!r}") from None
    (s0, s1), (l0, l1), steps = spec["sigma"], spec["lambda"], spec["steps"]
    if steps < 2 or not (0 < s0 < s1) or not (0 < l0 < l1):
        raise UsageError("grid needs positive increasing ranges and steps >= 2")
    return spec


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".ccl-", dir=d)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def cmd_theory(args, out=None):
    out = out or sys.stdout
    grid = _parse_grid(args.grid or [])
    if args.n < 10**4:
        raise UsageError("--n must be >= 10000")
    ok = True
    print("case,analytic,mc,std_error,rel_error,status", file=out)
    for label, dist, weighting in default_cases():
        exact = theory.analytic_error(dist, weighting)
        est = theory.mc_error(dist, weighting, n=args.n, seed=args.seed, n_boot=args.boot)
        rel = abs(est.value - exact) / exact
        good = rel <= args.tol
        ok &= good
        print(f"{label},{exact:.6g},{est.value:.6g},{est.std_error:.3g},{rel:.3g},"
              f"{'ok' if good else 'FAIL'}", file=out)

    rows = theory.region_grid(grid["sigma"], grid["lambda"], grid["steps"])
    lines = ["sigma,lambda,diff"] + ["%.10g,%.10g,%.10g" % tuple(r) for r in rows]
    path = os.path.join(args.out or _default_output(), "region.csv")
    _atomic_write(path, "\n".join(lines) + "\n")
    negative = sum(1 for r in rows if r[2] < 0)
    print(f"region grid: {len(rows)} points, {negative} with E_esg < E_sgd, "
          f"sign change at sigma*lambda = {theory.sign_change_product():.6f} -> {path}", file=out)

    if args.theorem4:
        rep = theory.theorem4_bound_check(n=args.n, seeds=range(args.seeds), mu=args.mu)
        print(f"argmax ln(x)/x = {rep.argmax:.9f} (e = {math.e:.9f}), "
              f"max = {rep.max_value:.9f} (1/e = {1 / math.e:.9f}), "
              f"bound pi*e = {rep.threshold:.6f}", file=out)
        print("sigma,seed,inverse,uniform,holds", file=out)
        for r in rep.rows:
            print(f"{r['sigma']:g},{r['seed']},{r['inverse']:.6g},{r['uniform']:.6g},"
                  f"{r['holds']}", file=out)
        good = rep.all_hold and abs(rep.argmax - math.e) < 1e-6
        ok &= good
        print(f"inverse weighting below uniform for every sigma < pi*e: {good}", file=out)

    if args.simulate:
        wins = 0
        print("seed,ccl_total,uniform_total", file=out)
        for s in range(args.seeds * 2):
            tr = theory.cyclical_error_simulation(n=args.n // 10, steps=100, seed=args.seed + s)
            wins += tr.ccl_total < tr.uniform_total
            print(f"{args.seed + s},{tr.ccl_total:.6g},{tr.uniform_total:.6g}", file=out)
        good = wins >= math.ceil(0.9 * args.seeds * 2)
        ok &= good
        print(f"cyclical policy below uniform in {wins}/{args.seeds * 2} seeds", file=out)
    return EXIT_OK if ok else EXIT_FAIL


# sample-test ---------------------------------------------------------------

def cmd_sample_test(args, out=None):
    out = out or sys.stdout
    n, k = args.n, args.k
    if n < 1 or not 1 <= k <= n or args.trials < 1:
        raise UsageError("need n >= 1, 1 <= k <= n and trials >= 1")
    exact = args.exact or (n <= EXACT_MAX_N and k <= EXACT_MAX_K)
    if exact and (n > EXACT_MAX_N or k > EXACT_MAX_K):
        raise UsageError(f"exact mode bound exceeded: needs n <= {EXACT_MAX_N} and k <= {EXACT_MAX_K}")
    rng = np.random.default_rng(args.seed)
    scores = rng.uniform(0.1, 1.0, n)
    scores /= scores.sum()
    freq = inclusion_frequencies(scores, k, args.trials, rng)
    if exact:
        ref, label = inclusion_probabilities_bruteforce(scores, k), "exact"
    else:
        ref = np.zeros(n)
        for _ in range(args.trials):
            ref[sample_sequential(scores, k, rng)] += 1
        ref /= args.trials
        label = "sequential"
    dev = np.abs(freq - ref)
    print(f"index,score,empirical,{label}", file=out)
    for i in range(n):
        print(f"{i},{scores[i]:.6f},{freq[i]:.6f},{ref[i]:.6f}", file=out)
    good = float(dev.max()) < args.tol
    print(f"max abs deviation {dev.max():.6f} (tol {args.tol}): {'ok' if good else 'FAIL'}",
          file=out)
    return EXIT_OK if good else EXIT_FAIL


# entry point ---------------------------------------------------------------

def build_parser():
    p = _Parser(prog="ccl", description="Cyclical curriculum learning tools")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("schedule", help="print a cyclical size schedule as a CSV row")
    s.add_argument("--sp", type=float, default=0.25, help="start (minimum) fraction")
    s.add_argument("--ep", type=float, default=1.0, help="end (maximum) fraction")
    s.add_argument("--alpha", type=float, default=0.5, help="shrink factor per step")
    s.add_argument("--epochs", type=int, default=7, help="schedule length")
    s.set_defaults(func=cmd_schedule)

    t = sub.add_parser("train", help="run a multi-seed method comparison from a config file")
    t.add_argument("config", help="INI config file")
    t.add_argument("--jobs", type=int, default=1, help="worker processes (one seed each)")
    t.add_argument("--output", help="output directory (overrides the config)")
    t.set_defaults(func=cmd_train)

    th = sub.add_parser("theory", help="verify the selection-error formulas")
    th.add_argument("--n", type=int, default=10**6, help="Monte-Carlo population size")
    th.add_argument("--seed", type=int, default=0)
    th.add_argument("--seeds", type=int, default=5, help="seeds for --theorem4 (twice as many for --simulate)")
    th.add_argument("--boot", type=int, default=20, help="bootstrap resamples for std errors")
    th.add_argument("--tol", type=float, default=0.02, help="relative tolerance")
    th.add_argument("--mu", type=float, default=1.0, help="half-normal location for --theorem4")
    th.add_argument("--out", help="directory for region.csv")
    th.add_argument("--grid", nargs="+", metavar="KEY=VAL",
                    help="sigma=a:b lambda=a:b steps=N (default 0.1:4, 0.1:4, 32)")
    th.add_argument("--theorem4", action="store_true", help="check the inverse-weighting bound")
    th.add_argument("--simulate", action="store_true", help="run the cyclical error simulation")
    th.set_defaults(func=cmd_theory)

    st = sub.add_parser("sample-test", help="check sampler inclusion frequencies")
    st.add_argument("--n", type=int, default=5)
    st.add_argument("--k", type=int, default=2)
    st.add_argument("--trials", type=int, default=200000)
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--tol", type=float, default=0.01)
    st.add_argument("--exact", action="store_true",
                    help="require brute-force probabilities (n <= 12, k <= 6)")
    st.set_defaults(func=cmd_sample_test)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"ccl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"ccl: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidParamsError as exc:
        print(f"ccl: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"ccl: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
