"""Command-line entry point: ``gimp simulate | price | verify | diagnose``.

Exit codes: 0 success, 1 computation or verification failure, 2 usage or
configuration error.  ``GIMP_WORKERS`` sets the default worker count; it
never changes results.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from . import __version__
from . import diagnostics as dg
from .clock import simulate_time_changed
from .config import load_config, provenance
from .errors import ConfigError, GimpError, ResourceError
from .pricing import price_many
from .process import simulate
from .suites import SUITES, run_custom, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
_REPORT_NAMES = {"martingale": "martingale", "granger": "granger", "stability": "increment_stability"}
PRICE_CSV_HEADER = ["payoff", "value", "stderr", "ci_low", "ci_high", "n", "seed"]


def _workers(args, cfg=None):
    if args.workers is not None:
        return args.workers
    env = os.environ.get("GIMP_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"GIMP_WORKERS must be an integer, got {env!r}") from None
    return cfg.run["workers"] if cfg is not None else 1


def _load(args):
    """Config with command-line overrides folded into its run block (and hash)."""
    cfg = load_config(args.config)
    raw = json.loads(json.dumps(cfg.raw))
    run = raw.setdefault("run", {})
    changed = False
    for key in ("seed", "horizon", "n_paths"):
        val = getattr(args, key, None)
        if val is not None:
            run[key] = val
            changed = True
    if changed:
        from .config import parse_config
        cfg = parse_config(raw, source=args.config)
    return cfg


def _paths(cfg, workers, horizon=None):
    run = cfg.run
    horizon = run["horizon"] if horizon is None else horizon
    if cfg.clock is None:
        return simulate(cfg.model, run["n_paths"], horizon, run["seed"], workers, cfg.config_hash)
    return simulate_time_changed(cfg.model, cfg.clock, run["n_paths"], horizon, run["seed"], workers,
                                 cfg.max_internal, cfg.config_hash)


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True)


# ---------------------------------------------------------------- commands


def cmd_simulate(args):
    cfg = _load(args)
    paths = _paths(cfg, _workers(args, cfg))
    paths.meta["engine_version"] = __version__
    out = args.out or cfg.run["out"]
    csv_path, json_path = paths.write(out)
    print(f"wrote {csv_path} and {json_path} ({paths.n_paths} paths, horizon {paths.horizon})")
    return EXIT_OK


def cmd_price(args):
    cfg = _load(args)
    if not cfg.payoffs:
        raise ConfigError("config has no payoffs")
    payoffs = [cfg.payoff(args.payoff)] if args.payoff else cfg.payoffs
    seed = cfg.run["seed"]
    estimates = price_many(cfg.model, payoffs, cfg.run["n_paths"], seed, cfg.clock, _workers(args, cfg))
    rows = []
    for est in estimates:
        est.config_hash = cfg.config_hash
        d = est.to_dict()
        d["engine_version"] = __version__
        rows.append(d)
    print(_dump(rows[0] if args.payoff else rows))
    if args.csv:
        new = not os.path.exists(args.csv) or os.path.getsize(args.csv) == 0
        with open(args.csv, "a", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if new:
                w.writerow(PRICE_CSV_HEADER)
            for e in estimates:
                w.writerow([e.payoff, repr(e.value), repr(e.stderr), repr(e.ci95[0]), repr(e.ci95[1]),
                            e.n_paths, e.seed])
    return EXIT_OK


def cmd_verify(args):
    if args.lattice:
        with open(args.lattice) as fh:
            try:
                spec = json.load(fh)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{args.lattice}:{e.lineno}: invalid JSON: {e.msg}") from None
        try:
            outcomes = run_custom(spec)
        except ResourceError as e:
            raise ConfigError(str(e)) from None
    else:
        outcomes = run_suite(args.suite, args.seed)
    ok = all(o.ok for o in outcomes)
    if args.json:
        print(_dump({"suite": args.suite, "seed": args.seed, "engine_version": __version__, "ok": ok,
                     "results": [o.to_dict() for o in outcomes]}))
    else:
        for o in outcomes:
            mark = "ok      " if o.ok else "MISMATCH"
            print(f"{mark} {o.kind:<11s} {o.name:<28s} max violation {o.report.max_violation:.3e}")
            for msg in o.mismatches:
                print(f"         {msg}")
            if not o.ok:
                for c in o.report.checks:
                    if not c.passed and c.witness:
                        print(f"         witness {c.name}: {json.dumps(c.witness)}")
                        break
        n_bad = sum(not o.ok for o in outcomes)
        print(f"{len(outcomes) - n_bad}/{len(outcomes)} checks as predicted (seed {args.seed}, "
              f"engine {__version__})")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_diagnose(args):
    cfg = _load(args)
    paths = _paths(cfg, _workers(args, cfg))
    tests = args.tests.split(",")
    unknown = [t for t in tests if t not in _REPORT_NAMES]
    if unknown:
        raise ConfigError(f"unknown test {unknown[0]!r}; choose from martingale, granger, stability")
    reports = []
    for name in tests:
        if name == "martingale":
            reports += dg.martingale_test(paths, args.significance)
        elif name == "granger":
            reports += dg.granger_test(paths, args.lags, args.significance)
        else:
            reports += dg.increment_stability_test(paths, args.bins, args.significance)
    prov = provenance(cfg, cfg.run["seed"])
    if args.json:
        print(_dump(dict(prov, reports=[r.to_dict() for r in reports])))
        return EXIT_OK
    for r in reports:
        cell = ", ".join(f"{k}={v}" for k, v in r.cell.items() if k not in ("kendall_tau",))
        mark = "REJECT" if r.reject else "ok    "
        print(f"{mark} {r.name:<20s} stat {r.statistic:12.5g}  p {r.p_value:9.3g}  n {r.n:<9d} {cell}")
    for name in tests:
        sub = [r for r in reports if r.name == _REPORT_NAMES[name]]
        print(f"{name}: {sum(r.reject for r in sub)}/{len(sub)} rejected")
    print(f"config {prov['config_hash']} seed {prov['seed']} engine {prov['engine_version']}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser():
    parser = argparse.ArgumentParser(prog="gimp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gimp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, horizon=True):
        p.add_argument("--config", required=True, help="JSON engine config")
        p.add_argument("--seed", type=int, help="override run.seed")
        p.add_argument("--n-paths", dest="n_paths", type=int, help="override run.n_paths")
        p.add_argument("--workers", type=int, help="worker threads (results do not depend on it)")
        if horizon:
            p.add_argument("--horizon", type=int, help="override run.horizon")

    p = sub.add_parser("simulate", help="simulate paths to CSV with a JSON sidecar")
    common(p)
    p.add_argument("--out", help="CSV path (default run.out)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("price", help="Monte Carlo prices as JSON")
    common(p, horizon=False)
    p.add_argument("--payoff", help="payoff name (default: all, on common random numbers)")
    p.add_argument("--csv", help="append results to this CSV")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("verify", help="exact lattice verification suites")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.add_argument("--lattice", help="JSON lattice spec to check instead of the built-in suite")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("diagnose", help="statistical tests on simulated paths")
    common(p)
    p.add_argument("--tests", default="martingale,granger,stability")
    p.add_argument("--significance", type=float, default=0.01)
    p.add_argument("--lags", type=int, default=1)
    p.add_argument("--bins", type=int, default=5)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"gimp {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"gimp {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (GimpError, ArithmeticError, ValueError, MemoryError) as e:
        print(f"gimp {args.command}: failed: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
