"""Command-line interface.

Every command writes JSON (or CSV for experiment tables) carrying a
``schema_version`` field. Exit status: 0 success, 2 when ``correct`` finds
that no corrected profile exists, 1 on any error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import SCHEMA_VERSION, TOL
from .correction import NONEXISTENT, run_algorithm1
from .decomposable import hybrid_solve
from .demand import generate_synthetic_weeks, load_csv
from .evaluation import ExperimentConfig, evaluate, hospital_base_rates, run_experiment
from .existence import membership_in_b, support, universal_existence
from .forecast import WeeklyProfile, average_weekly_profile, corrected_weekly_profile, forecast_next_day
from .network import load_network
from .optkernel import dump_lps
from .twostage import solve_fluid, solve_saa, verify_kkt

log = logging.getLogger("fluidcorrect")

EXIT_OK, EXIT_ERROR, EXIT_NONEXISTENT = 0, 1, 2


class _Encoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.generic):
            return o.item()
        return super().default(o)


def _emit(payload, out):
    text = json.dumps({"schema_version": SCHEMA_VERSION, **payload}, indent=2, cls=_Encoder)
    if out:
        Path(out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _network(args):
    if not args.network:
        raise SystemExit("error: --network is required")
    return load_network(args.network)


def _demand(args, n):
    if getattr(args, "synthetic", False):
        base = np.asarray(_read_json(args.base_rates), dtype=float) if args.base_rates else hospital_base_rates()
        if base.shape[-2] != n:
            raise ValueError(f"synthetic base rates have {base.shape[-2]} classes, network has {n}")
        return generate_synthetic_weeks(base, args.trend, args.weeks, seed=args.seed)
    if not args.demand:
        raise ValueError("a demand source is required: --demand D.csv or --synthetic")
    ds = load_csv(args.demand)
    if ds.n != n:
        raise ValueError(f"demand file has {ds.n} classes, network has {n}")
    return ds


def _staffing(path):
    d = _read_json(path)
    return np.asarray(d["b"] if isinstance(d, dict) else d, dtype=float)


def _profile(path):
    d = _read_json(path)
    if isinstance(d, dict):
        d = d.get("lambda", d.get("forecast", d.get("rates")))
    return np.asarray(d, dtype=float)


def cmd_solve_saa(args):
    net = _network(args)
    ds = _demand(args, net.n)
    sol = solve_saa(net, ds, tie_break=args.tie_break, method=args.lp_method)
    _emit({"command": "solve-saa", "Z": ds.Z, "T": ds.T, **sol.to_dict()}, args.out)
    return EXIT_OK


def cmd_solve_fluid(args):
    net = _network(args)
    if args.profile:
        lam = _profile(args.profile)
    else:
        lam = _demand(args, net.n).mean_path()
    sol = solve_fluid(net, lam, tie_break=args.tie_break, method=args.lp_method)
    kkt = verify_kkt(net, lam, sol, tol=args.tol or TOL.kkt)
    _emit({"command": "solve-fluid", **sol.to_dict(), "kkt": kkt.to_dict()}, args.out)
    return EXIT_OK


def cmd_check_existence(args):
    net = _network(args)
    payload = {"command": "check-existence"}
    if args.staffing:
        b = _staffing(args.staffing)
        T = args.periods
    else:
        ds = _demand(args, net.n)
        sol = solve_saa(net, ds)
        b, T = sol.b, ds.T
        payload["saa"] = {"b": sol.b, "objective": sol.objective}
    required = "all" if args.pools == "all" else sorted(support(b))
    uni = universal_existence(net, required)
    mem = membership_in_b(net, T, b, smooth=args.smooth, time_limit=args.time_limit)
    payload.update(
        b=b,
        T=T,
        pools_mode=args.pools,
        universal=uni.to_dict(),
        verdict="in-B" if mem.in_b else "not-in-B",
        membership=mem.to_dict(),
    )
    _emit(payload, args.out)
    return EXIT_OK


def cmd_correct(args):
    net = _network(args)
    ds = _demand(args, net.n)
    res = run_algorithm1(net, ds, pools=args.pools, smooth=args.smooth, tol=args.tol or 1e-6, time_limit=args.time_limit)
    _emit({"command": "correct", **res.to_dict()}, args.out)
    return EXIT_NONEXISTENT if res.outcome == NONEXISTENT else EXIT_OK


def cmd_hybrid_solve(args):
    net = _network(args)
    ds = _demand(args, net.n)
    res = hybrid_solve(net, ds, smooth=args.smooth, time_limit=args.time_limit)
    _emit({"command": "hybrid-solve", **res.to_dict()}, args.out)
    return EXIT_OK


def cmd_forecast(args):
    if args.profile:
        d = _read_json(args.profile)
        prof = WeeklyProfile.from_dict(d) if isinstance(d, dict) and "rates" in d else WeeklyProfile(np.asarray(d))
        if args.method and prof.provenance != {"avg": "average", "corrected": "corrected"}[args.method]:
            log.warning("profile provenance is %r but --method %s was given", prof.provenance, args.method)
    else:
        ds = _demand(args, _network(args).n if args.network else hospital_base_rates().shape[0])
        if args.method == "corrected":
            prof = corrected_weekly_profile(_network(args), ds, smooth=args.smooth)
        else:
            prof = average_weekly_profile(ds)
        if args.save_profile:
            Path(args.save_profile).write_text(json.dumps({"schema_version": SCHEMA_VERSION, **prof.to_dict()}, cls=_Encoder))
    lam = forecast_next_day(prof, args.model)
    _emit({"command": "forecast", "model": args.model, "provenance": prof.provenance, "forecast": lam}, args.out)
    return EXIT_OK


def cmd_evaluate(args):
    net = _network(args)
    b = _staffing(args.staffing)
    ds = _demand(args, net.n)
    ev = evaluate(net, b, ds)
    _emit({"command": "evaluate", "Z": ds.Z, "T": ds.T, **ev.to_dict()}, args.out)
    return EXIT_OK


def cmd_experiment(args):
    cfg = ExperimentConfig(
        train_sizes=tuple(int(v) for v in args.sizes.split(",")),
        trials=args.trials,
        n_test=args.n_test,
        trend=args.trend,
        seed=args.seed if args.seed is not None else 0,
        forecaster=args.model,
        test_day_offset=args.test_day_offset,
        smooth=args.smooth,
        shared_pool=args.shared_pool,
        base_rates=np.asarray(_read_json(args.base_rates), dtype=float) if args.base_rates else None,
        network=load_network(args.network) if args.network else None,
    )
    rep = run_experiment(cfg)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "cost_vs_N.csv").write_text(rep.cost_csv())
        (out / "staffing_vs_N.csv").write_text(rep.staffing_csv())
        (out / "report.json").write_text(json.dumps(rep.to_dict(), indent=2, sort_keys=True, cls=_Encoder) + "\n")
    else:
        sys.stdout.write(rep.cost_csv())
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--network", help="network JSON (keys n, m, k, R, A, c, p)")
    g.add_argument("--demand", help="demand CSV (scenario,period,class,count)")
    g.add_argument("--seed", type=int, default=None, help="random seed")
    g.add_argument("--out", help="output file (directory for experiment); stdout if omitted")
    g.add_argument("--tol", type=float, default=None, help="verification tolerance")
    g.add_argument("--dump-lp", metavar="DIR", help="write every LP solved to DIR as text")
    g.add_argument("-v", "--verbose", action="store_true")
    syn = common.add_argument_group("synthetic demand")
    syn.add_argument("--synthetic", action="store_true", help="generate Poisson weeks instead of reading --demand")
    syn.add_argument("--weeks", type=int, default=10)
    syn.add_argument("--trend", type=float, default=1.1)
    syn.add_argument("--base-rates", help="JSON array (n, 24) or (7, n, 24) of Monday rates")

    p = argparse.ArgumentParser(prog="fluidcorrect", description="Two-stage staffing and decision-corrected arrival rates.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp_ = sub.add_parser(name, parents=[common], help=help_)
        sp_.set_defaults(func=func)
        return sp_

    for name, func, help_ in (("solve-saa", cmd_solve_saa, "sample-average staffing"), ("solve-fluid", cmd_solve_fluid, "fluid staffing for a rate profile")):
        s = add(name, func, help_)
        s.add_argument("--tie-break", default="min-norm", choices=["min-norm", "max-norm", "none"])
        s.add_argument("--lp-method", default="highs", choices=["highs", "simplex"])
        if name == "solve-fluid":
            s.add_argument("--profile", help="JSON rate profile (T x n); defaults to the demand mean")

    s = add("check-existence", cmd_check_existence, "test whether a corrected rate exists")
    s.add_argument("--staffing", help="JSON staffing vector (list or {'b': [...]})")
    s.add_argument("--periods", type=int, default=1, help="horizon T when --staffing is given")
    s.add_argument("--pools", choices=["all", "from-saa"], default="all")
    s.add_argument("--smooth", action="store_true")
    s.add_argument("--time-limit", type=float, default=None)

    s = add("correct", cmd_correct, "compute a decision-corrected rate profile")
    s.add_argument("--pools", choices=["all", "from-saa"], default="all")
    s.add_argument("--smooth", action="store_true")
    s.add_argument("--time-limit", type=float, default=None)

    s = add("hybrid-solve", cmd_hybrid_solve, "quantile rules plus correction per component")
    s.add_argument("--smooth", action="store_true")
    s.add_argument("--time-limit", type=float, default=None)

    s = add("forecast", cmd_forecast, "forecast next Monday from a weekly profile")
    s.add_argument("--profile", help="weekly profile JSON (7 x n x 24)")
    s.add_argument("--method", choices=["avg", "corrected"], default="avg")
    s.add_argument("--model", choices=["naive", "ar1"], default="ar1")
    s.add_argument("--smooth", action="store_true")
    s.add_argument("--save-profile", help="also write the weekly profile built from demand")

    s = add("evaluate", cmd_evaluate, "score a staffing vector on test demand")
    s.add_argument("--staffing", required=True)

    s = add("experiment", cmd_experiment, "benchmark vs corrected over training sizes")
    s.add_argument("--sizes", default="5,10,20")
    s.add_argument("--trials", type=int, default=5)
    s.add_argument("--n-test", type=int, default=30)
    s.add_argument("--model", choices=["naive", "ar1"], default="ar1")
    s.add_argument("--test-day-offset", type=int, default=7)
    s.add_argument("--shared-pool", choices=["newsvendor", "sum-of-quantiles"], default="sum-of-quantiles")
    s.add_argument("--smooth", action="store_true")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    ctx = dump_lps(args.dump_lp) if args.dump_lp else contextlib.nullcontext()
    try:
        with ctx:
            return args.func(args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            sys.stderr.write(exc.code + "\n")
            return EXIT_ERROR
        raise
    except Exception as exc:  # noqa: BLE001 - surface any failure as exit 1
        log.debug("command failed", exc_info=True)
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
