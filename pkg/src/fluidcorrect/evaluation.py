"""Scoring staffing plans on held-out demand and the benchmark-vs-corrected experiment."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from ._validation import as_scenarios, check_staffing
from .config import SCHEMA_VERSION
from .decomposable import (
    CASE1,
    CASE2,
    SHARED_POOL,
    case1_quantile,
    classify_component,
    per_class_quantiles,
    shared_pool_newsvendor,
)
from .demand import DAYS, HOURS, DemandScenarioSet, generate_synthetic_weeks, weekly_rates
from .forecast import average_weekly_profile, corrected_weekly_profile, forecast_next_day
from .network import decompose, six_class_hospital_network
from .twostage import recourse_values, solve_fluid

log = logging.getLogger(__name__)


@dataclass
class EvaluationEntry:
    """Cost of one staffing plan on a test set.

    ``staffing_cost`` is ``c.b T``; ``abandonment`` holds one second-stage
    value per test scenario and ``abandonment_cost`` their weighted mean.
    """

    b: np.ndarray
    staffing_cost: float
    abandonment: np.ndarray
    abandonment_cost: float

    @property
    def total(self):
        return self.staffing_cost + self.abandonment_cost

    def to_dict(self):
        return {
            "b": self.b.tolist(),
            "staffing_cost": self.staffing_cost,
            "abandonment_cost": self.abandonment_cost,
            "total": self.total,
            "per_scenario_abandonment": self.abandonment.tolist(),
        }


def evaluate(net, b, test_ds):
    """Staffing cost plus mean second-stage abandonment cost over ``test_ds``."""
    b = check_staffing(b, net.m)
    test_ds = as_scenarios(test_ds, net.n)
    values = recourse_values(net, b, test_ds.paths)
    return EvaluationEntry(b, float(net.c @ b) * test_ds.T, values, float(test_ds.weights @ values))


def hospital_base_rates():
    """Monday hourly rates ``(6, 24)`` shaped like emergency-department arrivals.

    Classes 0-3 follow a common night-trough, afternoon-peak curve at four
    slightly different levels; classes 4 and 5 peak around noon.
    """
    t = np.arange(HOURS)
    ed = 3.5 - 2.0 * np.cos(2 * np.pi * (t - 2) / HOURS) - 0.6 * np.cos(4 * np.pi * (t - 8) / HOURS)
    rows = [ed * s for s in (1.0, 1.05, 1.1, 1.15)]
    noon = np.exp(-0.5 * ((t - 12) / 3.5) ** 2)
    rows.append(1.5 + 6.0 * noon)
    rows.append(1.0 + 5.0 * noon)
    return np.array(rows)


@dataclass
class ExperimentConfig:
    """Settings of the benchmark-vs-corrected comparison.

    ``test_day_offset`` is the trend exponent of the test day: 0 means the
    Monday of a fresh week (the trend restarts every week), 7 the day after
    the training week's Sunday. ``shared_pool`` selects the rule for a pool
    serving two classes: ``"sum-of-quantiles"`` or ``"newsvendor"``.
    """

    train_sizes: tuple = (5, 10, 20)
    trials: int = 5
    n_test: int = 30
    trend: float = 1.1
    seed: int = 0
    forecaster: str = "ar1"
    test_day_offset: int = 7
    smooth: bool = False
    shared_pool: str = "sum-of-quantiles"
    base_rates: object = None
    network: object = None

    def resolved(self):
        net = self.network if self.network is not None else six_class_hospital_network(HOURS)
        base = np.asarray(self.base_rates if self.base_rates is not None else hospital_base_rates(), dtype=float)
        return net, base

    def to_dict(self):
        d = {k: v for k, v in asdict(self).items() if k not in ("base_rates", "network")}
        d["train_sizes"] = list(self.train_sizes)
        return d


def benchmark_plan(net, train_ds, forecaster="naive"):
    """Average week, forecast Monday, staff the fluid model on the forecast."""
    lam = forecast_next_day(average_weekly_profile(train_ds), forecaster)
    return solve_fluid(net, lam).b, {"forecast": lam.tolist()}


def corrected_plan(net, train_ds, forecaster="naive", smooth=False, time_limit=None, shared_pool="newsvendor"):
    """Quantiles on decomposable components, corrected profile elsewhere.

    Single-class components use the quantile of all pooled hourly
    observations; a pool shared by two classes uses the two-customer
    condition (``shared_pool="newsvendor"``) or the sum of the per-class
    quantiles (``"sum-of-quantiles"``); coupled components get a corrected weekly profile that is
    forecast to Monday and staffed by the fluid model.
    """
    b = np.zeros(net.m)
    info = []
    for comp in decompose(net):
        rule = classify_component(comp)
        rec = {"pools": list(comp.pools), "kind": rule.kind}
        if rule.kind in (CASE1, CASE2):
            res = case1_quantile(rule, train_ds)
            b[res.pool] = res.b
            rec["method"] = "quantile"
        elif rule.kind == SHARED_POOL and shared_pool == "sum-of-quantiles":
            b[rule.pools[0]] = sum(r.b for r in per_class_quantiles(rule, train_ds))
            rec["method"] = "sum-of-quantiles"
        elif rule.kind == SHARED_POOL:
            b[rule.pools[0]] = shared_pool_newsvendor(rule, train_ds)[0]
            rec["method"] = "two-customer-newsvendor"
        else:
            sub = comp.subnetwork()
            prof = corrected_weekly_profile(sub, train_ds.restrict(classes=comp.classes), smooth=smooth, time_limit=time_limit, check=False)
            lam = forecast_next_day(prof, forecaster)
            b[list(comp.pools)] = solve_fluid(sub, lam).b
            rec.update(method="corrected-profile", flagged_days=prof.info["flagged_days"])
        info.append(rec)
    return b, {"components": info}


@dataclass
class EvaluationReport:
    """Per-trial results and their aggregates."""

    rows: list
    config: dict
    metadata: dict = field(default_factory=dict)

    def aggregate(self):
        """Mean and standard error of each cost by ``(N, method)``."""
        out = []
        keys = sorted({(r["N"], r["method"]) for r in self.rows})
        for N, method in keys:
            sel = [r for r in self.rows if r["N"] == N and r["method"] == method]
            rec = {"N": N, "method": method, "trials": len(sel)}
            for col in ("staffing_cost", "abandonment_cost", "total"):
                v = np.array([r[col] for r in sel])
                rec[f"{col}_mean"] = float(v.mean())
                rec[f"{col}_se"] = float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0
            out.append(rec)
        return out

    def staffing_table(self):
        out = []
        keys = sorted({(r["N"], r["method"]) for r in self.rows})
        for N, method in keys:
            sel = np.array([r["b"] for r in self.rows if r["N"] == N and r["method"] == method])
            out.append({"N": N, "method": method, **{f"b{h}": float(v) for h, v in enumerate(sel.mean(axis=0))}})
        return out

    def mean_totals(self, method):
        return {a["N"]: a["total_mean"] for a in self.aggregate() if a["method"] == method}

    def cost_csv(self):
        return _csv(self.aggregate())

    def staffing_csv(self):
        return _csv(self.staffing_table())

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "metadata": self.metadata,
            "aggregate": self.aggregate(),
            "staffing": self.staffing_table(),
            "rows": self.rows,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _csv(records):
    buf = io.StringIO()
    cols = ["schema_version"] + list(records[0].keys())
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow({"schema_version": SCHEMA_VERSION, **{k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()}})
    return buf.getvalue()


def trial_streams(seed, trials):
    """One ``(train, test)`` pair of independent generators per trial.

    Streams are split from a single ``SeedSequence(seed)``: trial ``k``
    uses child ``k``, whose two children seed the training and test draws.
    """
    out = []
    for child in np.random.SeedSequence(seed).spawn(trials):
        tr, te = child.spawn(2)
        out.append((np.random.default_rng(tr), np.random.default_rng(te)))
    return out


def test_set(base, trend, n_test, day_offset, rng):
    """``n_test`` single-day scenarios ``(24, n)`` at the given trend exponent."""
    rates = weekly_rates(base, trend, day_offset=day_offset)[0]  # (n, 24)
    return DemandScenarioSet(rng.poisson(rates.T, size=(n_test, HOURS, rates.shape[0])).astype(float))


def run_experiment(config=None):
    """Compare the benchmark and corrected plans over trials and training sizes.

    Training sets are nested: trial ``k`` draws ``max(train_sizes)`` weeks
    once and uses the first ``N`` for size ``N``. Both plans of a trial are
    scored on the same test set.

    Returns
    -------
    EvaluationReport
    """
    config = config or ExperimentConfig()
    net, base = config.resolved()
    Nmax = max(config.train_sizes)
    rows = []
    for trial, (rng_train, rng_test) in enumerate(trial_streams(config.seed, config.trials)):
        weeks = generate_synthetic_weeks(base, config.trend, Nmax, seed=rng_train)
        test = test_set(base, config.trend, config.n_test, config.test_day_offset, rng_test)
        for N in config.train_sizes:
            train = DemandScenarioSet(weeks.paths[:N])
            plans = {
                "benchmark": benchmark_plan(net, train, config.forecaster),
                "corrected": corrected_plan(net, train, config.forecaster, config.smooth, shared_pool=config.shared_pool),
            }
            for method, (b, info) in plans.items():
                ev = evaluate(net, b, test)
                rows.append({"trial": trial, "N": N, "method": method, **ev.to_dict(), "info": info})
            log.info("trial %d N=%d done", trial, N)
    meta = {"n_pools": net.m, "n_classes": net.n, "test_periods": HOURS, "days": DAYS, "seed_scheme": "SeedSequence(seed).spawn(trials) -> (train, test)"}
    return EvaluationReport(rows, config.to_dict(), meta)
