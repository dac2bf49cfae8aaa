import json

import numpy as np
import pytest

from fluidcorrect.demand import DemandScenarioSet, generate_synthetic_weeks
from fluidcorrect.evaluation import (
    ExperimentConfig,
    benchmark_plan,
    corrected_plan,
    evaluate,
    hospital_base_rates,
    run_experiment,
    trial_streams,
)
from fluidcorrect.network import decompose


def test_split_demand_totals(flex_net, split_demand):
    assert evaluate(flex_net, [0, 3, 0], split_demand).total == pytest.approx(18.0)
    assert evaluate(flex_net, [3, 0, 3], split_demand).total == pytest.approx(27.0)


def test_zero_staffing_pays_all_penalties(hospital_net):
    rng = np.random.default_rng(0)
    ds = DemandScenarioSet(rng.poisson(2.0, size=(5, 24, 6)).astype(float))
    ev = evaluate(hospital_net, np.zeros(7), ds)
    assert ev.staffing_cost == 0.0
    assert ev.total == pytest.approx(np.mean(ds.paths.sum(axis=1) @ hospital_net.p))


def test_huge_staffing_abandons_nothing(hospital_net):
    rng = np.random.default_rng(1)
    ds = DemandScenarioSet(rng.poisson(2.0, size=(5, 24, 6)).astype(float))
    b = np.full(7, 1e3)
    ev = evaluate(hospital_net, b, ds)
    assert ev.abandonment_cost == pytest.approx(0.0, abs=1e-6)
    assert ev.total == pytest.approx(hospital_net.c @ b * 24)


def test_trial_streams_independent_and_reproducible():
    a = trial_streams(0, 3)
    b = trial_streams(0, 3)
    draws_a = [(tr.random(), te.random()) for tr, te in a]
    draws_b = [(tr.random(), te.random()) for tr, te in b]
    assert draws_a == draws_b
    assert len({x for pair in draws_a for x in pair}) == 6


def test_plans_have_full_length(hospital_net):
    ds = generate_synthetic_weeks(hospital_base_rates(), 1.1, 2, seed=0)
    b_bench, _ = benchmark_plan(hospital_net, ds, "naive")
    b_corr, info = corrected_plan(hospital_net, ds, "naive", shared_pool="sum-of-quantiles")
    assert b_bench.shape == b_corr.shape == (7,)
    assert b_corr[1] == 0.0
    methods = [c["method"] for c in info["components"]]
    assert methods == ["quantile", "quantile", "sum-of-quantiles", "corrected-profile"]
    assert len(info["components"]) == len(decompose(hospital_net))


@pytest.fixture(scope="module")
def small_report():
    cfg = ExperimentConfig(train_sizes=(2, 3), trials=2, n_test=5, seed=11)
    return run_experiment(cfg)


def test_report_aggregates_reconcile(small_report):
    rows = small_report.rows
    for agg in small_report.aggregate():
        sel = [r for r in rows if r["N"] == agg["N"] and r["method"] == agg["method"]]
        assert agg["total_mean"] == pytest.approx(np.mean([r["total"] for r in sel]), rel=0, abs=1e-12)
        for r in sel:
            assert r["total"] == pytest.approx(r["staffing_cost"] + r["abandonment_cost"])
            assert r["abandonment_cost"] == pytest.approx(np.mean(r["per_scenario_abandonment"]))
            assert r["abandonment_cost"] >= 0


def test_report_outputs_versioned(small_report):
    d = json.loads(small_report.to_json())
    assert d["schema_version"] == "1.0"
    assert d["config"]["train_sizes"] == [2, 3]
    assert small_report.cost_csv().splitlines()[0].startswith("schema_version,")
    assert "b6" in small_report.staffing_csv().splitlines()[0]


def test_experiment_byte_identical():
    cfg = ExperimentConfig(train_sizes=(2,), trials=1, n_test=3, seed=5)
    assert run_experiment(cfg).cost_csv() == run_experiment(cfg).cost_csv()


@pytest.mark.parametrize("forecaster", ["naive", "ar1"])
def test_deterministic_week_corrected_not_worse(hospital_net, forecaster):
    day = np.round(hospital_base_rates()).T  # (24, 6)
    train = DemandScenarioSet(np.tile(day, (7, 1))[None])
    test = DemandScenarioSet(day[None])
    b_bench, _ = benchmark_plan(hospital_net, train, forecaster)
    b_corr, _ = corrected_plan(hospital_net, train, forecaster, shared_pool="newsvendor")
    bench, corr = evaluate(hospital_net, b_bench, test).total, evaluate(hospital_net, b_corr, test).total
    assert corr <= bench + 1e-6 * (1 + bench)
