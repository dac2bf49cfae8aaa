import numpy as np
import pytest
from conftest import random_network, random_scenarios
from hypothesis import given
from hypothesis import strategies as st

from fluidcorrect.correction import (
    DISTRIBUTION_DEPENDENT,
    NONEXISTENT,
    UNIVERSAL,
    CorrectionError,
    construct_lambda_from_certificate,
    construct_universal_lambda,
    resolve_check,
    run_algorithm1,
)
from fluidcorrect.demand import DemandScenarioSet
from fluidcorrect.existence import CertificateY
from fluidcorrect.network import ServiceNetwork
from fluidcorrect.twostage import solve_fluid


def test_split_demand_nonexistent(flex_net, split_demand):
    res = run_algorithm1(flex_net, split_demand)
    assert res.outcome == NONEXISTENT
    assert res.lam is None and not res.exists
    np.testing.assert_allclose(res.b_star, [0, 3, 0], atol=1e-9)
    assert res.to_dict()["lambda"] is None


def test_alternating_time_varying_rate(flex_net, alternating_demand):
    res = run_algorithm1(flex_net, alternating_demand)
    assert res.outcome == DISTRIBUTION_DEPENDENT
    assert res.check.passed
    assert res.saa_objective == pytest.approx(36.0)
    np.testing.assert_allclose(solve_fluid(flex_net, res.lam).b, [0, 3, 0], atol=1e-9)


def test_alternating_no_constant_rate_via_universal_construction(flex_net):
    with pytest.raises(CorrectionError):
        construct_universal_lambda(flex_net, [0, 3, 0])


def test_universal_outcome_on_dedicated_pools():
    net = ServiceNetwork(np.eye(2), np.eye(2), [1.0, 1.0], [4.0, 4.0])
    ds = DemandScenarioSet(np.array([[[1.0, 2.0]], [[3.0, 0.0]], [[2.0, 2.0]]]))
    res = run_algorithm1(net, ds)
    assert res.outcome == UNIVERSAL
    assert res.check.passed
    assert res.lam.shape == (1, 2)
    # constant over periods
    np.testing.assert_allclose(res.lam, res.lam[:1])


def test_pools_mode_validated(flex_net, alternating_demand):
    with pytest.raises(ValueError):
        run_algorithm1(flex_net, alternating_demand, pools="some")


def test_invalid_certificate_rejected(flex_net):
    cert = CertificateY(np.array([[4.0, 5.0, 5.0]]), {(0, 0): 0}, np.zeros(3))
    with pytest.raises(CorrectionError, match="no witness"):
        construct_lambda_from_certificate(flex_net, [3, 0, 3], cert)


@given(st.integers(0, 10_000))
def test_single_scenario_always_corrected(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng)
    ds = DemandScenarioSet.single(rng.integers(0, 5, size=(int(rng.integers(1, 3)), net.n)).astype(float))
    res = run_algorithm1(net, ds)
    assert res.outcome in (UNIVERSAL, DISTRIBUTION_DEPENDENT)
    assert res.check.passed
    # the demand itself is a corrected rate
    assert resolve_check(net, ds.paths[0], ds, res.b_star, res.saa_objective).passed


@given(st.integers(0, 10_000))
def test_resolve_soundness(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, max_n=3, max_m=3)
    ds = random_scenarios(rng, net.n, int(rng.integers(1, 3)), int(rng.integers(2, 5)))
    res = run_algorithm1(net, ds, pools=["all", "from-saa"][seed % 2])
    if res.outcome != NONEXISTENT:
        assert res.check.passed, res.check.to_dict()
        assert res.check.bstar_in_argmin
        assert res.lam.shape == (ds.T, net.n)
        assert np.all(res.lam >= 0)


def test_pools_mode_changes_route_not_validity(flex_net):
    # b* staffs pools 0 and 2 only; the parameter-only test passes on those
    ds = DemandScenarioSet(np.array([[[3.0, 3.0]], [[3.0, 2.0]]]))
    a = run_algorithm1(flex_net, ds, pools="from-saa")
    b = run_algorithm1(flex_net, ds, pools="all")
    np.testing.assert_allclose(a.b_star, [3, 0, 3], atol=1e-9)
    assert a.outcome == UNIVERSAL
    assert b.outcome == DISTRIBUTION_DEPENDENT
    assert a.check.passed and b.check.passed


def test_flexible_pool_in_saa_solution_blocks_correction(flex_net):
    ds = DemandScenarioSet(np.array([[[3.0, 3.0]], [[2.0, 4.0]]]))
    res = run_algorithm1(flex_net, ds)
    assert res.b_star[1] > 0
    assert res.outcome == NONEXISTENT
