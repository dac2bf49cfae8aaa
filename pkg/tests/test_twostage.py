import numpy as np
import pytest
from conftest import random_network, random_scenarios
from hypothesis import given
from hypothesis import strategies as st

from fluidcorrect.demand import DemandScenarioSet, expand
from fluidcorrect.network import ServiceNetwork
from fluidcorrect.twostage import (
    expanded_objective,
    expected_cost,
    kkt_residuals,
    recourse_values,
    second_stage,
    solve_expanded,
    solve_fluid,
    solve_saa,
    verify_kkt,
)


def test_split_demand_saa(flex_net, split_demand):
    sol = solve_saa(flex_net, split_demand)
    np.testing.assert_allclose(sol.b, [0, 3, 0], atol=1e-9)
    assert sol.objective == pytest.approx(18.0, abs=1e-9)
    assert sol.staffing_cost == pytest.approx(18.0)
    assert sol.abandonment_cost == pytest.approx(0.0, abs=1e-9)
    assert expected_cost(flex_net, [3, 0, 3], split_demand) == pytest.approx(27.0)


@pytest.mark.parametrize("method", ["highs", "simplex"])
def test_alternating_fluid(flex_net, method):
    sol = solve_fluid(flex_net, [[3, 0], [0, 3]], method=method)
    np.testing.assert_allclose(sol.b, [0, 3, 0], atol=1e-9)
    assert sol.objective == pytest.approx(36.0)
    assert verify_kkt(flex_net, [[3, 0], [0, 3]], sol).passed


def test_second_stage_single_pool_closed_form():
    net = ServiceNetwork([[1]], [[2.0]], [1.0], [5.0])
    # b = 3 capacity units serve 1.5 customers per period
    val, x, _, _ = second_stage(net, [3.0], [[1.0], [4.0]])
    assert val == pytest.approx(5.0 * (0 + 2.5))
    np.testing.assert_allclose(x[:, 0], [1.0, 1.5])


def test_zero_and_huge_staffing(flex_net, split_demand):
    ds = split_demand
    assert expected_cost(flex_net, np.zeros(3), ds) == pytest.approx(0.5 * 3 * 30 + 0.5 * 3 * 32)
    np.testing.assert_allclose(recourse_values(flex_net, [10, 10, 10], ds.paths), 0.0, atol=1e-9)


@given(st.integers(0, 10_000))
def test_saa_is_optimal_against_perturbations(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, max_n=3, max_m=3)
    ds = random_scenarios(rng, net.n, int(rng.integers(1, 3)), int(rng.integers(1, 4)))
    sol = solve_saa(net, ds)
    f = lambda b: expected_cost(net, b, ds)
    assert f(sol.b) == pytest.approx(sol.objective, abs=1e-7 * (1 + sol.objective))
    for h in range(net.m):
        for d in (0.3, -0.3):
            b = sol.b.copy()
            b[h] = max(b[h] + d, 0.0)
            assert f(b) >= sol.objective - 1e-7 * (1 + sol.objective)


@given(st.integers(0, 10_000))
def test_backends_agree(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, max_n=3, max_m=3)
    ds = random_scenarios(rng, net.n, 2, 2)
    a = solve_saa(net, ds, method="highs")
    b = solve_saa(net, ds, method="simplex")
    assert a.objective == pytest.approx(b.objective, abs=1e-7 * (1 + abs(a.objective)))


@given(st.integers(0, 10_000))
def test_single_scenario_saa_equals_fluid(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng)
    D = rng.integers(0, 5, size=(2, net.n)).astype(float)
    assert solve_saa(net, DemandScenarioSet.single(D)).objective == pytest.approx(
        solve_fluid(net, D).objective, abs=1e-7
    )


def test_tie_break_selects_within_optimal_face(flex_net):
    lam = [[3.0, 3.0]]
    net = flex_net.with_costs(c=[5.0, 5.0, 5.0])
    lo, hi = solve_fluid(net, lam, "min-norm"), solve_fluid(net, lam, "max-norm")
    assert lo.objective == pytest.approx(hi.objective)
    assert lo.b.sum() <= hi.b.sum() + 1e-9


@given(st.integers(0, 10_000))
def test_expansion_identity(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng)
    ds = random_scenarios(rng, net.n, int(rng.integers(1, 4)), int(rng.integers(1, 5)))
    ex = expand(ds)
    b = rng.uniform(0, 4, net.m)
    lhs = expected_cost(net, b, ds)
    rhs = expanded_objective(net, b, ex)
    assert lhs == pytest.approx(rhs, abs=1e-8 * (1 + abs(lhs)))
    val, _ = solve_expanded(net, ex)
    assert val * ds.T == pytest.approx(solve_saa(net, ds).objective, abs=1e-7 * (1 + abs(lhs)))


@given(st.integers(0, 10_000))
def test_fluid_solution_satisfies_kkt(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng)
    lam = rng.uniform(0, 5, size=(int(rng.integers(1, 4)), net.n))
    sol = solve_fluid(net, lam)
    rep = verify_kkt(net, lam, sol)
    assert rep.passed, rep.failed_blocks()


def test_kkt_blocks_detect_each_violation(flex_net):
    lam = np.array([[3.0, 0.0], [0.0, 3.0]])
    sol = solve_fluid(flex_net, lam)
    x, y, z = sol.x[0], sol.y[0], sol.z[0]
    assert kkt_residuals(flex_net, lam, sol.b, x, y, z).passed
    # over-serving demand breaks primal feasibility
    assert "primal" in kkt_residuals(flex_net, lam, sol.b, x + 1, y, z).failed_blocks()
    # prices above the staffing cost break dual feasibility
    assert "dual" in kkt_residuals(flex_net, lam, sol.b, x, y + 100, z).failed_blocks()
