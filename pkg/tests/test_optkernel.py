import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from fluidcorrect.optkernel import (
    BinaryLimitError,
    LinearProgram,
    MIPFeasibilityProblem,
    complementary_slackness_residual,
    dump_lps,
    enumerate_binaries,
    primal_residual,
    solve_lp,
    solve_mip_feasibility,
)


def random_lp(rng, nv=5, n_ub=4, n_eq=2):
    x0 = rng.uniform(0, 3, nv)
    A_ub = rng.normal(size=(n_ub, nv))
    b_ub = A_ub @ x0 + rng.uniform(0, 1, n_ub)
    A_eq = rng.normal(size=(n_eq, nv))
    b_eq = A_eq @ x0
    return LinearProgram(rng.normal(size=nv), A_ub, b_ub, A_eq, b_eq, ub=np.full(nv, 10.0))


@given(st.integers(0, 10_000))
def test_simplex_and_highs_agree(seed):
    rng = np.random.default_rng(seed)
    lp = random_lp(rng, nv=int(rng.integers(2, 7)), n_ub=int(rng.integers(1, 5)), n_eq=int(rng.integers(0, 3)))
    a = solve_lp(lp, "highs")
    b = solve_lp(lp, "simplex")
    assert a.optimal and b.optimal
    assert a.objective == pytest.approx(b.objective, abs=1e-7 * (1 + abs(a.objective)))
    for sol in (a, b):
        assert primal_residual(lp, sol.x) < 1e-7
        assert sol.dual_objective == pytest.approx(sol.objective, abs=1e-6 * (1 + abs(sol.objective)))
        assert np.all(sol.duals_ub >= 0)
        assert complementary_slackness_residual(lp, sol) < 1e-6


def test_bland_rule_terminates_on_beale_cycle():
    # classic degenerate instance on which the textbook pivot rule cycles
    c = [-0.75, 20, -0.5, 6]
    A = [[0.25, -8, -1, 9], [0.5, -12, -0.5, 3], [0, 0, 1, 0]]
    lp = LinearProgram(c, A, [0, 0, 1])
    sol = solve_lp(lp, "simplex")
    assert sol.optimal
    assert sol.objective == pytest.approx(-1.25)
    np.testing.assert_allclose(sol.x, [1, 0, 1, 0], atol=1e-9)


def test_dual_sign_convention():
    # min x s.t. x >= 2 written as -x <= -2: raising b_ub relaxes, dual = 1
    sol = solve_lp(LinearProgram([1.0], [[-1.0]], [-2.0]), "simplex")
    assert sol.objective == pytest.approx(2.0)
    assert sol.duals_ub[0] == pytest.approx(1.0)
    # equality: d obj / d b_eq = +1
    sol = solve_lp(LinearProgram([1.0, 2.0], A_eq=[[1.0, 1.0]], b_eq=[3.0]), "highs")
    assert sol.duals_eq[0] == pytest.approx(1.0)


@pytest.mark.parametrize("method", ["highs", "simplex"])
def test_infeasible_and_unbounded(method):
    infeas = LinearProgram([1.0], [[1.0], [-1.0]], [1.0, -2.0])
    assert solve_lp(infeas, method).status == "infeasible"
    unb = LinearProgram([-1.0], [[-1.0]], [0.0])
    assert solve_lp(unb, method).status == "unbounded"


def test_sparse_and_dense_inputs_agree():
    rng = np.random.default_rng(3)
    lp = random_lp(rng)
    lps = LinearProgram(lp.c, sp.csr_matrix(lp.A_ub), lp.b_ub, sp.csr_matrix(lp.A_eq), lp.b_eq, ub=lp.ub)
    assert solve_lp(lp).objective == pytest.approx(solve_lp(lps).objective)
    assert solve_lp(lps, "simplex").objective == pytest.approx(solve_lp(lp).objective)


def test_invalid_lp_rejected():
    with pytest.raises(ValueError):
        LinearProgram([1.0, 2.0], [[1.0]], [1.0])
    with pytest.raises(ValueError):
        LinearProgram([np.nan])


def test_dump_lps(tmp_path):
    lp = LinearProgram([1.0, 1.0], [[-1.0, -1.0]], [-1.0])
    with dump_lps(tmp_path):
        solve_lp(lp)
        solve_lp(lp, "simplex")
    files = sorted(tmp_path.iterdir())
    assert len(files) == 2
    text = files[0].read_text()
    assert "min" in text.lower()
    solve_lp(lp)
    assert len(list(tmp_path.iterdir())) == 2


def random_mip(rng):
    nc, nb = int(rng.integers(1, 4)), int(rng.integers(1, 6))
    nv = nc + nb
    binary = np.r_[np.zeros(nc, bool), np.ones(nb, bool)]
    A = rng.integers(-3, 4, size=(int(rng.integers(1, 5)), nv)).astype(float)
    b = rng.integers(-2, 4, size=A.shape[0]).astype(float)
    return MIPFeasibilityProblem(nv, binary, A, b, ub=np.full(nv, 5.0))


@given(st.integers(0, 10_000), st.booleans())
def test_mip_methods_agree_with_enumeration(seed, with_objective):
    rng = np.random.default_rng(seed)
    mp = random_mip(rng)
    if with_objective:
        mp.c = rng.normal(size=mp.n_vars)
        mp._relaxation.c = mp.c
    oracle = enumerate_binaries(mp)
    for method in ("bnb", "highs"):
        res = solve_mip_feasibility(mp, method=method)
        assert res.feasible == oracle.feasible
        if res.feasible:
            assert mp.violation(res.x) < 1e-6
            if with_objective:
                assert res.objective == pytest.approx(oracle.objective, abs=1e-6 * (1 + abs(oracle.objective)))


def test_binary_limit():
    mp = MIPFeasibilityProblem(3, np.ones(3, bool))
    with pytest.raises(BinaryLimitError):
        solve_mip_feasibility(mp, max_binaries=2)
    assert solve_mip_feasibility(mp).feasible
