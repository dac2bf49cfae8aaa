"""Estimator-style wrappers around the functional API.

Each estimator takes the service network as a constructor parameter and is
fitted on demand scenarios (``(Z, T, n)`` arrays or a
:class:`~fluidcorrect.demand.DemandScenarioSet`) or, for the fluid model, on
an arrival-rate profile ``(T, n)``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_scenarios, check_profile
from .correction import NONEXISTENT, run_algorithm1
from .decomposable import hybrid_solve
from .demand import DemandScenarioSet
from .twostage import expected_cost, solve_fluid, solve_saa


def _scenarios(X, net, sample_weight=None):
    if sample_weight is not None:
        paths = X.paths if isinstance(X, DemandScenarioSet) else X
        w = np.asarray(sample_weight, dtype=float)
        return as_scenarios(DemandScenarioSet(paths, w / w.sum()), net.n)
    return as_scenarios(X, net.n)


class _StaffingMixin:
    def predict(self, X=None):
        """The fitted staffing vector ``b``."""
        check_is_fitted(self, "b_")
        return self.b_.copy()

    def score(self, X, y=None):
        """Negative expected two-stage cost of ``b_`` on scenarios ``X``."""
        check_is_fitted(self, "b_")
        return -expected_cost(self.network, self.b_, as_scenarios(X, self.network.n))


class SAAStaffing(_StaffingMixin, BaseEstimator):
    """Sample-average staffing.

    Parameters
    ----------
    network : ServiceNetwork
    tie_break : {"min-norm", "max-norm", "none"}
        Selection among optimal staffing vectors.
    method : {"highs", "simplex"}
        LP backend.

    Attributes
    ----------
    b_ : ndarray of shape (m,)
    objective_ : float
    solution_ : StaffingSolution
    """

    def __init__(self, network=None, tie_break="min-norm", method="highs"):
        self.network = network
        self.tie_break = tie_break
        self.method = method

    def fit(self, X, y=None, sample_weight=None):
        ds = _scenarios(X, self.network, sample_weight)
        self.solution_ = solve_saa(self.network, ds, tie_break=self.tie_break, method=self.method)
        self.b_ = self.solution_.b
        self.objective_ = self.solution_.objective
        return self


class FluidStaffing(_StaffingMixin, BaseEstimator):
    """Staffing of the deterministic fluid model for a rate profile ``X`` (T x n)."""

    def __init__(self, network=None, tie_break="min-norm", method="highs"):
        self.network = network
        self.tie_break = tie_break
        self.method = method

    def fit(self, X, y=None):
        lam = check_profile(X, self.network.n)
        self.solution_ = solve_fluid(self.network, lam, tie_break=self.tie_break, method=self.method)
        self.b_ = self.solution_.b
        self.objective_ = self.solution_.objective
        return self


class DecisionCorrector(BaseEstimator):
    """Decision-corrected arrival rates for a scenario set.

    ``fit`` staffs the scenarios by sample average and searches for a rate
    profile whose fluid staffing coincides with it; ``transform`` returns
    that profile.

    Parameters
    ----------
    network : ServiceNetwork
    pools : {"all", "from-saa"}
        Coverage of the parameter-only existence test.
    smooth : bool
        Prefer certificates with small period-to-period price changes.
    tol : float
        Relative tolerance of the re-solve check.

    Attributes
    ----------
    lambda_ : ndarray of shape (T, n) or None
    outcome_ : str
    b_star_ : ndarray of shape (m,)
    result_ : CorrectionResult
    """

    def __init__(self, network=None, pools="all", smooth=False, tol=1e-6, time_limit=None):
        self.network = network
        self.pools = pools
        self.smooth = smooth
        self.tol = tol
        self.time_limit = time_limit

    def fit(self, X, y=None, sample_weight=None):
        ds = _scenarios(X, self.network, sample_weight)
        res = run_algorithm1(self.network, ds, pools=self.pools, smooth=self.smooth, tol=self.tol, time_limit=self.time_limit)
        self.result_ = res
        self.lambda_ = res.lam
        self.outcome_ = res.outcome
        self.b_star_ = res.b_star
        return self

    def transform(self, X=None):
        check_is_fitted(self, "result_")
        if self.outcome_ == NONEXISTENT:
            raise ValueError("no decision-corrected rate exists for the fitted scenarios")
        return self.lambda_.copy()


class HybridCorrector(_StaffingMixin, BaseEstimator):
    """Component-wise staffing: quantile rules on simple components, correction elsewhere.

    Attributes
    ----------
    b_ : ndarray of shape (m,)
    lambda_ : ndarray of shape (T, n)
    components_ : list of dict
        Kind and method of every connected component.
    """

    def __init__(self, network=None, smooth=False, time_limit=None):
        self.network = network
        self.smooth = smooth
        self.time_limit = time_limit

    def fit(self, X, y=None, sample_weight=None):
        ds = _scenarios(X, self.network, sample_weight)
        res = hybrid_solve(self.network, ds, smooth=self.smooth, time_limit=self.time_limit)
        self.result_ = res
        self.b_ = res.b
        self.lambda_ = res.lam
        self.components_ = res.components
        return self

    def transform(self, X=None):
        check_is_fitted(self, "result_")
        return self.lambda_.copy()
