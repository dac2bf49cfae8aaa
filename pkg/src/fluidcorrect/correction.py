"""From demand scenarios to a decision-corrected arrival-rate profile.

The pipeline solves the sample-average staffing problem for ``b*`` and then
builds a profile ``lam`` whose fluid-optimal staffing is ``b*``:

1. if every staffed pool has a cost-minimal, penalty-capped activity, put
   ``b*_h / A_{h,j(h)}`` on that activity in every period;
2. otherwise look for a price certificate ``y_1..y_T`` for ``b*``;
3. if one exists, put ``b*_h / A_{h,j_t(h)}`` on the witness activity of
   every pool priced in period ``t``.

When neither route applies no corrected profile exists.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import as_scenarios, check_staffing
from .existence import (
    MembershipResult,
    UniversalExistenceReport,
    membership_in_b,
    pool_witnesses,
    support,
    universal_existence,
)
from .twostage import expected_cost, recourse_values, solve_fluid, solve_saa

UNIVERSAL = "universal"
DISTRIBUTION_DEPENDENT = "distribution-dependent"
NONEXISTENT = "nonexistent"


class CorrectionError(ValueError):
    """A construction was asked for under a precondition that does not hold."""


def construct_universal_lambda(net, b_star, T=1):
    """Constant profile from one cost-minimal activity per staffed pool.

    Returns ``(lam, columns)`` where ``lam`` is ``(T, n)`` and ``columns``
    maps each staffed pool to the activity used (smallest index on ties).
    """
    b_star = check_staffing(b_star, net.m)
    good, _, _ = pool_witnesses(net, net.activity_cost())
    x = np.zeros(net.k)
    columns = {}
    for h in sorted(support(b_star)):
        acts = net.activities_of_pool(h)
        hits = acts[good[acts]]
        if hits.size == 0:
            raise CorrectionError(
                f"pool {h} has no cost-minimal activity within its penalty cap; "
                "use a price certificate (membership_in_b) instead"
            )
        j = int(hits[0])
        columns[h] = j
        x[j] = b_star[h] / net.A[h, j]
    lam = np.tile(net.R @ x, (int(T), 1))
    return lam, columns


def construct_lambda_from_certificate(net, b_star, cert):
    """Time-varying profile from the witnesses of a price certificate.

    Returns ``(lam, witnesses)`` with ``lam`` of shape ``(T, n)``.
    """
    b_star = check_staffing(b_star, net.m)
    y = np.asarray(cert.y, dtype=float)
    T = y.shape[0]
    if y.shape != (T, net.m):
        raise CorrectionError(f"certificate has shape {y.shape}, expected (T, {net.m})")
    x = np.zeros((T, net.k))
    for t in range(T):
        for h in np.nonzero(y[t] > 0)[0]:
            j = cert.witnesses.get((t, int(h)))
            if j is None:
                raise CorrectionError(f"invalid certificate: no witness for period {t}, pool {h}")
            if net.pool_of[j] != h:
                raise CorrectionError(f"invalid certificate: witness {j} is not on pool {h}")
            x[t, j] = b_star[h] / net.A[h, j]
    return x @ net.R.T, dict(cert.witnesses)


@dataclass
class ResolveCheck:
    """Does the fluid model fed with ``lam`` recover an SAA-optimal staffing?

    ``fluid_b`` is the fluid solution (with ``tie_break``), ``resolve_cost``
    its cost under the scenario distribution and ``saa_objective`` the SAA
    optimum. ``bstar_fluid_gap`` is how far ``b*`` is from fluid-optimal.
    """

    fluid_b: np.ndarray
    resolve_cost: float
    saa_objective: float
    fluid_objective: float
    bstar_fluid_gap: float
    tol: float
    tie_break: str

    @property
    def gap(self):
        return self.resolve_cost - self.saa_objective

    @property
    def passed(self):
        return bool(abs(self.gap) <= self.tol * (1.0 + abs(self.saa_objective)))

    @property
    def bstar_in_argmin(self):
        return bool(abs(self.bstar_fluid_gap) <= self.tol * (1.0 + abs(self.fluid_objective)))

    def to_dict(self):
        return {
            "passed": self.passed,
            "fluid_b": self.fluid_b.tolist(),
            "resolve_cost": self.resolve_cost,
            "saa_objective": self.saa_objective,
            "gap": self.gap,
            "bstar_in_fluid_argmin": self.bstar_in_argmin,
            "tol": self.tol,
            "tie_break": self.tie_break,
        }


def fluid_cost(net, b, lam):
    """Fluid objective ``c.b T + pi(b, lam)`` at a fixed staffing."""
    lam = np.asarray(lam, dtype=float)
    return float(net.c @ b) * lam.shape[0] + recourse_values(net, b, lam[None])[0]


def resolve_check(net, lam, ds, b_star, saa_objective, tie_break="min-norm", tol=1e-6):
    """Solve the fluid model at ``lam`` and score its staffing on ``ds``."""
    fl = solve_fluid(net, lam, tie_break=tie_break)
    cost = expected_cost(net, fl.b, ds)
    gap_star = fluid_cost(net, b_star, lam) - fl.objective
    return ResolveCheck(fl.b, cost, float(saa_objective), fl.objective, gap_star, tol, str(tie_break))


@dataclass
class CorrectionResult:
    """Outcome of :func:`run_algorithm1`."""

    outcome: str
    lam: Optional[np.ndarray]
    b_star: np.ndarray
    saa_objective: float
    trace: dict
    check: Optional[ResolveCheck] = None
    universal: Optional[UniversalExistenceReport] = None
    membership: Optional[MembershipResult] = None
    extra: dict = field(default_factory=dict)

    @property
    def exists(self):
        return self.outcome != NONEXISTENT

    def to_dict(self):
        d = {
            "outcome": self.outcome,
            "b_star": self.b_star.tolist(),
            "saa_objective": self.saa_objective,
            "lambda": None if self.lam is None else self.lam.tolist(),
            "construction": self.trace,
        }
        if self.check is not None:
            d["check"] = self.check.to_dict()
        if self.universal is not None:
            d["universal"] = self.universal.to_dict()
        if self.membership is not None:
            d["membership"] = self.membership.to_dict()
        return d


def run_algorithm1(net, ds, pools="from-saa", smooth=False, tie_break="min-norm", method="auto", tol=1e-6, time_limit=None):
    """Compute a decision-corrected profile for the scenario set ``ds``.

    Parameters
    ----------
    pools : {"from-saa", "all"}
        Which pools the parameter-only test must cover: those staffed by
        ``b*`` (enough for the constant construction) or every pool.
    smooth : bool
        Prefer certificates whose prices change little between periods.
    tie_break : str
        Tie-break of the staffing solves (see :func:`solve_fluid`).
    tol : float
        Relative tolerance of the re-solve check.

    Returns
    -------
    CorrectionResult
    """
    ds = as_scenarios(ds, net.n)
    saa = solve_saa(net, ds, tie_break=tie_break)
    b_star = saa.b
    T = ds.T
    if pools == "from-saa":
        required = sorted(support(b_star))
    elif pools == "all":
        required = "all"
    else:
        raise ValueError(f"pools must be 'from-saa' or 'all', got {pools!r}")
    uni = universal_existence(net, required)
    if uni.holds:
        lam, columns = construct_universal_lambda(net, b_star, T)
        trace = {"step": "constant", "columns": {str(h): j for h, j in columns.items()}, "tie_break": "smallest activity index"}
        result = CorrectionResult(UNIVERSAL, lam, b_star, saa.objective, trace, universal=uni)
    else:
        mem = membership_in_b(net, T, b_star, smooth=smooth, method=method, time_limit=time_limit)
        if not mem.in_b:
            trace = {"step": "none", "message": mem.message}
            return CorrectionResult(NONEXISTENT, None, b_star, saa.objective, trace, universal=uni, membership=mem)
        lam, wit = construct_lambda_from_certificate(net, b_star, mem.certificate)
        trace = {
            "step": "certificate",
            "witnesses": [[t, h, j] for (t, h), j in sorted(wit.items())],
            "tie_break": "smoothest certificate" if smooth else "first feasible certificate, smallest activity index",
        }
        result = CorrectionResult(DISTRIBUTION_DEPENDENT, lam, b_star, saa.objective, trace, universal=uni, membership=mem)
    result.check = resolve_check(net, result.lam, ds, b_star, saa.objective, tie_break=tie_break, tol=tol)
    return result
