"""Existence of decision-corrected arrival rates.

Two tests are provided. :func:`universal_existence` looks only at costs and
penalties and decides whether a corrected rate exists for every demand
distribution. :func:`membership_in_b` decides, for one staffing vector, whether
a sequence of capacity prices ``y_1..y_T`` exists with

* ``sum_t y_t <= c~`` (budget),
* ``sum_t y_{t,h} == c~_h`` on staffed pools (tightness),
* every ``y_{t,h} > 0`` has a witness activity ``j`` on pool ``h`` whose
  price ``(A^T y_t)_j`` is minimal within its class and at most ``p_{i(j)}``.

Here ``c~ = c * T`` is the horizon cost. Membership is decided by a mixed
binary program and every returned certificate is re-checked directly.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from ._validation import check_staffing
from .config import MAX_BINARIES, TOL
from .optkernel import MIPFeasibilityProblem, solve_mip_feasibility

log = logging.getLogger(__name__)

UNIVERSAL_TOL = 1e-12
NOT_IN_B_MESSAGE = "no dual sequence satisfies the budget, tightness and witness conditions"


@dataclass
class UniversalExistenceReport:
    """Outcome of the parameter-only existence test.

    ``witness[h]`` is the chosen activity for pool ``h`` or ``None``;
    ``reasons[h]`` explains a failure.
    """

    holds: bool
    witness: dict
    reasons: dict
    required_pools: tuple

    def to_dict(self):
        return {
            "holds": self.holds,
            "required_pools": list(self.required_pools),
            "witness": {str(h): (None if j is None else int(j)) for h, j in self.witness.items()},
            "reasons": {str(h): r for h, r in self.reasons.items()},
        }


def _classwise_min(net, values):
    """Minimum of ``values`` over the activities of each activity's class."""
    mins = np.full(net.n, np.inf)
    np.minimum.at(mins, net.class_of, values)
    return mins[net.class_of]


def pool_witnesses(net, prices, tol=UNIVERSAL_TOL):
    """Activities attaining their classwise minimum of ``prices`` below the penalty cap."""
    prices = np.asarray(prices, dtype=float)
    scale = 1.0 + np.abs(prices)
    ok_min = prices <= _classwise_min(net, prices) + tol * scale
    ok_cap = prices <= net.p[net.class_of] + tol * scale
    return ok_min & ok_cap, ok_min, ok_cap


def universal_existence(net, required_pools="all", tol=UNIVERSAL_TOL):
    """Check that every required pool has a cost-minimal, penalty-capped activity.

    Parameters
    ----------
    net : ServiceNetwork
    required_pools : "all" or iterable of int
        Pools for which a witness is required. ``"all"`` is the conservative
        choice; pass the staffed pools of an SAA solution to check only those.
    """
    if isinstance(required_pools, str):
        if required_pools != "all":
            raise ValueError(f"required_pools must be 'all' or a collection of pool indices, got {required_pools!r}")
        pools = tuple(range(net.m))
    else:
        pools = tuple(sorted(int(h) for h in required_pools))
    for h in pools:
        if not 0 <= h < net.m:
            raise ValueError(f"pool {h} out of range")
    cost = net.activity_cost()
    good, ok_min, ok_cap = pool_witnesses(net, cost, tol)
    witness, reasons = {}, {}
    for h in pools:
        acts = net.activities_of_pool(h)
        hits = acts[good[acts]]
        if hits.size:
            witness[h] = int(hits[0])
            continue
        witness[h] = None
        parts = []
        for j in acts:
            i = int(net.class_of[j])
            if not ok_min[j]:
                best = float(np.min(cost[net.class_of == i]))
                parts.append(f"activity {j}: cost {cost[j]:g} exceeds class {i} minimum {best:g}")
            elif not ok_cap[j]:
                parts.append(f"activity {j}: cost {cost[j]:g} exceeds penalty {net.p[i]:g}")
        reasons[h] = "; ".join(parts)
    return UniversalExistenceReport(all(w is not None for w in witness.values()), witness, reasons, pools)


@dataclass
class CertificateY:
    """Per-period capacity prices certifying membership.

    ``y`` is ``(T, m)``; ``witnesses`` maps ``(t, h)`` with ``y[t, h] > 0`` to
    the chosen activity; ``slack`` is ``c~ - sum_t y_t``.
    """

    y: np.ndarray
    witnesses: dict
    slack: np.ndarray

    @property
    def T(self):
        return self.y.shape[0]

    def to_dict(self):
        return {
            "y": self.y.tolist(),
            "witnesses": [[int(t), int(h), int(j)] for (t, h), j in sorted(self.witnesses.items())],
            "slack": self.slack.tolist(),
        }


@dataclass
class MembershipResult:
    """Verdict of :func:`membership_in_b`.

    ``exact`` is False only when a heuristic could not settle the question
    and the full program was not run.
    """

    in_b: bool
    certificate: Optional[CertificateY] = None
    message: str = ""
    exact: bool = True
    method: str = "mip"
    objective: Optional[float] = None
    nodes: int = 0

    def to_dict(self):
        d = {"in_b": self.in_b, "exact": self.exact, "method": self.method, "message": self.message}
        if self.certificate is not None:
            d["certificate"] = self.certificate.to_dict()
        if self.objective is not None:
            d["objective"] = self.objective
        return d


@dataclass
class CertificateLayout:
    """Column offsets of the certificate program's variables."""

    T: int
    m: int
    k: int
    smooth: bool = False

    @property
    def per_period(self):
        return 2 * (self.m + self.k)

    def y(self, t, h):
        return t * self.per_period + h

    def r(self, t, j):
        return t * self.per_period + self.m + j

    def w(self, t, h):
        return t * self.per_period + self.m + self.k + h

    def v(self, t, j):
        return t * self.per_period + 2 * self.m + self.k + j

    def delta(self, h):
        return self.T * self.per_period + h

    @property
    def n_vars(self):
        return self.T * self.per_period + (self.m if self.smooth else 0)

    def unpack(self, x):
        blocks = np.asarray(x[: self.T * self.per_period]).reshape(self.T, self.per_period)
        m, k = self.m, self.k
        return blocks[:, :m], blocks[:, m : m + k], blocks[:, m + k : 2 * m + k], blocks[:, 2 * m + k :]


def build_certificate_mip(net, T, b, smooth=False, budget=None, eps_staff=TOL.staff):
    """Mixed binary program whose feasible points are membership certificates.

    Variables per period are prices ``y`` (m), activity prices ``r`` (k),
    pool switches ``w`` (m) and witness switches ``v`` (k). Big-M constants
    are ``c~_h`` for ``y`` and ``(A^T c~)_j`` for the price comparisons.

    Parameters
    ----------
    budget : array, optional
        Replaces ``c~ = c * T`` as the price budget (used by the per-period
        decomposition).
    smooth : bool
        Add variables ``delta_h >= |y_{t,h} - y_{t+1,h}|`` and minimise their sum.

    Returns
    -------
    (MIPFeasibilityProblem, CertificateLayout)
    """
    T = int(T)
    if T < 1:
        raise ValueError("T must be positive")
    b = check_staffing(b, net.m)
    m, k = net.m, net.k
    ctil = net.total_cost(T) if budget is None else np.asarray(budget, dtype=float)
    Mr = net.A.T @ ctil
    L = CertificateLayout(T, m, k, smooth and T > 1)
    rows_ub, rhs_ub, rows_eq, rhs_eq = [], [], [], []

    def add(store, rhs_store, entries, rhs):
        store.append(entries)
        rhs_store.append(rhs)

    staffed = b > eps_staff
    for h in range(m):
        entries = [(L.y(t, h), 1.0) for t in range(T)]
        add(rows_ub, rhs_ub, entries, ctil[h])
        if staffed[h]:
            add(rows_eq, rhs_eq, entries, ctil[h])
    pool_of, class_of = net.pool_of, net.class_of
    for t in range(T):
        for j in range(k):
            entries = [(L.r(t, j), 1.0)]
            entries += [(L.y(t, h), -net.A[h, j]) for h in np.nonzero(net.A[:, j])[0]]
            add(rows_eq, rhs_eq, entries, 0.0)
        for h in range(m):
            add(rows_ub, rhs_ub, [(L.y(t, h), 1.0), (L.w(t, h), -ctil[h])], 0.0)
            entries = [(L.w(t, h), 1.0)] + [(L.v(t, j), -1.0) for j in net.activities_of_pool(h)]
            add(rows_ub, rhs_ub, entries, 0.0)
        for j in range(k):
            add(rows_ub, rhs_ub, [(L.v(t, j), 1.0), (L.w(t, pool_of[j]), -1.0)], 0.0)
            for jj in net.activities_of_class(class_of[j]):
                if jj != j:
                    add(rows_ub, rhs_ub, [(L.r(t, j), 1.0), (L.r(t, jj), -1.0), (L.v(t, j), Mr[j])], Mr[j])
            add(rows_ub, rhs_ub, [(L.r(t, j), 1.0), (L.v(t, j), Mr[j])], net.p[class_of[j]] + Mr[j])
    c = np.zeros(L.n_vars)
    if L.smooth:
        for h in range(m):
            c[L.delta(h)] = 1.0
            for t in range(T - 1):
                add(rows_ub, rhs_ub, [(L.y(t, h), 1.0), (L.y(t + 1, h), -1.0), (L.delta(h), -1.0)], 0.0)
                add(rows_ub, rhs_ub, [(L.y(t, h), -1.0), (L.y(t + 1, h), 1.0), (L.delta(h), -1.0)], 0.0)

    binary = np.zeros(L.n_vars, dtype=bool)
    for t in range(T):
        binary[[L.w(t, h) for h in range(m)]] = True
        binary[[L.v(t, j) for j in range(k)]] = True
    mp = MIPFeasibilityProblem(
        L.n_vars,
        binary,
        _sparse(rows_ub, L.n_vars),
        np.array(rhs_ub, dtype=float),
        _sparse(rows_eq, L.n_vars),
        np.array(rhs_eq, dtype=float),
        c=c,
    )
    return mp, L


def _sparse(rows, ncols):
    data, ri, ci = [], [], []
    for r, entries in enumerate(rows):
        for col, val in entries:
            ri.append(r)
            ci.append(col)
            data.append(val)
    return sp.csr_matrix((data, (ri, ci)), shape=(len(rows), ncols))


def check_certificate(net, T, b, y, witnesses, tol=TOL.certificate, budget=None, eps_staff=TOL.staff):
    """Re-check budget, tightness and witness conditions directly.

    Returns a list of human-readable violations (empty means valid).
    """
    b = check_staffing(b, net.m)
    y = np.asarray(y, dtype=float)
    ctil = net.total_cost(T) if budget is None else np.asarray(budget, dtype=float)
    out = []
    if y.shape != (T, net.m):
        return [f"y has shape {y.shape}, expected {(T, net.m)}"]
    if np.any(y < -tol):
        out.append("negative price")
    total = y.sum(axis=0)
    for h in range(net.m):
        if total[h] > ctil[h] + tol * (1 + ctil[h]):
            out.append(f"budget exceeded on pool {h}: {total[h]:.9g} > {ctil[h]:.9g}")
        if b[h] > eps_staff and abs(total[h] - ctil[h]) > tol * (1 + ctil[h]):
            out.append(f"staffed pool {h} not tight: {total[h]:.9g} != {ctil[h]:.9g}")
    for t in range(T):
        prices = net.A.T @ y[t]
        mins = _classwise_min(net, prices)
        for h in np.nonzero(y[t] > tol)[0]:
            j = witnesses.get((t, int(h)))
            if j is None:
                out.append(f"no witness for period {t}, pool {h}")
                continue
            if net.pool_of[j] != h:
                out.append(f"witness {j} for period {t} is not on pool {h}")
                continue
            s = tol * (1 + abs(prices[j]))
            if prices[j] > mins[j] + s:
                out.append(f"witness {j} in period {t} not classwise minimal ({prices[j]:.9g} > {mins[j]:.9g})")
            if prices[j] > net.p[net.class_of[j]] + s:
                out.append(f"witness {j} in period {t} above penalty cap")
    return out


def _extract_certificate(net, y, v, ctil, tol):
    y = np.where(y > tol * 1e-2, y, 0.0)
    witnesses = {}
    for t in range(y.shape[0]):
        good, _, _ = pool_witnesses(net, net.A.T @ y[t], tol)
        for h in np.nonzero(y[t] > 0)[0]:
            acts = net.activities_of_pool(h)
            flagged = [j for j in acts if v[t, j] > 0.5 and good[j]]
            fallback = [j for j in acts if good[j]]
            pick = flagged or fallback or [j for j in acts if v[t, j] > 0.5]
            if pick:
                witnesses[(t, int(h))] = int(pick[0])
    return CertificateY(y, witnesses, ctil - y.sum(axis=0))


def _solve_certificate(net, T, b, smooth, method, max_binaries, budget=None, time_limit=None):
    mp, L = build_certificate_mip(net, T, b, smooth=smooth, budget=budget)
    if method == "auto":
        method = "bnb" if mp.n_binaries <= 64 and not mp.has_objective else "highs"
    res = solve_mip_feasibility(mp, method=method, max_binaries=max_binaries, time_limit=time_limit)
    if not res.feasible:
        return None, res
    y, _, _, v = L.unpack(res.x)
    ctil = net.total_cost(T) if budget is None else np.asarray(budget, dtype=float)
    return _extract_certificate(net, y, v, ctil, TOL.certificate), res


def _per_period_heuristic(net, T, b, method):
    """Split the budget uniformly over periods and solve one period.

    Only the budget and tightness rows couple periods; with a uniform split
    every period faces the same single-period problem, so a feasible answer
    replicated over ``T`` periods is an exact certificate.
    """
    share = net.total_cost(T) / T
    cert, _ = _solve_certificate(net, 1, b, False, method, MAX_BINARIES, budget=share)
    if cert is None:
        return None
    y = np.repeat(cert.y, T, axis=0)
    witnesses = {(t, h): j for t in range(T) for (_, h), j in cert.witnesses.items()}
    return CertificateY(y, witnesses, net.total_cost(T) - y.sum(axis=0))


def membership_in_b(net, T, b, smooth=False, method="auto", max_binaries=MAX_BINARIES, time_limit=None):
    """Decide whether ``b`` admits a price certificate over ``T`` periods.

    Parameters
    ----------
    method : {"auto", "bnb", "highs"}
        MIP backend; ``"auto"`` uses the in-house branch and bound on small
        feasibility programs and HiGHS otherwise.
    max_binaries : int
        Above this size the uniform per-period split is tried first; if it
        fails, the full program is solved with HiGHS.
    time_limit : float, optional
        Seconds allowed for the smoothed program; the best certificate found
        within the limit is returned.

    Returns
    -------
    MembershipResult
    """
    T = int(T)
    b = check_staffing(b, net.m)
    n_bin = T * (net.m + net.k)
    if n_bin > max_binaries:
        cert = _per_period_heuristic(net, T, b, method)
        if cert is not None:
            return _finish(net, T, b, MembershipResult(True, cert, method="per-period"))
        log.info("per-period split infeasible; solving the full certificate program")
        cert, res = _solve_certificate(net, T, b, smooth, "highs", n_bin, time_limit=time_limit)
    else:
        cert, res = _solve_certificate(net, T, b, smooth, method, max_binaries, time_limit=time_limit)
    if cert is None:
        return MembershipResult(False, message=NOT_IN_B_MESSAGE, method=res.method, nodes=res.nodes)
    out = MembershipResult(True, cert, method=res.method, nodes=res.nodes)
    if smooth and T > 1:
        out.objective = float(res.objective)
    return _finish(net, T, b, out)


def _finish(net, T, b, result):
    problems = check_certificate(net, T, b, result.certificate.y, result.certificate.witnesses)
    if problems:
        raise RuntimeError("certificate failed independent verification: " + "; ".join(problems))
    return result


def smoothness(y):
    """Sum over pools of the largest period-to-period change in ``y``."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] < 2:
        return 0.0
    return float(np.abs(np.diff(y, axis=0)).max(axis=0).sum())


def support(b, eps_staff=TOL.staff):
    return frozenset(int(h) for h in np.nonzero(np.asarray(b) > eps_staff)[0])


@dataclass
class SetBReport:
    """Empirical check of support dependence, monotonicity and convexity."""

    verdicts: list
    violations: list = field(default_factory=list)
    checked: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.violations


def set_b_properties(net, T, samples, rng=None, max_pairs=200, method="auto"):
    """Validate structural properties of the correctable set on ``samples``.

    Checks that (i) vectors with equal support receive equal verdicts,
    (ii) members stay members when any subset of staffed pools is closed,
    and (iii) midpoints of two members are members. Each violation is
    recorded with its counterexample.
    """
    rng = np.random.default_rng(rng)
    samples = [check_staffing(b, net.m) for b in samples]
    verdicts = [membership_in_b(net, T, b, method=method).in_b for b in samples]
    report = SetBReport(verdicts)
    counts = {"same_support": 0, "subset": 0, "midpoint": 0}

    by_support = {}
    for b, ok in zip(samples, verdicts):
        by_support.setdefault(support(b), []).append((b, ok))
    for supp, group in by_support.items():
        for (b0, v0), (b1, v1) in itertools.combinations(group, 2):
            counts["same_support"] += 1
            if v0 != v1:
                report.violations.append(("same_support", b0.tolist(), b1.tolist()))

    for b, ok in zip(samples, verdicts):
        if not ok:
            continue
        supp = sorted(support(b))
        subsets = [s for r in range(len(supp)) for s in itertools.combinations(supp, r)]
        if len(subsets) > 16:
            subsets = [subsets[i] for i in rng.choice(len(subsets), 16, replace=False)]
        for sub in subsets:
            b_sub = np.zeros(net.m)
            idx = list(sub)
            b_sub[idx] = rng.uniform(0.1, 10.0, size=len(idx))
            counts["subset"] += 1
            if not membership_in_b(net, T, b_sub, method=method).in_b:
                report.violations.append(("subset", b.tolist(), b_sub.tolist()))

    members = [b for b, ok in zip(samples, verdicts) if ok]
    pairs = list(itertools.combinations(range(len(members)), 2))
    if len(pairs) > max_pairs:
        pairs = [pairs[i] for i in rng.choice(len(pairs), max_pairs, replace=False)]
    for a, c in pairs:
        mid = 0.5 * (members[a] + members[c])
        counts["midpoint"] += 1
        if not membership_in_b(net, T, mid, method=method).in_b:
            report.violations.append(("midpoint", members[a].tolist(), members[c].tolist()))
    report.checked = counts
    return report
