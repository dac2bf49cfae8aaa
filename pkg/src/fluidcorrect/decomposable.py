"""Quantile staffing on decomposable networks.

A network whose class/pool graph splits into components can be staffed one
component at a time. Components with a single class reduce, after dropping
pools that are never the cheapest, to a newsvendor whose solution is a
quantile of the pooled per-period demand. One pool shared by two classes
is a two-customer newsvendor solved from its first-order condition. Every
other component goes through the general correction pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_scenarios
from .correction import NONEXISTENT, construct_universal_lambda, run_algorithm1
from .demand import DemandDataError, EmpiricalMixtureCDF
from .network import decompose

CASE1 = "case1-single-single"
CASE2 = "case2-many-single"
SHARED_POOL = "single-server-multi-customer"
GENERAL = "general"


@dataclass
class ComponentRule:
    """How one component is staffed.

    Pool and class indices refer to the parent network. ``pools`` are the
    pools kept after dominance pruning; ``pruned_pools`` are staffed at 0.
    """

    component: object
    kind: str
    pools: tuple
    pruned_pools: tuple = ()

    @property
    def classes(self):
        return self.component.classes


def classify_component(comp):
    """Label a component and drop dominated pools of single-class components.

    A class served by several pools keeps only the pool with the smallest
    effective cost ``c_h A_{hj}`` (lowest pool index on ties).
    """
    net = comp.parent
    pools, classes = comp.pools, comp.classes
    if len(classes) == 1:
        if len(pools) == 1:
            return ComponentRule(comp, CASE1, pools)
        acts = np.asarray(comp.activities)
        eff = net.c[net.pool_of[acts]] * net.consumption[acts]
        best = eff.min()
        keep = min(int(net.pool_of[j]) for j, e in zip(acts, eff) if e <= best)
        return ComponentRule(comp, CASE2, (keep,), tuple(h for h in pools if h != keep))
    if len(pools) == 1 and len(classes) == 2:
        return ComponentRule(comp, SHARED_POOL, pools)
    return ComponentRule(comp, GENERAL, pools)


def quantile_level(c, a, p):
    """Critical ratio ``1 - c a / p`` (zero or negative means do not staff)."""
    return 1.0 - c * a / p if p > 0 else -np.inf


@dataclass
class QuantileResult:
    """Staffing ``b`` of one pool and the constant rate ``q`` of its class."""

    pool: int
    cls: int
    activity: int
    b: float
    q: float
    level: float


def case1_quantile(rule, ds):
    """Newsvendor quantile for a single-class component.

    ``ds`` covers the parent network's classes. The per-period cost
    ``c_h`` is used, so the level is ``1 - c_h A_hj / p_i``.
    """
    if not hasattr(rule, "kind"):
        rule = classify_component(rule)
    if rule.kind not in (CASE1, CASE2):
        raise ValueError(f"component of kind {rule.kind!r} has no single-class quantile rule")
    net = rule.component.parent
    ds = as_scenarios(ds, net.n)
    (h,) = rule.pools
    (i,) = rule.classes
    acts = [j for j in net.activities_of_pool(h) if net.class_of[j] == i]
    # several parallel activities on one pool: the lightest consumption dominates
    j = int(min(acts, key=lambda a: (net.A[h, a], a)))
    a = float(net.A[h, j])
    level = quantile_level(net.c[h], a, net.p[i])
    if level <= 0:
        return QuantileResult(h, i, j, 0.0, 0.0, level)
    q = EmpiricalMixtureCDF.from_scenarios(ds, i).quantile(level)
    return QuantileResult(h, i, j, a * q, q, level)


def per_class_quantiles(rule, ds):
    """Separate newsvendor quantile of every class on the rule's single pool."""
    net = rule.component.parent
    (h,) = rule.pools
    out = []
    for i in rule.classes:
        acts = [j for j in net.activities_of_pool(h) if net.class_of[j] == i]
        j = int(min(acts, key=lambda a: (net.A[h, a], a)))
        a = float(net.A[h, j])
        level = quantile_level(net.c[h], a, net.p[i])
        q = EmpiricalMixtureCDF.from_scenarios(ds, i).quantile(level) if level > 0 else 0.0
        out.append(QuantileResult(h, i, j, a * q, q, level))
    return out


def _pooled(ds, i):
    if ds.Z * ds.T == 0:
        raise DemandDataError("empty demand data")
    if np.allclose(ds.weights, ds.weights[0], rtol=0, atol=1e-15):
        return ds.paths[:, :, i].ravel()
    from .demand import rational_weights

    return np.repeat(ds.paths[:, :, i], rational_weights(ds.weights), axis=0).ravel()


def _marginal_value(Q, p1, p2, c, s1, s2, paired, sorted2=None):
    """Right derivative of the expected penalty saved at ``Q``, minus the cost.

    Using the right derivative makes the smallest ``Q`` with a nonpositive
    value an optimum even when ``Q`` sits on an atom of the data.
    """
    first = p1 * np.mean(s1 > Q)
    if paired:
        second = p2 * np.mean((s1 <= Q) & (s1 + s2 > Q))
    else:
        x = s1[s1 <= Q]
        tail = 1.0 - np.searchsorted(sorted2, Q - x, side="right") / sorted2.size
        second = p2 * tail.sum() / s1.size
    return first + second - c


def two_customer_newsvendor(p1, p2, c, samples1, samples2, paired=False, tol=1e-10, max_iter=200):
    """Capacity of one pool serving two customer types, the first with priority.

    Solves ``c = p1 (1 - F1(Q)) + p2 E[1{D1 < Q} (1 - F2(Q - D1))]`` by
    bisection, with empirical distributions built from the samples.

    Parameters
    ----------
    p1, p2 : float
        Penalties, ``p1 >= p2 >= 0``; customer 1 is served first.
    c : float
        Cost per unit of capacity, ``c > 0``.
    samples1, samples2 : array_like
        Demand observations of each customer.
    paired : bool
        If False the two demands are treated as independent and every pair
        of observations is combined. If True, ``samples1[k]`` and
        ``samples2[k]`` are one joint observation; the root then coincides
        with the sample-average optimum and is snapped onto it.

    Returns
    -------
    float
    """
    s1 = np.asarray(samples1, dtype=float).ravel()
    s2 = np.asarray(samples2, dtype=float).ravel()
    if s1.size < 2 or s2.size < 2:
        raise DemandDataError("need at least two samples per customer")
    if paired and s1.size != s2.size:
        raise DemandDataError("paired samples must have equal length")
    if not p1 >= p2 >= 0 or not c > 0:
        raise ValueError("require p1 >= p2 >= 0 and c > 0")
    sorted2 = np.sort(s2)

    def g(Q):
        return _marginal_value(Q, p1, p2, c, s1, s2, paired, sorted2)

    if g(0.0) <= 0:
        return 0.0
    lo, hi = 0.0, float(s1.max() + s2.max())
    for _ in range(max_iter):
        if hi - lo <= tol * (1.0 + hi):
            break
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    if paired:
        # the marginal value only jumps at observed D1 or D1 + D2
        cand = np.unique(np.concatenate([s1, s1 + s2]))
        cand = cand[(cand >= lo - 1e-9 * (1 + hi)) & (cand <= hi + 1e-9 * (1 + hi))]
        for q in cand:
            if g(q) <= 0:
                return float(q)
    return hi


def two_customer_newsvendor_cdf(p1, p2, c, cdf1, pdf1, cdf2, upper, tol=1e-10):
    """Same condition with analytic marginals (``upper`` bounds the support of ``D1 + D2``)."""
    from scipy.integrate import quad

    def g(Q):
        inner, _ = quad(lambda x: (1.0 - cdf2(Q - x)) * pdf1(x), 0.0, Q, limit=200) if Q > 0 else (0.0, 0.0)
        return p1 * (1.0 - cdf1(Q)) + p2 * inner - c

    if g(0.0) <= 0:
        return 0.0
    lo, hi = 0.0, float(upper)
    while hi - lo > tol * (1.0 + hi):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def shared_pool_newsvendor(rule, ds):
    """Two classes on one pool, the class with the higher penalty per unit of capacity first.

    Returns ``(b_h, lam, order)``: ``lam`` puts the whole capacity on the
    priority class as a constant rate and ``order`` is ``(first, second)``.
    """
    net = rule.component.parent
    (h,) = rule.pools
    acts = sorted(net.activities_of_pool(h), key=lambda j: (-net.p[net.class_of[j]] / net.A[h, j], j))
    if len({int(net.class_of[j]) for j in acts}) != 2 or len(acts) != 2:
        raise ValueError("shared-pool rule needs exactly one activity per class")
    j1, j2 = acts
    i1, i2 = int(net.class_of[j1]), int(net.class_of[j2])
    a1, a2 = net.A[h, j1], net.A[h, j2]
    s1 = a1 * _pooled(ds, i1)
    s2 = a2 * _pooled(ds, i2)
    Q = two_customer_newsvendor(net.p[i1] / a1, net.p[i2] / a2, net.c[h], s1, s2, paired=True)
    b = np.zeros(net.m)
    b[h] = Q
    lam, _ = construct_universal_lambda(net, b, ds.T)
    return Q, lam, (i1, i2)


@dataclass
class HybridResult:
    """Full-network staffing assembled component by component."""

    b: np.ndarray
    lam: np.ndarray
    components: list
    flagged: list = field(default_factory=list)

    def to_dict(self):
        return {
            "b": self.b.tolist(),
            "lambda": self.lam.tolist(),
            "components": self.components,
            "flagged": self.flagged,
        }


def hybrid_solve(net, ds, smooth=False, time_limit=None):
    """Quantile rules where they apply, the general pipeline elsewhere.

    Returns
    -------
    HybridResult
        ``b`` over all pools, ``lam`` of shape ``(T, n)`` and one record per
        component with its ``kind`` and ``method``. Components of kind
        ``general`` without a corrected profile are listed in ``flagged``;
        their ``b`` is still the sample-average optimum and their rate is 0.
    """
    ds = as_scenarios(ds, net.n)
    b = np.zeros(net.m)
    lam = np.zeros((ds.T, net.n))
    records, flagged = [], []
    for comp in decompose(net):
        rule = classify_component(comp)
        rec = {
            "pools": list(comp.pools),
            "classes": list(comp.classes),
            "kind": rule.kind,
            "pruned_pools": list(rule.pruned_pools),
        }
        if rule.kind in (CASE1, CASE2):
            res = case1_quantile(rule, ds)
            b[res.pool] = res.b
            lam[:, res.cls] = res.q
            rec.update(method="quantile", level=float(res.level), activity=res.activity)
        elif rule.kind == SHARED_POOL:
            Q, lam_full, order = shared_pool_newsvendor(rule, ds)
            b[rule.pools[0]] = Q
            lam[:, list(comp.classes)] = lam_full[:, list(comp.classes)]
            rec.update(method="two-customer-newsvendor", priority=list(order))
        else:
            sub = comp.subnetwork()
            out = run_algorithm1(sub, ds.restrict(classes=comp.classes), smooth=smooth, time_limit=time_limit)
            b[list(comp.pools)] = out.b_star
            if out.lam is not None:
                lam[:, list(comp.classes)] = out.lam
            rec.update(method="correction", outcome=out.outcome)
            if out.check is not None:
                rec["check_passed"] = out.check.passed
            if out.outcome == NONEXISTENT:
                flagged.append(list(comp.pools))
        records.append(rec)
    return HybridResult(b, lam, records, flagged)
