"""Second-stage allocation, fluid and SAA staffing problems, and the KKT check.

Costs: ``net.c`` is per period; the horizon cost of capacity is ``c * T``.
All LPs are assembled block-wise in sparse form; scenario ``z`` and period
``t`` index the block ``s = z * T + t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from ._validation import as_scenarios, check_demand_paths, check_profile, check_staffing
from .config import TOL
from .optkernel import LinearProgram, solve_lp


@dataclass
class StaffingSolution:
    """Staffing ``b`` with per-scenario, per-period allocations and duals.

    ``x`` has shape ``(Z, T, k)``, ``y`` ``(Z, T, m)`` and ``z`` ``(Z, T, n)``;
    for a fluid solve ``Z == 1``. ``staffing_cost`` is ``c.b * T`` and
    ``abandonment_cost`` the weighted mean of ``sum_t p.(D_t - R x_t)``.
    """

    b: np.ndarray
    x: np.ndarray
    y: Optional[np.ndarray]
    z: Optional[np.ndarray]
    objective: float
    staffing_cost: float
    abandonment_cost: float
    T: int
    tie_break: str = "none"
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        d = {
            "b": self.b.tolist(),
            "objective": self.objective,
            "staffing_cost": self.staffing_cost,
            "abandonment_cost": self.abandonment_cost,
            "T": self.T,
            "cost_convention": "per-period c; staffing cost = c.b * T",
            "tie_break": self.tie_break,
        }
        if self.y is not None:
            d["duals"] = {"y": self.y.tolist(), "z": self.z.tolist()}
        return d


def _block_lp(net, demands, weights, T, fixed_b=None):
    """LP over ``(b, x_1..x_S)`` for ``S`` stacked period blocks.

    ``demands`` is ``(S, n)``; ``weights`` gives each block's objective
    weight. When ``fixed_b`` is given, ``b`` is dropped from the
    variables and moved to the right-hand side.
    """
    S = demands.shape[0]
    m, n = net.m, net.n
    I_S = sp.identity(S, format="csr")
    Ax = sp.kron(I_S, sp.csr_matrix(net.A), format="csr")
    Rx = sp.kron(I_S, sp.csr_matrix(net.R), format="csr")
    gain = net.R.T @ net.p
    cx = -np.kron(weights, gain)
    if fixed_b is None:
        Ab = -sp.kron(np.ones((S, 1)), sp.identity(m), format="csr")
        A_ub = sp.vstack([sp.hstack([Ab, Ax]), sp.hstack([sp.csr_matrix((S * n, m)), Rx])], format="csr")
        b_ub = np.concatenate([np.zeros(S * m), demands.ravel()])
        c = np.concatenate([net.c * T, cx])
    else:
        A_ub = sp.vstack([Ax, Rx], format="csr")
        b_ub = np.concatenate([np.tile(fixed_b, S), demands.ravel()])
        c = cx
    return LinearProgram(c, A_ub, b_ub)


def _unpack(net, sol, S, with_b):
    m, n, k = net.m, net.n, net.k
    off = m if with_b else 0
    b = sol.x[:m] if with_b else None
    x = sol.x[off:].reshape(S, k)
    y = sol.duals_ub[: S * m].reshape(S, m)
    z = sol.duals_ub[S * m :].reshape(S, n)
    return b, x, y, z


def second_stage(net, b, demand_path, method="highs"):
    """Optimal recourse for fixed staffing.

    Returns ``(value, x, y, z)`` where ``value = sum_t p.(D_t - R x_t)``,
    ``x`` is ``(T, k)`` and ``y``/``z`` are the capacity and demand duals.
    """
    b = check_staffing(b, net.m)
    D = check_profile(demand_path, net.n)
    T = D.shape[0]
    lp = _block_lp(net, D, np.ones(T), T, fixed_b=b)
    sol = solve_lp(lp, method=method)
    _, x, y, z = _unpack(net, sol, T, with_b=False)
    x = np.maximum(x, 0.0)
    value = float(np.sum(D @ net.p) - np.sum(x @ (net.R.T @ net.p)))
    return max(value, 0.0), x, y, z


def recourse_values(net, b, paths, chunk=2000):
    """``pi(b, D^(z))`` for every path in ``paths`` of shape ``(Z, T, n)``.

    Scenarios are solved in stacked chunks; the blocks are independent so
    each chunk is one separable LP.
    """
    b = check_staffing(b, net.m)
    paths = check_demand_paths(paths)
    Z, T, n = paths.shape
    out = np.empty(Z)
    gain = net.R.T @ net.p
    per = max(1, chunk // max(T, 1))
    for start in range(0, Z, per):
        block = paths[start : start + per]
        S = block.shape[0] * T
        lp = _block_lp(net, block.reshape(S, n), np.ones(S), T, fixed_b=b)
        sol = solve_lp(lp)
        x = np.maximum(sol.x.reshape(block.shape[0], T, net.k), 0.0)
        served = np.einsum("ztk,k->z", x, gain)
        out[start : start + block.shape[0]] = np.maximum(np.einsum("ztn,n->z", block, net.p) - served, 0.0)
    return out


def expected_cost(net, b, ds):
    """``c.b T + E[pi(b, D)]`` under the scenario weights of ``ds``."""
    ds = as_scenarios(ds, net.n)
    b = check_staffing(b, net.m)
    vals = recourse_values(net, b, ds.paths)
    return float(net.c @ b * ds.T + ds.weights @ vals)


def _secondary_objective(tie_break, m):
    if tie_break in (None, "none"):
        return None
    if tie_break == "min-norm":
        return np.ones(m)
    if tie_break == "max-norm":
        return -np.ones(m)
    if callable(tie_break):
        return np.asarray(tie_break(m), dtype=float)
    raise ValueError(f"unknown tie-break {tie_break!r}")


def _optimise_on_face(lp, sol, sec, m, method):
    """Minimise ``sec . b`` over the optimal face of ``lp``.

    The face is cut out by complementary slackness with the dual of
    ``sol``: rows with a positive multiplier become equalities and
    variables with a positive reduced cost are fixed at zero. Falls back
    to an objective-level constraint if numerical noise empties the face.
    """
    c2 = np.zeros(lp.n_vars)
    c2[:m] = sec
    scale = 1.0 + float(np.max(np.abs(lp.c), initial=0.0))
    tight = sol.duals_ub > 1e-9 * scale
    fixed = sol.reduced_costs > 1e-9 * scale
    ub = lp.ub.copy()
    ub[fixed] = 0.0
    A = lp.A_ub
    face = LinearProgram(c2, A[~tight], lp.b_ub[~tight], A[tight], lp.b_ub[tight], lp.lb, ub)
    sol2 = solve_lp(face, method=method)
    if sol2.optimal and lp.c @ sol2.x <= sol.objective + 1e-9 * (1.0 + abs(sol.objective)):
        return sol2
    slack = 1e-10 * (1.0 + abs(sol.objective))
    A2 = sp.vstack([lp.A_ub, sp.csr_matrix(lp.c)], format="csr")
    b2 = np.concatenate([lp.b_ub, [sol.objective + slack]])
    sol2 = solve_lp(LinearProgram(c2, A2, b2), method=method)
    return sol2 if sol2.optimal else sol


def _solve_staffing_lp(net, paths, weights, tie_break, method):
    Z, T, n = paths.shape
    S = Z * T
    block_w = np.repeat(weights, T)
    lp = _block_lp(net, paths.reshape(S, n), block_w, T)
    sol = solve_lp(lp, method=method)
    b, x, y, z = _unpack(net, sol, S, with_b=True)
    sec = _secondary_objective(tie_break, net.m)
    if sec is not None:
        sol2 = _optimise_on_face(lp, sol, sec, net.m, method)
        b = sol2.x[: net.m]
        x = sol2.x[net.m :].reshape(S, net.k)
    b = np.maximum(b, 0.0)
    x = np.maximum(x, 0.0).reshape(Z, T, net.k)
    staffing = float(net.c @ b * T)
    served = np.einsum("ztk,k->z", x, net.R.T @ net.p)
    aband = np.einsum("ztn,n->z", paths, net.p) - served
    abandonment = float(weights @ np.maximum(aband, 0.0))
    name = tie_break if isinstance(tie_break, str) or tie_break is None else getattr(tie_break, "__name__", "custom")
    return StaffingSolution(
        b=b,
        x=x,
        y=y.reshape(Z, T, net.m),
        z=z.reshape(Z, T, net.n),
        objective=staffing + abandonment,
        staffing_cost=staffing,
        abandonment_cost=abandonment,
        T=T,
        tie_break=str(name),
    )


def solve_fluid(net, lam, tie_break="min-norm", method="highs"):
    """Minimise ``c.b T + pi(b, lam)`` for a deterministic profile ``lam``.

    ``tie_break`` picks one optimum deterministically: ``"min-norm"``
    (smallest total staffing among optima), ``"max-norm"``, ``"none"`` or a
    callable ``m -> weights`` used as a secondary linear objective on ``b``.
    """
    lam = check_profile(lam, net.n)
    return _solve_staffing_lp(net, lam[None], np.ones(1), tie_break, method)


def solve_saa(net, ds, tie_break="min-norm", method="highs"):
    """Minimise ``c.b T + sum_z w_z pi(b, D^(z))`` as one joint LP."""
    ds = as_scenarios(ds, net.n)
    return _solve_staffing_lp(net, np.asarray(ds.paths), np.asarray(ds.weights), tie_break, method)


def solve_expanded(net, expanded, method="highs"):
    """Equal-weight form: ``min_b c.b + pi(b, {D_tau}) / (Z~ T)``; returns ``(value, b)``.

    The value is per period; multiply by ``T`` to compare with
    :func:`solve_saa`.
    """
    D = expanded.demands
    tau = D.shape[0]
    lp = _block_lp(net, D, np.full(tau, 1.0 / expanded.scale), 1)
    sol = solve_lp(lp, method=method)
    value = sol.objective + float(np.sum(D @ net.p)) / expanded.scale
    return value, np.maximum(sol.x[: net.m], 0.0)


def expanded_objective(net, b, expanded):
    """``T * (c.b + pi(b, {D_tau}) / (Z~ T))`` at a fixed staffing ``b``."""
    b = check_staffing(b, net.m)
    pi = recourse_values(net, b, expanded.demands[None])[0]
    return expanded.T * (float(net.c @ b) + pi / expanded.scale)


@dataclass
class KKTReport:
    """Residuals of primal feasibility, dual feasibility and the four
    complementary-slackness identities for the fluid problem."""

    primal: float
    dual: float
    cs_capacity: float
    cs_demand: float
    cs_staffing: float
    cs_activity: float
    tol: float
    reason: str = ""

    @property
    def blocks(self):
        return {
            "primal": self.primal,
            "dual": self.dual,
            "cs_capacity": self.cs_capacity,
            "cs_demand": self.cs_demand,
            "cs_staffing": self.cs_staffing,
            "cs_activity": self.cs_activity,
        }

    @property
    def max_residual(self):
        return max(self.blocks.values())

    @property
    def passed(self):
        return self.max_residual <= self.tol

    def failed_blocks(self):
        return [k for k, v in self.blocks.items() if v > self.tol]

    def to_dict(self):
        return {**self.blocks, "max_residual": self.max_residual, "passed": self.passed, "tol": self.tol, "reason": self.reason}


def kkt_residuals(net, lam, b, x, y, z, tol=TOL.kkt):
    """Evaluate every block of the fluid KKT system at ``(b, x; y, z)``.

    ``x`` is ``(T, k)``; ``y`` ``(T, m)``; ``z`` ``(T, n)``.
    """
    lam = check_profile(lam, net.n)
    b = np.asarray(b, dtype=float)
    x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
    T = lam.shape[0]
    A, R, p = net.A, net.R, net.p
    cap = x @ A.T - b  # (T, m)
    dem = x @ R.T - lam  # (T, n)
    primal = max(
        float(np.max(-b, initial=0.0)),
        float(np.max(-x, initial=0.0)),
        float(np.max(cap, initial=0.0)),
        float(np.max(dem, initial=0.0)),
    )
    ctil = net.c * T
    red = y @ A + z @ R - R.T @ p  # (T, k)
    dual = max(
        float(np.max(y.sum(axis=0) - ctil, initial=0.0)),
        float(np.max(-red, initial=0.0)),
        float(np.max(-y, initial=0.0)),
        float(np.max(-z, initial=0.0)),
    )
    cs_capacity = float(np.max(np.abs(np.sum(y * cap, axis=1)), initial=0.0))
    cs_demand = float(np.max(np.abs(np.sum(z * dem, axis=1)), initial=0.0))
    cs_staffing = abs(float(b @ (ctil - y.sum(axis=0))))
    cs_activity = float(np.max(np.abs(np.sum(x * red, axis=1)), initial=0.0))
    return KKTReport(primal, dual, cs_capacity, cs_demand, cs_staffing, cs_activity, tol)


def verify_kkt(net, lam, candidate, tol=TOL.kkt):
    """Check a fluid :class:`StaffingSolution` against the KKT system."""
    lam = check_profile(lam, net.n)
    if candidate.y is None or candidate.z is None:
        inf = float("inf")
        return KKTReport(inf, inf, inf, inf, inf, inf, tol, reason="no certificate")
    x = candidate.x[0] if candidate.x.ndim == 3 else candidate.x
    y = candidate.y[0] if candidate.y.ndim == 3 else candidate.y
    z = candidate.z[0] if candidate.z.ndim == 3 else candidate.z
    if x.shape != (lam.shape[0], net.k) or y.shape != (lam.shape[0], net.m) or z.shape != (lam.shape[0], net.n):
        raise ValueError("candidate dimensions do not match the network and profile")
    return kkt_residuals(net, lam, candidate.b, x, y, z, tol)

