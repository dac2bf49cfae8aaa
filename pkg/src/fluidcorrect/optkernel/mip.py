"""Mixed-binary feasibility problems solved by LP-based branch and bound."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from ..config import MAX_BINARIES, TOL
from .lp import LinearProgram, LPError, primal_residual, solve_lp


class BinaryLimitError(ValueError):
    """The problem has more binaries than the configured limit."""


@dataclass
class MIPFeasibilityProblem:
    """Linear constraints over continuous and binary variables.

    ``binary`` is a boolean mask over the variables; binary variables get
    bounds ``[0, 1]`` regardless of ``lb``/``ub``. ``c`` is an optional
    tie-break objective (zero means pure feasibility).
    """

    n_vars: int
    binary: np.ndarray
    A_ub: Optional[object] = None
    b_ub: Optional[np.ndarray] = None
    A_eq: Optional[object] = None
    b_eq: Optional[np.ndarray] = None
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None
    c: Optional[np.ndarray] = None
    names: Optional[list] = None

    def __post_init__(self):
        self.binary = np.asarray(self.binary, dtype=bool)
        if self.binary.shape != (self.n_vars,):
            raise ValueError("binary mask must have one entry per variable")
        self.c = np.zeros(self.n_vars) if self.c is None else np.asarray(self.c, dtype=float)
        lb = np.zeros(self.n_vars) if self.lb is None else np.asarray(self.lb, dtype=float).copy()
        ub = np.full(self.n_vars, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).copy()
        lb[self.binary] = np.maximum(lb[self.binary], 0.0)
        ub[self.binary] = np.minimum(ub[self.binary], 1.0)
        self.lb, self.ub = lb, ub
        # validates shapes and finiteness
        self._relaxation = LinearProgram(self.c, self.A_ub, self.b_ub, self.A_eq, self.b_eq, self.lb, self.ub)

    @property
    def n_binaries(self):
        return int(self.binary.sum())

    @property
    def has_objective(self):
        return bool(np.any(self.c != 0))

    def relaxation(self, lb=None, ub=None):
        r = self._relaxation
        return LinearProgram(r.c, r.A_ub, r.b_ub, r.A_eq, r.b_eq, r.lb if lb is None else lb, r.ub if ub is None else ub)

    def violation(self, x):
        """Largest constraint, bound, or integrality violation at ``x``."""
        v = primal_residual(self._relaxation, x)
        xb = x[self.binary]
        if xb.size:
            v = max(v, float(np.max(np.minimum(np.abs(xb), np.abs(xb - 1.0)))))
        return v


@dataclass
class MIPResult:
    status: str  # "feasible" | "infeasible"
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    nodes: int = 0
    method: str = ""

    @property
    def feasible(self):
        return self.status == "feasible"


def _branch_and_bound(mp, tol, max_nodes):
    binidx = np.nonzero(mp.binary)[0]
    want_opt = mp.has_objective
    incumbent, best = None, np.inf
    stack = [(mp.lb.copy(), mp.ub.copy())]
    nodes = 0
    while stack:
        lb, ub = stack.pop()
        nodes += 1
        if nodes > max_nodes:
            raise LPError(f"branch and bound exceeded {max_nodes} nodes")
        sol = solve_lp(mp.relaxation(lb, ub), tol=tol, check=False)
        if sol.status == "infeasible":
            continue
        if sol.status != "optimal":
            raise LPError(f"relaxation returned {sol.status}")
        if want_opt and sol.objective >= best - tol.gap * (1.0 + abs(best)):
            continue
        xb = sol.x[binidx]
        frac = np.abs(xb - np.round(xb))
        if frac.max(initial=0.0) <= 1e-9:
            # polish: fix binaries to their rounded values and re-solve
            lb2, ub2 = lb.copy(), ub.copy()
            lb2[binidx] = ub2[binidx] = np.round(xb)
            fixed = solve_lp(mp.relaxation(lb2, ub2), tol=tol, check=False)
            if fixed.status != "optimal":
                continue
            x = fixed.x
            x[binidx] = np.round(xb)
            if not want_opt:
                return MIPResult("feasible", x, float(mp.c @ x), nodes, "bnb")
            if fixed.objective < best:
                incumbent, best = x, fixed.objective
            continue
        j = binidx[int(np.argmax(frac))]
        down = (lb.copy(), ub.copy())
        down[1][j] = 0.0
        up = (lb.copy(), ub.copy())
        up[0][j] = 1.0
        # explore the child nearer the relaxed value first
        if sol.x[j] >= 0.5:
            stack += [down, up]
        else:
            stack += [up, down]
    if incumbent is None:
        return MIPResult("infeasible", nodes=nodes, method="bnb")
    return MIPResult("feasible", incumbent, best, nodes, "bnb")


def _highs_milp(mp, tol, time_limit=None):
    cons = []
    r = mp._relaxation
    if r.b_ub.size:
        cons.append(LinearConstraint(r.A_ub, -np.inf, r.b_ub))
    if r.b_eq.size:
        cons.append(LinearConstraint(r.A_eq, r.b_eq, r.b_eq))
    res = milp(
        mp.c,
        constraints=cons,
        integrality=mp.binary.astype(int),
        bounds=Bounds(mp.lb, mp.ub),
        options={"mip_rel_gap": 1e-9, **({"time_limit": float(time_limit)} if time_limit else {})},
    )
    if res.status == 2:
        return MIPResult("infeasible", method="highs")
    if res.x is None:
        raise LPError(f"HiGHS MIP failed: {res.message}")
    x = np.asarray(res.x, dtype=float)
    x[mp.binary] = np.round(x[mp.binary])
    return MIPResult("feasible", x, float(mp.c @ x), method="highs")


def solve_mip_feasibility(mp, method="bnb", max_binaries=MAX_BINARIES, tol=TOL, max_nodes=200_000, time_limit=None):
    """Find a point satisfying every constraint of ``mp`` or prove none exists.

    With a nonzero ``mp.c`` the returned point minimises it. ``method`` is
    ``"bnb"`` (depth-first branch and bound over LP relaxations) or
    ``"highs"`` (scipy's HiGHS MIP solver). ``time_limit`` (seconds, HiGHS
    only) returns the best point found so far when an objective is present.
    """
    if mp.n_binaries > max_binaries:
        raise BinaryLimitError(
            f"{mp.n_binaries} binaries exceed the limit of {max_binaries}; "
            "use the per-period decomposition in fluidcorrect.existence"
        )
    if method == "bnb":
        res = _branch_and_bound(mp, tol, max_nodes)
    elif method == "highs":
        res = _highs_milp(mp, tol, time_limit)
    else:
        raise ValueError(f"unknown MIP method {method!r}")
    if res.feasible and mp.violation(res.x) > 1e-6:
        raise LPError(f"{res.method} returned a point violating constraints by {mp.violation(res.x):.3g}")
    return res


def enumerate_binaries(mp, tol=TOL):
    """Brute-force oracle: try every binary assignment (small problems only)."""
    binidx = np.nonzero(mp.binary)[0]
    if binidx.size > 16:
        raise BinaryLimitError("enumeration oracle limited to 16 binaries")
    best = None
    for bits in range(1 << binidx.size):
        assign = np.array([(bits >> i) & 1 for i in range(binidx.size)], dtype=float)
        lb, ub = mp.lb.copy(), mp.ub.copy()
        lb[binidx] = ub[binidx] = assign
        sol = solve_lp(mp.relaxation(lb, ub), tol=tol, check=False)
        if sol.optimal and (best is None or sol.objective < best[1]):
            best = (sol.x, sol.objective)
            if not mp.has_objective:
                break
    if best is None:
        return MIPResult("infeasible", method="enumerate")
    return MIPResult("feasible", best[0], best[1], method="enumerate")
