"""Linear programs in inequality form and the solver front end."""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from ..config import TOL


class LPError(RuntimeError):
    """Raised when a solver fails numerically (distinct from infeasibility)."""


def _as_matrix(a, ncols):
    if a is None:
        return sp.csr_matrix((0, ncols))
    if sp.issparse(a):
        return a.tocsr()
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return np.zeros((0, ncols))
    return a


@dataclass
class LinearProgram:
    """``min c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lb <= x <= ub``.

    Matrices may be dense arrays or scipy sparse matrices. ``lb`` defaults
    to zero and ``ub`` to +inf.
    """

    c: np.ndarray
    A_ub: Optional[object] = None
    b_ub: Optional[np.ndarray] = None
    A_eq: Optional[object] = None
    b_eq: Optional[np.ndarray] = None
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        nv = self.c.size
        self.A_ub = _as_matrix(self.A_ub, nv)
        self.A_eq = _as_matrix(self.A_eq, nv)
        self.b_ub = np.zeros(0) if self.b_ub is None else np.asarray(self.b_ub, dtype=float).ravel()
        self.b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, dtype=float).ravel()
        self.lb = np.zeros(nv) if self.lb is None else np.broadcast_to(np.asarray(self.lb, dtype=float), (nv,)).copy()
        self.ub = np.full(nv, np.inf) if self.ub is None else np.broadcast_to(np.asarray(self.ub, dtype=float), (nv,)).copy()
        self.validate()

    @property
    def n_vars(self):
        return self.c.size

    def validate(self):
        nv = self.n_vars
        if self.A_ub.shape != (self.b_ub.size, nv):
            raise ValueError(f"A_ub has shape {self.A_ub.shape}, expected ({self.b_ub.size}, {nv})")
        if self.A_eq.shape != (self.b_eq.size, nv):
            raise ValueError(f"A_eq has shape {self.A_eq.shape}, expected ({self.b_eq.size}, {nv})")
        for name in ("c", "b_ub", "b_eq"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} has non-finite entries")
        for name in ("A_ub", "A_eq"):
            m = getattr(self, name)
            data = m.data if sp.issparse(m) else m
            if not np.all(np.isfinite(data)):
                raise ValueError(f"{name} has non-finite entries")
        if np.any(np.isnan(self.lb)) or np.any(np.isnan(self.ub)) or np.any(self.lb > self.ub):
            raise ValueError("inconsistent variable bounds")
        if np.any(np.isinf(self.lb) & (self.lb > 0)) or np.any(np.isinf(self.ub) & (self.ub < 0)):
            raise ValueError("invalid infinite bound")

    def dense(self):
        """Return (A_ub, A_eq) as dense arrays."""
        to = lambda m: m.toarray() if sp.issparse(m) else np.asarray(m)
        return to(self.A_ub), to(self.A_eq)

    def scaled(self, alpha):
        return LinearProgram(alpha * self.c, self.A_ub, self.b_ub, self.A_eq, self.b_eq, self.lb, self.ub)

    def to_text(self, dense_limit=2_000_000):
        """Plain-text tableau dump, one constraint per line.

        Large programs are written row-wise as ``coef*x<j>`` terms instead of
        full dense rows.
        """
        fmt = lambda row: " ".join(f"{v:.12g}" for v in row)
        lines = [f"# vars {self.n_vars} ub_rows {self.b_ub.size} eq_rows {self.b_eq.size}", f"min {fmt(self.c)}"]
        if (self.b_ub.size + self.b_eq.size) * self.n_vars <= dense_limit:
            A_ub, A_eq = self.dense()
            lines += [f"{fmt(row)} <= {rhs:.12g}" for row, rhs in zip(A_ub, self.b_ub)]
            lines += [f"{fmt(row)} = {rhs:.12g}" for row, rhs in zip(A_eq, self.b_eq)]
        else:
            for M, rhs, op in ((self.A_ub, self.b_ub, "<="), (self.A_eq, self.b_eq, "=")):
                M = sp.csr_matrix(M)
                for i in range(M.shape[0]):
                    lo, hi = M.indptr[i], M.indptr[i + 1]
                    terms = " ".join(f"{v:.12g}*x{j}" for j, v in zip(M.indices[lo:hi], M.data[lo:hi]))
                    lines.append(f"{terms} {op} {rhs[i]:.12g}")
        lines.append(f"lb {fmt(self.lb)}")
        lines.append(f"ub {fmt(self.ub)}")
        return "\n".join(lines) + "\n"


_DUMP = {"dir": None, "count": 0}


@contextmanager
def dump_lps(directory):
    """Write every LP solved inside the block to ``directory/lp_<k>.txt``."""
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    prev = dict(_DUMP)
    _DUMP.update(dir=path, count=0)
    try:
        yield path
    finally:
        _DUMP.update(prev)


def _maybe_dump(lp):
    if _DUMP["dir"] is not None:
        _DUMP["count"] += 1
        (_DUMP["dir"] / f"lp_{_DUMP['count']:05d}.txt").write_text(lp.to_text())


@dataclass
class LPSolution:
    """Result of :func:`solve_lp`.

    ``duals_ub`` are nonnegative multipliers for the ``<=`` rows (the
    objective decreases by ``duals_ub[i]`` per unit increase of
    ``b_ub[i]``). ``duals_eq`` are free multipliers with the sign of
    ``d obj / d b_eq``. ``reduced_costs`` are ``c + A_ub^T y - A_eq^T mu``.
    """

    status: str
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    duals_ub: Optional[np.ndarray] = None
    duals_eq: Optional[np.ndarray] = None
    reduced_costs: Optional[np.ndarray] = None
    dual_objective: Optional[float] = None
    message: str = ""
    method: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def optimal(self):
        return self.status == "optimal"


def dual_objective(lp, y, mu, rc, rtol=1e-9):
    """Lagrangian dual value for multipliers ``y >= 0`` (ub rows) and ``mu`` (eq rows).

    Reduced costs below ``rtol * (1 + max|c|)`` in magnitude are round-off
    and treated as zero.
    """
    val = -float(lp.b_ub @ y) + float(lp.b_eq @ mu)
    eps = rtol * (1.0 + float(np.max(np.abs(lp.c), initial=0.0)))
    pos = rc > eps
    neg = rc < -eps
    with np.errstate(invalid="ignore"):
        if np.any(pos & np.isinf(lp.lb)) or np.any(neg & np.isinf(lp.ub)):
            return -np.inf
        val += float(np.sum(rc[pos] * lp.lb[pos])) + float(np.sum(rc[neg] * lp.ub[neg]))
    return val


def reduced_costs(lp, y, mu):
    return lp.c + lp.A_ub.T @ y - lp.A_eq.T @ mu


def primal_residual(lp, x):
    """Largest violation of any constraint or bound at ``x``."""
    r = [0.0]
    if lp.b_ub.size:
        r.append(float(np.max(lp.A_ub @ x - lp.b_ub)))
    if lp.b_eq.size:
        r.append(float(np.max(np.abs(lp.A_eq @ x - lp.b_eq))))
    r.append(float(np.max(lp.lb - x, initial=0.0)))
    r.append(float(np.max(x - lp.ub, initial=0.0)))
    return max(r)


def complementary_slackness_residual(lp, sol):
    """Max of |y_i * slack_i| over ub rows and |rc_j * (x_j - bound_j)| over variables."""
    x, y, rc = sol.x, sol.duals_ub, sol.reduced_costs
    res = 0.0
    if lp.b_ub.size:
        slack = lp.b_ub - lp.A_ub @ x
        res = max(res, float(np.max(np.abs(y * slack))))
    with np.errstate(invalid="ignore"):
        to_lb = np.where(np.isfinite(lp.lb), x - lp.lb, np.inf)
        to_ub = np.where(np.isfinite(lp.ub), lp.ub - x, np.inf)
    gap = np.where(rc >= 0, to_lb, to_ub)
    gap = np.where(np.abs(rc) == 0, 0.0, gap)
    if gap.size:
        res = max(res, float(np.max(np.abs(rc) * gap)))
    return res


def _solve_highs(lp):
    bounds = np.column_stack([lp.lb, lp.ub])
    bounds = [(lo if np.isfinite(lo) else None, hi if np.isfinite(hi) else None) for lo, hi in bounds]
    res = linprog(
        lp.c,
        A_ub=lp.A_ub if lp.b_ub.size else None,
        b_ub=lp.b_ub if lp.b_ub.size else None,
        A_eq=lp.A_eq if lp.b_eq.size else None,
        b_eq=lp.b_eq if lp.b_eq.size else None,
        bounds=bounds,
        method="highs",
        options={"presolve": True, "primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status == 2:
        return LPSolution("infeasible", message=res.message, method="highs")
    if res.status == 3:
        return LPSolution("unbounded", message=res.message, method="highs")
    if res.status != 0:
        raise LPError(f"HiGHS failed: {res.message}")
    y = -np.asarray(res.ineqlin.marginals) if lp.b_ub.size else np.zeros(0)
    mu = np.asarray(res.eqlin.marginals) if lp.b_eq.size else np.zeros(0)
    y = np.maximum(y, 0.0)
    x = np.asarray(res.x, dtype=float)
    return LPSolution("optimal", x, float(lp.c @ x), y, mu, method="highs")


def solve_lp(lp, method="highs", tol=TOL, check=True):
    """Solve ``lp`` and return primal values and duals.

    ``method`` is ``"highs"`` (scipy's HiGHS interface) or ``"simplex"``
    (the dense Bland's-rule implementation in this package). When
    ``check`` is true an optimal result is re-verified for primal
    feasibility and the duality gap; a failed check raises
    :class:`LPError`.
    """
    _maybe_dump(lp)
    if method == "highs":
        sol = _solve_highs(lp)
    elif method == "simplex":
        from .simplex import simplex_solve

        sol = simplex_solve(lp, tol=tol)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    if not sol.optimal:
        return sol
    sol.reduced_costs = reduced_costs(lp, sol.duals_ub, sol.duals_eq)
    sol.dual_objective = dual_objective(lp, sol.duals_ub, sol.duals_eq, sol.reduced_costs)
    if check:
        scale = 1.0 + abs(sol.objective)
        pres = primal_residual(lp, sol.x)
        if pres > max(tol.feas, 1e-9 * (1.0 + float(np.max(np.abs(lp.b_ub), initial=0.0)))) * 10:
            raise LPError(f"primal infeasibility {pres:.3g} after {sol.method} solve")
        gap = abs(sol.objective - sol.dual_objective)
        if not gap <= tol.gap * scale:
            raise LPError(f"duality gap {gap:.3g} after {sol.method} solve")
    return sol
