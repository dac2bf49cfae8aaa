"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Used as an independent backend to cross-check HiGHS on small instances.
"""

import numpy as np

from ..config import TOL
from .lp import LPError, LPSolution

_PIVOT_EPS = 1e-11


def _pivot(tab, basis, row, col):
    tab[row] /= tab[row, col]
    piv = tab[row]
    colvals = tab[:, col].copy()
    colvals[row] = 0.0
    nz = np.nonzero(colvals)[0]
    if nz.size:
        tab[nz] -= np.outer(colvals[nz], piv)
    basis[row] = col


def _run(tab, basis, allowed, max_iter):
    """Minimise the objective stored in the last row of ``tab`` (reduced costs)."""
    nrow = tab.shape[0] - 1
    for _ in range(max_iter):
        rc = tab[-1, :-1]
        cand = np.nonzero((rc < -1e-10) & allowed)[0]
        if cand.size == 0:
            return "optimal"
        col = int(cand[0])
        colvals = tab[:nrow, col]
        pos = colvals > _PIVOT_EPS
        if not np.any(pos):
            return "unbounded"
        ratios = np.full(nrow, np.inf)
        ratios[pos] = tab[:nrow, -1][pos] / colvals[pos]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + 1e-12 * (1.0 + abs(best)))[0]
        row = int(ties[np.argmin(basis[ties])])
        _pivot(tab, basis, row, col)
    raise LPError("simplex iteration limit reached")


def simplex_solve(lp, tol=TOL, max_iter=50_000):
    A_ub, A_eq = lp.dense()
    nv = lp.n_vars
    lb, ub = lp.lb, lp.ub
    free = ~np.isfinite(lb)
    shift = np.where(free, 0.0, lb)

    # columns: x' (nv), x^- for free vars, then slacks, then artificials
    neg_idx = np.nonzero(free)[0]
    def expand(M):
        return np.hstack([M, -M[:, neg_idx]]) if neg_idx.size else M

    ub_rows_idx = np.nonzero(np.isfinite(ub))[0]
    bound_rows = np.zeros((ub_rows_idx.size, nv))
    bound_rows[np.arange(ub_rows_idx.size), ub_rows_idx] = 1.0
    G = np.vstack([A_ub, bound_rows]) if ub_rows_idx.size else A_ub
    h = np.concatenate([lp.b_ub, ub[ub_rows_idx]]) if ub_rows_idx.size else lp.b_ub.copy()
    h = h - G @ shift
    beq = lp.b_eq - A_eq @ shift

    G, Aeq = expand(G), expand(A_eq)
    ncore = G.shape[1]
    n_ub, n_eq = G.shape[0], Aeq.shape[0]
    nrow = n_ub + n_eq

    M = np.zeros((nrow, ncore + n_ub))
    M[:n_ub, :ncore] = G
    M[:n_ub, ncore:] = np.eye(n_ub)
    M[n_ub:, :ncore] = Aeq
    rhs = np.concatenate([h, beq])
    sign = np.where(rhs < 0, -1.0, 1.0)
    M *= sign[:, None]
    rhs = rhs * sign

    # slack can serve as initial basic variable only if its coefficient is +1
    need_art = np.ones(nrow, dtype=bool)
    need_art[:n_ub] = sign[:n_ub] < 0
    art_rows = np.nonzero(need_art)[0]
    n_art = art_rows.size
    ncols = M.shape[1] + n_art
    tab = np.zeros((nrow + 1, ncols + 1))
    tab[:nrow, : M.shape[1]] = M
    tab[art_rows, M.shape[1] + np.arange(n_art)] = 1.0
    tab[:nrow, -1] = rhs
    basis = np.empty(nrow, dtype=int)
    slack_rows = np.nonzero(~need_art)[0]
    basis[slack_rows] = ncore + slack_rows
    basis[art_rows] = M.shape[1] + np.arange(n_art)

    is_art = np.zeros(ncols, dtype=bool)
    is_art[M.shape[1]:] = True

    if n_art:
        tab[-1, :] = 0.0
        tab[-1, :ncols][is_art] = 1.0
        tab[-1] -= tab[art_rows].sum(axis=0)
        status = _run(tab, basis, np.ones(ncols, dtype=bool), max_iter)
        if status != "optimal":
            raise LPError("phase one did not terminate at an optimum")
        if -tab[-1, -1] > max(tol.feas, 1e-9 * (1.0 + np.abs(rhs).max(initial=0.0))):
            return LPSolution("infeasible", message="phase one objective positive", method="simplex")
        # drive artificials out of the basis; drop redundant rows
        keep = np.ones(nrow, dtype=bool)
        for r in range(nrow):
            if is_art[basis[r]]:
                cand = np.nonzero((np.abs(tab[r, :-1]) > 1e-9) & ~is_art)[0]
                if cand.size:
                    _pivot(tab, basis, r, int(cand[0]))
                else:
                    keep[r] = False
        if not keep.all():
            tab = np.vstack([tab[:nrow][keep], tab[-1:]])
            basis = basis[keep]
            nrow = basis.size
        tab = np.delete(tab, np.nonzero(is_art)[0], axis=1)
        ncols -= n_art

    cost = np.zeros(ncols)
    cvec = lp.c.copy()
    cost[:nv] = cvec
    if neg_idx.size:
        cost[nv:ncore] = -cvec[neg_idx]
    tab[-1, :-1] = cost
    tab[-1, -1] = 0.0
    for r in range(nrow):
        cb = cost[basis[r]]
        if cb != 0.0:
            tab[-1] -= cb * tab[r]
    status = _run(tab, basis, np.ones(ncols, dtype=bool), max_iter)
    if status == "unbounded":
        return LPSolution("unbounded", method="simplex")

    z = np.zeros(ncols)
    z[basis] = tab[:nrow, -1]
    x = z[:nv].copy()
    if neg_idx.size:
        x[neg_idx] -= z[nv:ncore]
    x = x + shift

    # duals from the final basis of the phase-two standard form
    full_rows = np.nonzero(keep)[0] if n_art else np.arange(n_ub + n_eq)
    Mstd = M[full_rows]
    B = Mstd[:, basis]
    pi = np.linalg.solve(B.T, cost[basis])
    pi_full = np.zeros(n_ub + n_eq)
    pi_full[full_rows] = pi
    pi_full *= sign
    y = np.maximum(-pi_full[: lp.b_ub.size], 0.0)
    mu = pi_full[n_ub:]
    return LPSolution("optimal", x, float(lp.c @ x), y, mu, method="simplex")
