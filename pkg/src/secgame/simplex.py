"""Dense two-phase tableau simplex with Bland's rule.

Solves::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                x >= 0

Matrices here are tiny (tens of rows), so a dense tableau is plenty and
Bland's rule rules out cycling on the degenerate LPs matrix games produce.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError

# pivot elements below PIVOT_EPS are treated as zero; tiny pivots wreck accuracy
PIVOT_EPS = 1e-9
COST_EPS = 1e-11


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    iterations: int


class Infeasible(SolverError):
    pass


class Unbounded(SolverError):
    pass


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]
    basis[row] = col


def _ratio_row(T, basis, col):
    m = T.shape[0] - 1
    best, leave = None, None
    for r in range(m):
        if col[r] > PIVOT_EPS:
            ratio = T[r, -1] / col[r]
            # ties go to the smallest basic variable index (Bland)
            if best is None or ratio < best - COST_EPS or (
                    abs(ratio - best) <= COST_EPS and basis[r] < basis[leave]):
                best, leave = ratio, r
    return leave


def _run(T, basis, allowed, max_iter, bounded=False):
    """Iterate on tableau T (last row = reduced costs, last col = rhs).

    ``bounded`` says the objective is known to be bounded below (phase 1),
    so a column with no pivot row is round-off, not a ray.
    """
    m = T.shape[0] - 1
    for it in range(max_iter):
        cost = T[-1, :-1]
        tol = COST_EPS * max(1.0, np.abs(cost).max(initial=0.0))
        for entering in (j for j in allowed if cost[j] < -tol):
            col = T[:m, entering]
            leave = _ratio_row(T, basis, col)
            if leave is not None:
                break
            if not bounded and col.max(initial=0.0) <= 0.0:
                raise Unbounded(f"LP unbounded along column {entering}")
            # only numerically-zero pivots available: treat the column as priced out
        else:
            return it
        _pivot(T, basis, leave, entering)
    raise SolverError(f"simplex did not terminate within {max_iter} pivots")


def _refactor(A, b, c, basis):
    """Fresh tableau for ``basis`` computed from the original data."""
    m = A.shape[0]
    T = np.zeros((m + 1, A.shape[1] + 1))
    B = A[:, basis]
    T[:m, :-1] = np.linalg.solve(B, A)
    T[:m, -1] = np.linalg.solve(B, b)
    T[-1, :-1] = c - c[basis] @ T[:m, :-1]
    T[-1, -1] = -c[basis] @ T[:m, -1]
    return T


def _dual_run(T, basis, feas_eps, max_iter):
    """Dual simplex: restore primal feasibility while keeping reduced costs >= 0."""
    m = T.shape[0] - 1
    for it in range(max_iter):
        bad = [r for r in range(m) if T[r, -1] < -feas_eps]
        if not bad:
            return it
        leave = min(bad, key=lambda r: basis[r])
        row = T[leave, :-1]
        cand = [j for j in range(row.size) if row[j] < -PIVOT_EPS]
        if not cand:
            raise Infeasible("LP infeasible")
        cost = np.maximum(T[-1, :-1], 0.0)
        entering = min(cand, key=lambda j: (cost[j] / -row[j], j))
        _pivot(T, basis, leave, entering)
    raise SolverError(f"dual simplex did not terminate within {max_iter} pivots")


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, max_iter=None) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    rows, senses, rhs = [], [], []
    for A, b, sense in ((A_ub, b_ub, "<="), (A_eq, b_eq, "==")):
        if A is None:
            continue
        A = np.atleast_2d(np.asarray(A, dtype=float))
        for a_row, b_val in zip(A, np.asarray(b, dtype=float).ravel()):
            if b_val < 0:
                a_row, b_val = -a_row, -b_val
                sense_i = {"<=": ">=", "==": "=="}[sense]
            else:
                sense_i = sense
            rows.append(a_row)
            senses.append(sense_i)
            rhs.append(b_val)
    m = len(rows)
    n_slack = sum(1 for s in senses if s != "==")
    n_art = sum(1 for s in senses if s != "<=")
    width = n + n_slack + n_art
    T = np.zeros((m + 1, width + 1))
    basis = [0] * m
    si, ai = n, n + n_slack
    art_cols = []
    for r, (a_row, sense, b_val) in enumerate(zip(rows, senses, rhs)):
        T[r, :n] = a_row
        T[r, -1] = b_val
        if sense == "<=":
            T[r, si] = 1.0
            basis[r] = si
            si += 1
        else:
            if sense == ">=":
                T[r, si] = -1.0
                si += 1
            T[r, ai] = 1.0
            basis[r] = ai
            art_cols.append(ai)
            ai += 1
    if max_iter is None:
        max_iter = 50 * (m + width) + 100
    # original system in the structural + slack columns, kept for polishing
    A0, b0 = T[:m, :n + n_slack].copy(), T[:m, -1].copy()
    keep = list(range(m))

    iters = 0
    if art_cols:
        # phase 1: minimise the sum of artificials
        T[-1, :] = 0.0
        for j in art_cols:
            T[-1, j] = 1.0
        for r in range(m):
            if basis[r] in art_cols:
                T[-1] -= T[r]
        iters += _run(T, basis, range(width), max_iter, bounded=True)
        if -T[-1, -1] > 1e-9 * max(1.0, np.abs(T[:m, -1]).max(initial=0.0)):
            raise Infeasible("LP infeasible")
        art = set(art_cols)
        keep = []
        for r in range(m):
            if basis[r] in art:
                j = next((j for j in range(n + n_slack) if abs(T[r, j]) > 1e-9), None)
                if j is None:
                    continue  # redundant equality row
                _pivot(T, basis, r, j)
            keep.append(r)
        T = np.vstack([T[keep][:, list(range(n + n_slack)) + [width]], np.zeros((1, n + n_slack + 1))])
        basis = [basis[r] for r in keep]
        m = len(keep)
        width = n + n_slack

    T[-1, :] = 0.0
    T[-1, :n] = c
    for r in range(m):
        if T[-1, basis[r]] != 0.0:
            T[-1] -= T[-1, basis[r]] * T[r]
    iters += _run(T, basis, range(width), max_iter)

    # the dense tableau accumulates round-off; rebuild it from the original
    # data at the final basis and repair any primal infeasibility that shows
    A, b = A0[keep], b0[keep]
    c_full = np.zeros(width)
    c_full[:n] = c
    feas_eps = 1e-12 * max(1.0, np.abs(b).max(initial=0.0))
    for _ in range(5):
        try:
            T = _refactor(A, b, c_full, basis)
        except np.linalg.LinAlgError:
            break
        if T[:m, -1].min(initial=0.0) >= -feas_eps and T[-1, :-1].min() >= -COST_EPS:
            break
        iters += _dual_run(T, basis, feas_eps, max_iter)
        iters += _run(T, basis, range(width), max_iter)

    x = np.zeros(width)
    for r in range(m):
        x[basis[r]] = max(T[r, -1], 0.0)
    x = x[:n]
    return LPResult(x=x, objective=float(c @ x), iterations=iters)
