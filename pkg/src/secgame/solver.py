"""Zero-sum matrix games and stochastic-game value iteration.

The attacker is the row (maximising) player throughout.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConvergenceError, GraphCycleError, SolverError
from .model import GameParams
from .simplex import linprog

logger = logging.getLogger(__name__)

STRATEGY_MODES = ("lp-vertex", "uniform-support")
ORACLE_MAX_DIM = 8


@dataclass
class MatrixGameSolution:
    value: float
    row_strategy: np.ndarray
    col_strategy: np.ndarray
    method: str


@dataclass
class EquilibriumResult:
    values: dict[str, float]
    strategies: dict[str, tuple[np.ndarray, np.ndarray]]
    iterations: int
    converged: bool
    residual: float
    residual_history: list[float] = field(default_factory=list)
    method: str = "shapley"
    matrices: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RiskAssessment:
    value: float
    safe: bool
    initial_state: str

    @property
    def verdict(self) -> str:
        return "safe" if self.safe else "not safe"


def _as_array(m) -> np.ndarray:
    arr = np.asarray(getattr(m, "entries", m), dtype=float)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"payoff matrix must be 2-D and nonempty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("payoff matrix has non-finite entries")
    return arr


def best_response_gaps(M, x, y, value) -> tuple[float, float]:
    """How far each side could gain by deviating to a pure strategy.

    Returns (max_i (M y)_i - value, value - min_j (x M)_j); both are <= tol
    at an equilibrium.
    """
    M = np.asarray(M, dtype=float)
    return float((M @ y).max() - value), float(value - (x @ M).min())


def is_equilibrium(M, sol: MatrixGameSolution, tol: float) -> bool:
    gap_row, gap_col = best_response_gaps(M, sol.row_strategy, sol.col_strategy, sol.value)
    ok_simplex = all(np.all(p >= -tol) and abs(p.sum() - 1) <= tol
                     for p in (sol.row_strategy, sol.col_strategy))
    return ok_simplex and gap_row <= tol and gap_col <= tol


def _clean(p: np.ndarray) -> np.ndarray:
    p = np.where(p < 0, 0.0, p)
    return p / p.sum()


def solve_matrix_game(m, tol: float = 1e-9) -> MatrixGameSolution:
    """Minimax value and optimal mixed strategies of a zero-sum matrix game."""
    M = _as_array(m)
    rows, cols = M.shape
    row_min, col_max = M.min(axis=1), M.max(axis=0)
    i, j = int(row_min.argmax()), int(col_max.argmin())
    if col_max[j] - row_min[i] <= tol:
        x, y = np.zeros(rows), np.zeros(cols)
        x[i] = y[j] = 1.0
        return MatrixGameSolution(float(M[i, j]), x, y, "saddle-point")

    # shift so every entry is >= 1; the game value is then >= 1 too
    shift = 1.0 - M.min()
    P = M + shift
    # attacker: min sum(u) s.t. P^T u >= 1;  defender: max sum(w) s.t. P w <= 1
    att = linprog(np.ones(rows), A_ub=-P.T, b_ub=-np.ones(cols))
    dfn = linprog(-np.ones(cols), A_ub=P, b_ub=np.ones(rows))
    su, sw = att.x.sum(), dfn.x.sum()
    if su <= 0 or sw <= 0:
        raise SolverError(f"degenerate LP solution (sum u = {su}, sum w = {sw})")
    if abs(1.0 / su - 1.0 / sw) > 1e-7 * max(1.0, 1.0 / su):
        raise SolverError(f"primal/dual values disagree: {1 / su} vs {1 / sw}")
    value = 0.5 * (1.0 / su + 1.0 / sw) - shift
    return MatrixGameSolution(float(value), _clean(att.x), _clean(dfn.x), "lp")


def solve_oracle(m, tol: float = 1e-9) -> MatrixGameSolution:
    """Support enumeration over square supports.

    Every zero-sum matrix game has an extreme optimal pair supported on a
    square nonsingular submatrix, so square supports are enough.
    """
    M = _as_array(m)
    rows, cols = M.shape
    if max(rows, cols) > ORACLE_MAX_DIM:
        raise ValueError(f"oracle limited to {ORACLE_MAX_DIM}x{ORACLE_MAX_DIM}, got {rows}x{cols}")
    scale = max(1.0, np.abs(M).max())
    eps = 1e-9 * scale
    for k in range(1, min(rows, cols) + 1):
        for I in itertools.combinations(range(rows), k):
            for J in itertools.combinations(range(cols), k):
                sub = M[np.ix_(I, J)]
                # [sub^T  -1] [x]   [0]      [sub  -1] [y]   [0]
                # [1^T     0] [v] = [1]      [1^T   0] [v] = [1]
                A_x = np.zeros((k + 1, k + 1))
                A_x[:k, :k], A_x[:k, k], A_x[k, :k] = sub.T, -1.0, 1.0
                A_y = np.zeros((k + 1, k + 1))
                A_y[:k, :k], A_y[:k, k], A_y[k, :k] = sub, -1.0, 1.0
                rhs = np.zeros(k + 1)
                rhs[k] = 1.0
                try:
                    sx = np.linalg.solve(A_x, rhs)
                    sy = np.linalg.solve(A_y, rhs)
                except np.linalg.LinAlgError:
                    continue
                if np.any(sx[:k] < -eps / scale) or np.any(sy[:k] < -eps / scale):
                    continue
                x, y = np.zeros(rows), np.zeros(cols)
                x[list(I)], y[list(J)] = sx[:k], sy[:k]
                v = float(sx[k])
                if (M @ y).max() <= v + eps and (x @ M).min() >= v - eps:
                    return MatrixGameSolution(v, _clean(x), _clean(y), "oracle")
    raise SolverError("support enumeration found no equilibrium")


def _max_coordinate(M, value, idx, player, eps):
    """Largest weight strategy ``idx`` can carry in any optimal strategy."""
    rows, cols = M.shape
    if player == "row":
        n = rows
        A_ub, b_ub = -M.T, -(value - eps) * np.ones(cols)
    else:
        n = cols
        A_ub, b_ub = M, (value + eps) * np.ones(rows)
    c = np.zeros(n)
    c[idx] = -1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=np.ones((1, n)), b_eq=[1.0])
    return res.x


def uniform_support(m, sol: MatrixGameSolution, tol: float = 1e-9) -> MatrixGameSolution:
    """Re-express an equilibrium on the full optimal supports.

    A strategy is in the optimal support if some optimal mixed strategy
    plays it. Returns the uniform distribution over each support when that
    is itself optimal, otherwise the average of the per-strategy maximisers
    (optimal by convexity, and positive on the whole support).
    """
    M = _as_array(m)
    eps = max(tol, 1e-9 * max(1.0, np.abs(M).max()))
    out = []
    for player, current in (("row", sol.row_strategy), ("col", sol.col_strategy)):
        n = len(current)
        if n == 1:
            out.append(current.copy())
            continue
        maximisers = [_max_coordinate(M, sol.value, i, player, eps) for i in range(n)]
        support = [i for i in range(n) if maximisers[i][i] > 1e-7]
        uniform = np.zeros(n)
        uniform[support] = 1.0 / len(support)
        if player == "row":
            optimal = (uniform @ M).min() >= sol.value - eps
        else:
            optimal = (M @ uniform).max() <= sol.value + eps
        if optimal:
            out.append(uniform)
        else:
            out.append(_clean(np.mean([maximisers[i] for i in support], axis=0)))
    return MatrixGameSolution(sol.value, out[0], out[1], sol.method)


def _solve_state(M, tol, mode):
    sol = solve_matrix_game(M, tol)
    if mode == "uniform-support":
        sol = uniform_support(M, sol, tol)
    elif mode != "lp-vertex":
        raise ValueError(f"unknown strategy mode {mode!r}")
    return sol


def _finalise(g, engine, values, params, mode):
    strategies, matrices = {}, {}
    for st in g.states:
        if not st.attacker_actions:
            strategies[st.id] = (np.zeros(0), np.zeros(0))
            continue
        M = engine.payoff_matrix(g, st, values, params.discount)
        sol = _solve_state(M, params.lp_tolerance, mode)
        strategies[st.id] = (sol.row_strategy, sol.col_strategy)
        matrices[st.id] = M
    return strategies, matrices


def _state_value(g, engine, st, continuation, params):
    if not st.attacker_actions:
        return 0.0
    M = engine.payoff_matrix(g, st, continuation, params.discount)
    return solve_matrix_game(M, params.lp_tolerance).value


def shapley_iterate(g, engine, params: GameParams = GameParams(), *,
                    jacobi: bool = False, strategy_mode: str = "lp-vertex",
                    initial: Optional[dict] = None) -> EquilibriumResult:
    """Value iteration: v_k <- Val(matrix of S_k built from the current v).

    Sweeps run leaves-first when the graph is acyclic, in state order
    otherwise. ``jacobi=True`` evaluates a whole sweep against the previous
    sweep's values instead of updating in place.
    """
    acyclic = g.is_acyclic()
    if params.discount >= 1.0 and not acyclic:
        raise GraphCycleError("state graph is cyclic and discount is 1.0; value iteration "
                              "needs discount < 1 to converge (set --discount below 1)")
    order = g.leaves_first() if acyclic else g.state_ids
    states = {st.id: st for st in g.states}
    v = {k: 0.0 for k in g.state_ids}
    if initial:
        v.update(initial)
    history: list[float] = []
    for sweep in range(1, params.max_sweeps + 1):
        source = dict(v) if jacobi else v
        residual = 0.0
        for k in order:
            new = _state_value(g, engine, states[k], source, params)
            residual = max(residual, abs(new - v[k]))
            v[k] = new
        history.append(residual)
        logger.debug("sweep %d residual %.3g", sweep, residual)
        if residual < params.convergence_delta:
            strategies, matrices = _finalise(g, engine, v, params, strategy_mode)
            return EquilibriumResult(dict(v), strategies, sweep, True, residual, history,
                                     "shapley", matrices)
    raise ConvergenceError(f"no convergence after {params.max_sweeps} sweeps "
                           f"(last residual {history[-1]:.3g})", history)


def backward_induct(g, engine, params: GameParams = GameParams(), *,
                    strategy_mode: str = "lp-vertex") -> EquilibriumResult:
    """Exact single pass over an acyclic graph, successors first."""
    try:
        order = g.leaves_first()
    except GraphCycleError as exc:
        raise GraphCycleError(f"{exc}; use shapley_iterate with discount < 1") from None
    states = {st.id: st for st in g.states}
    v: dict[str, float] = {}
    for k in order:
        v[k] = _state_value(g, engine, states[k], v, params)
    v = {k: v[k] for k in g.state_ids}
    strategies, matrices = _finalise(g, engine, v, params, strategy_mode)
    return EquilibriumResult(v, strategies, 1, True, 0.0, [0.0], "backward-induction", matrices)


def solve_game(g, engine, params: GameParams = GameParams(), **kw) -> EquilibriumResult:
    """Backward induction when the graph allows it, value iteration otherwise."""
    if g.is_acyclic():
        return backward_induct(g, engine, params, **kw)
    return shapley_iterate(g, engine, params, **kw)


def security_risk(e: EquilibriumResult, g) -> RiskAssessment:
    """Game value at the initial state; a value <= 0 means the attacker never profits."""
    if not e.converged:
        raise ConvergenceError("equilibrium did not converge", e.residual_history)
    value = e.values[g.initial_state]
    return RiskAssessment(value, value <= 0, g.initial_state)


def sweep_bound(delta: float, initial_residual: float, discount: float, margin: int = 5) -> int:
    """Sweeps a beta-contraction needs to get from ``initial_residual`` below ``delta``."""
    if initial_residual < delta:
        return 1 + margin
    return math.ceil(math.log10(delta / initial_residual) / math.log10(discount)) + margin
