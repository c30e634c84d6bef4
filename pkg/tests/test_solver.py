import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secgame import (
    GameGraph, GameParams, GameState, TabularEngine, UtilityEngine, backward_induct,
    security_risk, shapley_iterate, solve_game, solve_matrix_game, solve_oracle,
    uniform_support,
)
from secgame.errors import ConvergenceError, GraphCycleError, SolverError
from secgame.simplex import Infeasible, Unbounded, linprog
from secgame.solver import best_response_gaps, is_equilibrium, sweep_bound
from secgame.synthetic import random_transient_game

from strategies import matrices

TOL = 1e-6


def _single(sid, shape, terminal=True):
    r, c = shape
    return GameState(sid, {}, (), tuple((f"r{i}", "x") for i in range(r)),
                     tuple(f"c{j}" for j in range(c)), is_terminal=terminal)


# -- matrix games ------------------------------------------------------------

@pytest.mark.parametrize("M, value, x, y", [
    ([[1, -1], [-1, 1]], 0.0, [0.5, 0.5], [0.5, 0.5]),
    ([[3, 1], [0, 2]], 1.5, [0.5, 0.5], [0.25, 0.75]),
    ([[2, 3], [1, 4]], 2.0, [1, 0], [1, 0]),
    ([[7.5]], 7.5, [1], [1]),
    ([[0, 0], [0, 0]], 0.0, None, None),
])
def test_matrix_examples(M, value, x, y):
    for solver in (solve_matrix_game, solve_oracle):
        sol = solver(M)
        assert sol.value == pytest.approx(value, abs=1e-9)
        if x is not None:
            assert np.allclose(sol.row_strategy, x)
            assert np.allclose(sol.col_strategy, y)
        assert is_equilibrium(np.array(M, float), sol, 1e-9)


def test_case_study_s0_game():
    M = np.array([[30, 70], [30, 90], [25, 25], [20, 20]], float)
    sol = solve_matrix_game(M)
    assert sol.value == pytest.approx(30, abs=TOL)
    assert np.allclose(sol.col_strategy, [1, 0])
    assert sol.row_strategy[2:].sum() < TOL
    nice = uniform_support(M, sol)
    assert np.allclose(nice.row_strategy, [0.5, 0.5, 0, 0])
    assert np.allclose(nice.col_strategy, [1, 0])


def test_bad_matrices():
    for bad in ([], [[np.nan]], [1, 2, 3], [[np.inf, 0]]):
        with pytest.raises(ValueError):
            solve_matrix_game(bad)
    with pytest.raises(ValueError):
        solve_oracle(np.zeros((9, 2)))


def test_uniform_support_barycentre_fallback():
    # rows 0 and 1 are each optimal alone but their uniform mix is too;
    # row 2 is only optimal mixed with row 0 in a 2:1 ratio
    M = np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 0.0]])
    sol = uniform_support(M, solve_matrix_game(M))
    assert np.allclose(sol.row_strategy, [0.5, 0.5, 0])
    assert is_equilibrium(M, sol, 1e-9)


@settings(max_examples=300)
@given(matrices())
def test_lp_matches_oracle(M):
    lp, oracle = solve_matrix_game(M), solve_oracle(M)
    assert abs(lp.value - oracle.value) < TOL
    assert is_equilibrium(M, lp, TOL)
    assert is_equilibrium(M, oracle, TOL)


@settings(max_examples=150)
@given(matrices(max_dim=5))
def test_uniform_support_stays_optimal(M):
    sol = uniform_support(M, solve_matrix_game(M))
    assert is_equilibrium(M, sol, 1e-6)


@given(matrices(), st.floats(0.01, 100))
def test_positive_scaling(M, c):
    sol = solve_matrix_game(M)
    scaled = solve_matrix_game(c * M)
    assert scaled.value == pytest.approx(c * sol.value, abs=1e-6 * max(1, c))
    gap_r, gap_c = best_response_gaps(c * M, sol.row_strategy, sol.col_strategy, c * sol.value)
    assert gap_r <= 1e-6 * max(1, c) and gap_c <= 1e-6 * max(1, c)


@given(matrices(), st.floats(-100, 100))
def test_shift(M, c):
    assert solve_matrix_game(M + c).value == pytest.approx(solve_matrix_game(M).value + c,
                                                          abs=1e-6)


@given(matrices())
def test_zero_sum_negation(M):
    # the defender's game is the transposed negation
    assert solve_matrix_game(-M.T).value == pytest.approx(-solve_matrix_game(M).value, abs=1e-6)


@given(matrices())
def test_minimax_equality(M):
    sol = solve_matrix_game(M)
    lower = (sol.row_strategy @ M).min()
    upper = (M @ sol.col_strategy).max()
    assert lower == pytest.approx(sol.value, abs=1e-6)
    assert upper == pytest.approx(sol.value, abs=1e-6)


# -- simplex -----------------------------------------------------------------

def test_simplex_basic():
    # max x + y  s.t. x + 2y <= 4, 3x + y <= 6
    res = linprog([-1, -1], A_ub=[[1, 2], [3, 1]], b_ub=[4, 6])
    assert res.objective == pytest.approx(-2.8)
    assert np.allclose(res.x, [1.6, 1.2])


def test_simplex_equality_and_ge():
    res = linprog([1, 2], A_ub=[[-1, -1]], b_ub=[-1], A_eq=[[1, -1]], b_eq=[0])
    assert np.allclose(res.x, [0.5, 0.5])


def test_simplex_errors():
    with pytest.raises(Infeasible):
        linprog([1], A_ub=[[1]], b_ub=[-1])
    with pytest.raises(Unbounded):
        linprog([-1], A_ub=[[-1]], b_ub=[0])


# -- stochastic games --------------------------------------------------------

def two_state_chain():
    s0, s1 = _single("S0", (1, 1), terminal=False), _single("S1", (1, 1))
    g = GameGraph((s0, s1), {("S0", ("r0", "x"), "c0"): (("S1", 1.0),)}, "S0")
    return g, TabularEngine({"S0": [[5.0]], "S1": [[10.0]]})


def test_single_zero_state():
    g = GameGraph((_single("S0", (2, 2)),), {}, "S0")
    e = shapley_iterate(g, TabularEngine({"S0": np.zeros((2, 2))}))
    assert e.values == {"S0": 0.0}
    assert e.iterations == 1 and e.converged


def test_two_state_chain():
    g, engine = two_state_chain()
    params = GameParams(discount=0.5)
    for e in (shapley_iterate(g, engine, params), backward_induct(g, engine, params),
              shapley_iterate(g, engine, params, jacobi=True)):
        assert e.values["S0"] == pytest.approx(10)
        assert e.values["S1"] == pytest.approx(10)


def test_disconnected_states():
    g = GameGraph((_single("S0", (2, 2)), _single("S1", (1, 2))), {}, "S0")
    engine = TabularEngine({"S0": [[3, 1], [0, 2]], "S1": [[4, -2]]})
    e = backward_induct(g, engine)
    assert e.values == pytest.approx({"S0": 1.5, "S1": -2})


def test_case_study_values(case_study, case_graph):
    engine = UtilityEngine(case_study)
    bi = backward_induct(case_graph, engine)
    assert bi.values["S0"] == pytest.approx(30)
    assert bi.values["S2"] == pytest.approx(400)
    assert bi.values["S1"] == pytest.approx(420)
    assert bi.values["S3"] == pytest.approx(100)
    si = shapley_iterate(case_graph, engine, case_study.game_params)
    for k in case_graph.state_ids:
        assert si.values[k] == pytest.approx(bi.values[k], abs=1e-5)
    assert solve_game(case_graph, engine).method == "backward-induction"


def test_cycle_needs_discount():
    s0 = _single("S0", (1, 1), terminal=False)
    g = GameGraph((s0,), {("S0", ("r0", "x"), "c0"): (("S0", 0.5),)}, "S0")
    engine = TabularEngine({"S0": [[3.0]]})
    with pytest.raises(GraphCycleError):
        shapley_iterate(g, engine, GameParams(discount=1.0))
    with pytest.raises(GraphCycleError):
        backward_induct(g, engine, GameParams(discount=0.5))
    e = solve_game(g, engine, GameParams(discount=0.5))
    # v = 3 + 0.5 * 0.5 * v
    assert e.values["S0"] == pytest.approx(4.0, abs=1e-5)


def test_sweep_cap():
    s0 = _single("S0", (1, 1), terminal=False)
    g = GameGraph((s0,), {("S0", ("r0", "x"), "c0"): (("S0", 1.0),)}, "S0")
    with pytest.raises(ConvergenceError) as info:
        shapley_iterate(g, TabularEngine({"S0": [[1.0]]}),
                        GameParams(discount=0.99, max_sweeps=5))
    assert len(info.value.residual_history) == 5
    assert isinstance(info.value, SolverError)


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10), st.booleans())
def test_contraction(seed, n, jacobi):
    rng = np.random.default_rng(seed)
    g, engine = random_transient_game(rng, n)
    params = GameParams(discount=0.9, convergence_delta=1e-6)
    e = shapley_iterate(g, engine, params, jacobi=jacobi)
    h = e.residual_history
    assert e.iterations <= sweep_bound(params.convergence_delta, h[0], 0.9)
    for prev, cur in zip(h[1:], h[2:]):
        assert cur <= prev + 1e-12
        assert cur <= 0.9 * prev + 1e-9


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_backward_induct_equals_shapley(seed, n):
    rng = np.random.default_rng(seed)
    g, engine = random_transient_game(rng, n, cyclic=False)
    params = GameParams(discount=float(rng.uniform(0.3, 1.0)))
    bi = backward_induct(g, engine, params)
    si = shapley_iterate(g, engine, params, jacobi=True)
    for k in g.state_ids:
        assert si.values[k] == pytest.approx(bi.values[k], abs=1e-5)
        st_ = g.state(k)
        M = engine.payoff_matrix(g, st_, bi.values, params.discount)
        assert solve_matrix_game(M).value == pytest.approx(bi.values[k], abs=1e-9)


def test_security_risk(case_graph, case_study):
    e = backward_induct(case_graph, UtilityEngine(case_study))
    risk = security_risk(e, case_graph)
    assert risk.value == pytest.approx(30) and not risk.safe
    assert risk.verdict == "not safe"

    g = GameGraph((_single("S0", (2, 2)),), {}, "S0")
    neg = backward_induct(g, TabularEngine({"S0": [[-1, -3], [-2, -5]]}))
    assert security_risk(neg, g).safe and security_risk(neg, g).value < 0
    zero = backward_induct(g, TabularEngine({"S0": np.zeros((2, 2))}))
    assert security_risk(zero, g).value == 0 and security_risk(zero, g).safe

    zero.converged = False
    with pytest.raises(ConvergenceError):
        security_risk(zero, g)


def test_sweep_bound():
    assert sweep_bound(1e-6, 1e-7, 0.9) == 6
    assert sweep_bound(1e-6, 1.0, 0.9) == math.ceil(math.log10(1e-6) / math.log10(0.9)) + 5


def test_uniform_support_mode_in_iteration(case_study, case_graph):
    e = backward_induct(case_graph, UtilityEngine(case_study), strategy_mode="uniform-support")
    x, y = e.strategies["S0"]
    assert np.allclose(x, [0.5, 0.5, 0, 0]) and np.allclose(y, [1, 0])
    with pytest.raises(ValueError):
        backward_induct(case_graph, UtilityEngine(case_study), strategy_mode="fancy")
