"""Random stochastic games with fixed immediate payoffs, for experiments and tests."""

from __future__ import annotations

import numpy as np

from .states import GameGraph, GameState
from .utility import TabularEngine


def random_transient_game(rng: np.random.Generator, n_states: int = 5, max_dim: int = 3,
                          payoff_scale: float = 10.0, stop_prob: float = 0.1,
                          cyclic: bool = True):
    """A random game over ``n_states`` states with a tabular payoff engine.

    Every (state, row, col) cell spreads at most ``1 - stop_prob`` mass over
    random successors, so play stops with positive probability each step.
    With ``cyclic=False`` successors always have a larger index.
    Returns ``(graph, engine)``.
    """
    ids = [f"S{i}" for i in range(n_states)]
    states, transitions, immediate = [], {}, {}
    for i, sid in enumerate(ids):
        r, c = rng.integers(1, max_dim + 1, size=2)
        rows = tuple((f"r{k}", "x") for k in range(r))
        cols = tuple(f"c{k}" for k in range(c))
        immediate[sid] = rng.uniform(-payoff_scale, payoff_scale, size=(r, c))
        pool = ids if cyclic else ids[i + 1:]
        for row in rows:
            for col in cols:
                if not pool:
                    continue
                k = int(rng.integers(0, min(3, len(pool)) + 1))
                if k == 0:
                    continue
                to = rng.choice(len(pool), size=k, replace=False)
                w = rng.dirichlet(np.ones(k)) * rng.uniform(0, 1 - stop_prob)
                transitions[(sid, row, col)] = tuple((pool[t], float(p)) for t, p in zip(to, w))
        terminal = not any(key[0] == sid for key in transitions)
        states.append(GameState(sid, {}, (), rows, cols, is_terminal=terminal))
    return GameGraph(tuple(states), transitions, ids[0]), TabularEngine(immediate)
