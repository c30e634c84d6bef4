"""Sweep counts of Shapley iteration on random games versus the contraction bound.

For each discount, solves random games with Gauss-Seidel and Jacobi sweeps
and prints the mean and worst sweep count next to the a-priori bound.
"""

import argparse

import numpy as np

from secgame import GameParams, shapley_iterate
from secgame.solver import sweep_bound
from secgame.synthetic import random_transient_game


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--games", type=int, default=100)
    p.add_argument("--states", type=int, default=10)
    p.add_argument("--delta", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    print(f"{'beta':>5} {'sweep':>6} {'mean':>7} {'worst':>6} {'bound':>6}")
    for beta in (0.5, 0.8, 0.9, 0.95, 0.99):
        params = GameParams(discount=beta, convergence_delta=args.delta)
        for jacobi in (False, True):
            rng = np.random.default_rng(args.seed)
            counts, bounds = [], []
            for _ in range(args.games):
                g, engine = random_transient_game(rng, args.states, stop_prob=0.0)
                e = shapley_iterate(g, engine, params, jacobi=jacobi)
                counts.append(e.iterations)
                bounds.append(sweep_bound(args.delta, e.residual_history[0], beta))
            name = "jacobi" if jacobi else "gs"
            print(f"{beta:5.2f} {name:>6} {np.mean(counts):7.1f} {max(counts):6d} {max(bounds):6d}")


if __name__ == "__main__":
    main()
