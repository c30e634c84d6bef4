"""Attacker payoffs and per-state payoff matrices.

Immediate utility of an (attack, defense) pair on a node::

    (max(0, L - R) * V * coeff) - alpha_d * T / t_d - exposure * T / t_node

where L is the attack's loss, R the recovery in force, V the node's asset
value and T the attack time. A matrix entry adds the discounted expected
value of the successor states (the indirect benefit).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .model import AttackAction, DeceptionConfig, DefenseAction, NetworkNode, Scenario

RowLabel = tuple[str, str]  # (attack id, target node id or "~fingerprint")


def mitigated_loss(loss: float, recovery: float) -> float:
    """Loss left after recovery, never negative."""
    return max(0.0, loss - recovery)


def tracing_cost(alpha: float, attack_time: float, window: float) -> float:
    """Exposure cost alpha * T / t of an attack taking ``attack_time``."""
    if window <= 0:
        raise ValueError(f"detection window must be > 0, got {window}")
    return alpha * attack_time / window


def attack_utility(a: AttackAction, d: DefenseAction, node: NetworkNode,
                   success_coeff: float, *, standing_recovery: float = 0.0,
                   exposure: float = 0.0) -> float:
    """Immediate attacker payoff of ``a`` against ``d`` on ``node``.

    A noop defense contributes neither recovery nor tracing. ``standing_recovery``
    and ``exposure`` belong to the node and apply whatever ``d`` is.
    """
    recovery = standing_recovery
    trace = tracing_cost(exposure, a.attack_time, node.detection_window) if exposure else 0.0
    if not d.is_noop:
        recovery += d.recovery
        trace += tracing_cost(d.tracing_alpha, a.attack_time, d.detection_window)
    return mitigated_loss(a.loss, recovery) * node.asset_value * success_coeff - trace


def deception_expected_payoff(payoffs: Sequence[tuple[str, float]],
                              config: DeceptionConfig, observed: str) -> float:
    """Expected attacker payoff over devices that all present ``observed``.

    Each true fingerprint f is hit with probability phi[f, observed] / N.
    Several payoffs for the same f are averaged first.
    """
    weights = config.weights(observed)
    by_fp: dict[str, list[float]] = {}
    for f, u in payoffs:
        by_fp.setdefault(f, []).append(u)
    missing = [f for f in weights if f not in by_fp]
    if missing:
        raise ValueError(f"no payoff given for fingerprint(s) {missing} under {observed!r}")
    return sum(w * (sum(by_fp[f]) / len(by_fp[f])) for f, w in weights.items())


@dataclass(frozen=True)
class UtilityBreakdown:
    loss: float
    recovery: float
    asset_coeff: float
    tracing_cost: float
    immediate: float
    indirect: float = 0.0
    discount: float = 1.0

    @property
    def total(self) -> float:
        return self.immediate + self.discount * self.indirect


@dataclass(frozen=True, eq=False)
class PayoffMatrix:
    """Attacker payoffs for one state: rows are attacker moves, cols defender moves."""

    state: str
    rows: tuple[RowLabel, ...]
    cols: tuple[str, ...]
    entries: np.ndarray
    immediate: Optional[np.ndarray] = None
    indirect: Optional[np.ndarray] = None
    discount: float = 1.0
    raw: Optional["PayoffMatrix"] = None  # pre-fold matrix when rows were folded

    @property
    def shape(self):
        return self.entries.shape

    @property
    def defender_entries(self) -> np.ndarray:
        return -self.entries

    def row_names(self) -> list[str]:
        """Short row names: the attack id, qualified only when ambiguous."""
        counts: dict[str, int] = {}
        for a, _ in self.rows:
            counts[a] = counts.get(a, 0) + 1
        return [a if counts[a] == 1 else f"{a}@{t}" for a, t in self.rows]


def pair_breakdown(s: Scenario, attack_id: str, target: str, defense_id: str) -> UtilityBreakdown:
    """Immediate utility of one matrix cell with its parts exposed."""
    a = s.attack(attack_id)
    node = s.node(target)
    cfg = s.config(target)
    opt = cfg.option(attack_id)
    if opt is None:
        raise KeyError(f"attack {attack_id} is not configured on node {target}")
    d = s.defense(defense_id)
    if not d.is_noop and not cfg.counters(opt, defense_id):
        d = s.noop
    value = attack_utility(a, d, node, opt.success_coeff,
                           standing_recovery=opt.recovery, exposure=opt.exposure)
    recovery = opt.recovery + (0.0 if d.is_noop else d.recovery)
    trace = mitigated_loss(a.loss, recovery) * node.asset_value * opt.success_coeff - value
    return UtilityBreakdown(loss=a.loss, recovery=recovery,
                            asset_coeff=node.asset_value * opt.success_coeff,
                            tracing_cost=trace, immediate=value)


def _indirect(graph, state_id, row, defense, continuation, override=None):
    if override is not None:
        return override
    total = 0.0
    for target, p in graph.transitions.get((state_id, row, defense), ()):
        if target not in continuation:
            raise KeyError(f"no continuation value for successor {target} of {state_id}")
        total += p * continuation[target]
    return total


def assemble(state_id: str, rows, cols, immediate: np.ndarray, graph,
             continuation: Mapping[str, float], discount: float,
             overrides: Optional[Mapping] = None) -> PayoffMatrix:
    """Entry (i, j) = immediate[i, j] + discount * sum_l p(l | i, j) * continuation[l]."""
    overrides = overrides or {}
    indirect = np.zeros_like(immediate, dtype=float)
    for i, row in enumerate(rows):
        for j, d in enumerate(cols):
            key = (state_id, row[0], row[1], d)
            indirect[i, j] = _indirect(graph, state_id, row, d, continuation, overrides.get(key))
    entries = immediate + discount * indirect
    if not np.all(np.isfinite(entries)):
        raise ArithmeticError(f"non-finite payoff in state {state_id}")
    return PayoffMatrix(state_id, tuple(rows), tuple(cols), entries,
                        immediate=immediate, indirect=indirect, discount=discount)


def fold_deception(s: Scenario, m: PayoffMatrix) -> PayoffMatrix:
    """Collapse rows whose targets the attacker cannot tell apart.

    Rows sharing an attack and an observed fingerprint listed in the
    deception config are replaced by their expected-payoff row.
    """
    active = s.deception.observed_fingerprints
    groups: dict[RowLabel, list[int]] = {}
    for i, (a, target) in enumerate(m.rows):
        obs = s.node(target).observed_fingerprint
        key = (a, "~" + obs) if obs in active else (a, target)
        groups.setdefault(key, []).append(i)
    if all(len(ix) == 1 for ix in groups.values()):
        return m

    new_rows, blocks = [], {"entries": [], "immediate": [], "indirect": []}
    for key, ix in groups.items():
        if len(ix) == 1:
            new_rows.append(m.rows[ix[0]])
            for name in blocks:
                blocks[name].append(getattr(m, name)[ix[0]])
            continue
        new_rows.append(key)
        obs = key[1][1:]
        fps = [s.node(m.rows[i][1]).true_fingerprint for i in ix]
        # only devices present in the frontier can be hit
        sub = DeceptionConfig({(f, o): n for (f, o), n in s.deception.counts.items()
                               if o == obs and f in fps})
        for name in blocks:
            arr = getattr(m, name)
            blocks[name].append(np.array([
                deception_expected_payoff([(f, arr[i, j]) for f, i in zip(fps, ix)], sub, obs)
                for j in range(len(m.cols))]))
    return PayoffMatrix(m.state, tuple(new_rows), m.cols,
                        np.array(blocks["entries"]), immediate=np.array(blocks["immediate"]),
                        indirect=np.array(blocks["indirect"]), discount=m.discount, raw=m)


def immediate_matrix(s: Scenario, state) -> np.ndarray:
    rows, cols = state.attacker_actions, state.defender_actions
    out = np.empty((len(rows), len(cols)))
    for i, (a, target) in enumerate(rows):
        for j, d in enumerate(cols):
            out[i, j] = pair_breakdown(s, a, target, d).immediate
    return out


def build_payoff_matrix(s: Scenario, graph, state, continuation: Mapping[str, float],
                        discount: Optional[float] = None) -> PayoffMatrix:
    """Folded attacker payoff matrix of ``state`` given successor values."""
    if discount is None:
        discount = s.game_params.discount
    if not state.attacker_actions:
        raise ValueError(f"state {state.id} has no attacker actions")
    m = assemble(state.id, state.attacker_actions, state.defender_actions,
                 immediate_matrix(s, state), graph, continuation, discount,
                 s.continuation_overrides)
    return fold_deception(s, m)


class UtilityEngine:
    """Payoff-matrix source for the solvers, backed by a scenario.

    Immediate utilities do not depend on continuation values, so they are
    computed once per state and reused across value-iteration sweeps.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self._immediate: dict[str, np.ndarray] = {}

    def payoff_matrix(self, graph, state, continuation, discount=None) -> PayoffMatrix:
        s = self.scenario
        if discount is None:
            discount = s.game_params.discount
        imm = self._immediate.get(state.id)
        if imm is None:
            imm = self._immediate[state.id] = immediate_matrix(s, state)
        m = assemble(state.id, state.attacker_actions, state.defender_actions, imm,
                     graph, continuation, discount, s.continuation_overrides)
        return fold_deception(s, m)


class TabularEngine:
    """Payoff-matrix source for hand-built games with fixed immediate payoffs."""

    def __init__(self, immediate: Mapping[str, np.ndarray]):
        self.immediate = {k: np.asarray(v, dtype=float) for k, v in immediate.items()}

    def payoff_matrix(self, graph, state, continuation, discount=1.0) -> PayoffMatrix:
        return assemble(state.id, state.attacker_actions, state.defender_actions,
                        self.immediate[state.id], graph, continuation, discount)

