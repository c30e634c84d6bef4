"""Greedy generation of the game-state graph from a network scenario.

Starting from the compromised entrance nodes, nodes are expanded in
breadth-first order. For every ACL-reachable neighbour not yet taken, the
attack with the highest immediate utility is chosen and the state it leads
to is materialised. Every node is expanded at most once, so the graph stays
linear in the number of nodes and is acyclic by construction. Attacks that
were not chosen are still priced as matrix rows; they just have no
successor state unless they land on the same node levels as one that was
materialised.
"""

from __future__ import annotations

import graphlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

from .errors import GraphCycleError, ScenarioError
from .model import NodeStateLevel, Scenario, validate_scenario
from .utility import RowLabel, pair_breakdown

TransitionKey = tuple[str, RowLabel, str]  # (state id, (attack, target), defense)


@dataclass(frozen=True)
class GameState:
    id: str
    node_levels: Mapping[str, NodeStateLevel]
    focus: tuple[str, ...] = ()  # nodes whose compromise created this state
    attacker_actions: tuple[RowLabel, ...] = ()
    defender_actions: tuple[str, ...] = ()
    is_terminal: bool = True

    def levels_key(self) -> tuple:
        return tuple(sorted((k, int(v)) for k, v in self.node_levels.items()))


@dataclass(frozen=True)
class GameGraph:
    states: tuple[GameState, ...]
    transitions: Mapping[TransitionKey, tuple[tuple[str, float], ...]]
    initial_state: str
    parents: Mapping[str, str] = field(default_factory=dict)

    def state(self, state_id: str) -> GameState:
        for st in self.states:
            if st.id == state_id:
                return st
        raise KeyError(f"unknown state {state_id!r}")

    @property
    def state_ids(self) -> list[str]:
        return [st.id for st in self.states]

    def successors(self, state_id: str) -> set[str]:
        return {to for (k, _, _), outs in self.transitions.items() if k == state_id
                for to, p in outs if p > 0}

    def leaves_first(self) -> list[str]:
        """State ids ordered so every successor precedes its predecessors."""
        ts = graphlib.TopologicalSorter({k: self.successors(k) for k in self.state_ids})
        try:
            return list(ts.static_order())
        except graphlib.CycleError as exc:
            raise GraphCycleError(f"state graph has a cycle through {exc.args[1]}") from None

    def is_acyclic(self) -> bool:
        try:
            self.leaves_first()
        except GraphCycleError:
            return False
        return True


def _raises(level: NodeStateLevel, effect: NodeStateLevel) -> bool:
    return effect > level


def reachable_frontier(s: Scenario, g: Optional[GameGraph], state: GameState) -> set[RowLabel]:
    """(node, attack) pairs the attacker can play from ``state``.

    Targets are the state's focus nodes themselves (privilege escalation)
    plus their ACL-permitted neighbours. An attack qualifies when it would
    raise the target's level, or when it is a no-privilege disruption
    attack (e.g. DoS) against a node not yet compromised.
    Returned as (attack id, node id) pairs to match matrix row labels.
    """
    if g is not None and state not in g.states:
        raise KeyError(f"state {state.id} does not belong to the graph")
    targets: list[str] = []
    for n in state.focus:
        targets.append(n)
        targets.extend(s.neighbors(n))
    out = set()
    for n in targets:
        level = state.node_levels[n]
        for opt in s.config(n).attacks:
            if _raises(level, opt.effect) or (
                    opt.effect == NodeStateLevel.NO_PRIVILEGE
                    and level == NodeStateLevel.NO_PRIVILEGE and n not in state.focus):
                out.add((opt.attack, n))
    return out


def _defenses_for(s: Scenario, rows: Iterable[RowLabel]) -> tuple[str, ...]:
    wanted = set()
    for _, n in rows:
        wanted.update(s.config(n).defenses)
    wanted.add(s.noop.id)
    # catalog order, noop last
    ordered = [d.id for d in s.defense_catalog if d.id in wanted and not d.is_noop]
    return tuple(ordered) + (s.noop.id,)


def score_attack(s: Scenario, attack_id: str, target: str, defenses: Iterable[str]) -> float:
    """Greedy score: the best immediate utility over the defenses on offer."""
    return max(pair_breakdown(s, attack_id, target, d).immediate for d in defenses)


def _normalise_compromised(s: Scenario, compromised, allow_non_entrance: bool):
    if not compromised:
        compromised = s.entrance_nodes
        if not compromised:
            raise ScenarioError("no compromised nodes given and the scenario has no entrance node")
    if isinstance(compromised, Mapping):
        levels = {n: NodeStateLevel(v) if not isinstance(v, str) else NodeStateLevel.from_label(v)
                  for n, v in compromised.items()}
    else:
        levels = {n: NodeStateLevel.REMOTE_ACCESS for n in compromised}
    for n in levels:
        node = s.node(n)
        if not node.is_entrance and not allow_non_entrance:
            raise ScenarioError(f"compromised node {n} is not an entrance node")
    return levels


def generate_states(s: Scenario,
                    compromised: Union[Iterable[str], Mapping[str, object], None] = None,
                    *, allow_non_entrance: bool = False) -> GameGraph:
    """Build the game-state graph.

    ``compromised`` is a set of node ids (taken at remote-access level) or a
    mapping node id -> level. Empty or None means every entrance node.
    """
    violations = validate_scenario(s)
    if violations:
        raise ScenarioError(f"scenario invalid: {violations[0]}", violations)
    start = _normalise_compromised(s, compromised, allow_non_entrance)

    levels0 = {n.id: NodeStateLevel.NO_PRIVILEGE for n in s.nodes}
    levels0.update(start)
    raw_states = [{"levels": levels0, "focus": tuple(sorted(start))}]
    parents: dict[int, int] = {}
    queue = [(n, 0) for n in sorted(start)]
    expanded = set(start)

    # breadth-first: N_i popped in the order it was taken
    qi = 0
    while qi < len(queue):
        ni, si = queue[qi]
        qi += 1
        parent_levels = raw_states[si]["levels"]
        for nj in s.neighbors(ni):
            if nj in expanded:
                continue
            level = parent_levels[nj]
            options = [o for o in s.config(nj).attacks if _raises(level, o.effect)]
            if not options:
                continue
            defenses = _defenses_for(s, [(o.attack, nj) for o in options])
            scored = [(-score_attack(s, o.attack, nj, defenses), o.attack, o) for o in options]
            _, _, best = min(scored, key=lambda t: (t[0], t[1]))
            levels = dict(parent_levels)
            levels[nj] = best.effect
            raw_states.append({"levels": levels, "focus": (nj,)})
            parents[len(raw_states) - 1] = si
            expanded.add(nj)
            queue.append((nj, len(raw_states) - 1))

    ids = [f"S{i}" for i in range(len(raw_states))]
    children: dict[int, list[int]] = {}
    for c, p in parents.items():
        children.setdefault(p, []).append(c)

    states, transitions = [], {}
    for i, raw in enumerate(raw_states):
        proto = GameState(ids[i], raw["levels"], raw["focus"])
        rows = tuple(sorted(reachable_frontier(s, None, proto)))
        cols = _defenses_for(s, rows) if rows else (s.noop.id,)
        has_successor = False
        for a, n in rows:
            opt = s.config(n).option(a)
            after = dict(raw["levels"])
            after[n] = max(after[n], opt.effect)
            match = [c for c in children.get(i, ()) if raw_states[c]["levels"] == after]
            if not match:
                continue
            has_successor = True
            for d in cols:
                transitions[(ids[i], (a, n), d)] = ((ids[match[0]], s.transition_prob(a, d)),)
        states.append(GameState(ids[i], raw["levels"], raw["focus"], rows, cols,
                                is_terminal=not has_successor))

    for t in s.extra_transitions:
        if t.state not in ids or t.to not in ids:
            raise ScenarioError(f"extra transition {t.state} -> {t.to} names an unknown state")
        key = (t.state, (t.attack, t.target), t.defense)
        st = states[ids.index(t.state)]
        if (t.attack, t.target) not in st.attacker_actions or t.defense not in st.defender_actions:
            raise ScenarioError(f"extra transition from {t.state} uses a move not available there")
        transitions[key] = transitions.get(key, ()) + ((t.to, t.prob),)
        if sum(p for _, p in transitions[key]) > 1 + 1e-12:
            raise ScenarioError(f"transition probabilities out of {t.state} under "
                                f"({t.attack}@{t.target}, {t.defense}) exceed 1")
        if st.is_terminal:
            states[ids.index(t.state)] = GameState(st.id, st.node_levels, st.focus,
                                                   st.attacker_actions, st.defender_actions,
                                                   is_terminal=False)

    return GameGraph(tuple(states), transitions, ids[0],
                     {ids[c]: ids[p] for c, p in parents.items()})
