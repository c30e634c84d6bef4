import dataclasses

import pytest
from hypothesis import given, settings

from secgame import (
    AclRule, AttackAction, AttackOption, DefenseAction, GameGraph, GameState, NetworkNode,
    NodeConfig, NodeStateLevel, Scenario, ScenarioError, generate_states, reachable_frontier,
)
from secgame.errors import GraphCycleError
from secgame.model import WILDCARD, ExtraTransition
from secgame.states import _defenses_for, score_attack

from strategies import scenarios

USER = NodeStateLevel.REMOTE_ACCESS


def chain(n, loss=10.0, defended=True):
    """N0 -> N1 -> ... with one attack per node and one defense."""
    ids = [f"N{i}" for i in range(n)]
    nodes = tuple(NetworkNode(i, i, 1.0, i, i, is_entrance=(k == 0)) for k, i in enumerate(ids))
    edges = tuple(zip(ids, ids[1:]))
    acl = (AclRule(WILDCARD, ids[-1]),) + tuple(AclRule(a, b) for a, b in edges)
    attacks = (AttackAction("x", "exploit", "intrusion", loss_c=loss, success_prob=0.5),)
    defenses = (DefenseAction("d", "patch", "passive", recovery=4.0),
                DefenseAction("none", "none", "noop"))
    configs = {i: NodeConfig(i, (AttackOption("x", USER),), ("d",) if defended else ())
               for i in ids[1:]}
    return Scenario(nodes, edges, acl, attacks, defenses, configs)


def closure_states(s, start):
    """Oracle: every level vector reachable by any qualifying attack sequence."""
    levels0 = {n.id: NodeStateLevel.NO_PRIVILEGE for n in s.nodes}
    levels0.update({n: USER for n in start})
    seen = {tuple(sorted(levels0.items()))}
    todo = [levels0]
    while todo:
        lv = todo.pop()
        for n, level in lv.items():
            if level < USER:
                continue
            for m in [n] + s.neighbors(n):
                for opt in s.config(m).attacks:
                    if opt.effect > lv[m]:
                        nxt = dict(lv, **{m: opt.effect})
                        key = tuple(sorted(nxt.items()))
                        if key not in seen:
                            seen.add(key)
                            todo.append(nxt)
    return seen


# -- case study ------------------------------------------------------------

def test_case_study_s0(case_graph):
    s0 = case_graph.state("S0")
    assert {a for a, _ in s0.attacker_actions} == {"a1", "a2", "a3", "a4"}
    assert set(s0.defender_actions) == {"d1", "d5"}
    assert case_graph.initial_state == "S0"


def test_case_study_s2(case_graph):
    s2 = case_graph.state("S2")
    assert s2.focus == ("ServerB",)
    assert {a for a, _ in s2.attacker_actions} == {"a7", "a8"}
    assert set(s2.defender_actions) == {"d3", "d5"}


def test_case_study_frontier_s0(case_study, case_graph):
    rows = reachable_frontier(case_study, case_graph, case_graph.state("S0"))
    assert {("a1", "ClientB"), ("a4", "ClientB"), ("a3", "ClientB")} <= rows
    assert ("a2", "ClientA") in rows
    # ServerB is only reachable from ClientB onwards
    assert not any(t == "ServerB" for _, t in rows)


def test_frontier_rejects_foreign_state(case_study, case_graph):
    with pytest.raises(KeyError):
        reachable_frontier(case_study, case_graph, GameState("S99", {}))


def test_frontier_fully_compromised(case_study):
    top = {n.id: NodeStateLevel.DATA_LEAK for n in case_study.nodes}
    state = GameState("S", top, focus=("ClientA", "ClientB", "ServerB"))
    assert reachable_frontier(case_study, None, state) == set()


def test_frontier_all_egress_denied(case_study):
    s = dataclasses.replace(case_study, acl_rules=())
    levels = {n.id: NodeStateLevel.NO_PRIVILEGE for n in s.nodes}
    levels["ServerB"] = NodeStateLevel.ROOT  # nothing left to raise on the focus itself
    state = GameState("S", levels, focus=("ServerB",))
    assert reachable_frontier(s, None, state) == set()


# -- small hand-checkable graphs ---------------------------------------------

def test_isolated_entrance_single_terminal_state():
    s = chain(1)
    g = generate_states(s)
    assert g.state_ids == ["S0"]
    assert g.state("S0").is_terminal
    assert g.transitions == {}


def test_two_node_chain():
    s = chain(2)
    g = generate_states(s)
    assert len(g.states) == len(closure_states(s, ["N0"])) == 2
    families = {(k, row) for (k, row, _) in g.transitions}
    assert families == {("S0", ("x", "N1"))}
    # one transition per defender column, success probability as the default
    assert g.transitions[("S0", ("x", "N1"), "d")] == (("S1", 0.5),)
    assert g.transitions[("S0", ("x", "N1"), "none")] == (("S1", 0.5),)
    assert g.state("S1").node_levels["N1"] == USER


@pytest.mark.parametrize("n", [2, 3, 5])
def test_chain_matches_enumeration(n):
    s = chain(n)
    g = generate_states(s)
    assert len(g.states) == len(closure_states(s, ["N0"])) == n
    assert {tuple(sorted(st.node_levels.items())) for st in g.states} == closure_states(s, ["N0"])


def test_transition_prob_override():
    s = dataclasses.replace(chain(2), transition_probs={("x", "d"): 0.1})
    g = generate_states(s)
    assert g.transitions[("S0", ("x", "N1"), "d")] == (("S1", 0.1),)
    assert g.transitions[("S0", ("x", "N1"), "none")] == (("S1", 0.5),)


def test_no_entrance_error():
    s = chain(2)
    s = dataclasses.replace(s, nodes=tuple(dataclasses.replace(n, is_entrance=False)
                                           for n in s.nodes))
    with pytest.raises(ScenarioError):
        generate_states(s)


def test_non_entrance_compromised_rejected():
    with pytest.raises(ScenarioError):
        generate_states(chain(3), {"N1"})
    g = generate_states(chain(3), {"N1"}, allow_non_entrance=True)
    assert g.state("S0").node_levels["N1"] == USER


def test_greedy_tie_breaks_on_smallest_id():
    s = chain(2)
    twin = AttackAction("w", "exploit", "intrusion", loss_c=10.0, success_prob=0.5)
    first = AttackAction("b", "exploit", "intrusion", loss_c=10.0, success_prob=0.5)
    root = NodeStateLevel.ROOT
    s = dataclasses.replace(
        s, attack_catalog=s.attack_catalog + (twin, first),
        node_configs={"N1": NodeConfig("N1", (AttackOption("w", root), AttackOption("x", USER),
                                              AttackOption("b", root)), ("d",))})
    g = generate_states(s)
    assert g.state("S1").node_levels["N1"] == root
    # the row for "b" (smallest id among the maximisers) is the one that transitions
    assert ("S0", ("b", "N1"), "d") in g.transitions


def test_extra_transition_makes_cycle():
    s = dataclasses.replace(chain(2), extra_transitions=(
        ExtraTransition("S1", "x", "N1", "none", "S0", 0.3),))
    with pytest.raises(ScenarioError):
        generate_states(s)  # S1 has no row x@N1
    s = dataclasses.replace(chain(2), extra_transitions=(
        ExtraTransition("S0", "x", "N1", "none", "S0", 0.3),))
    g = generate_states(s)
    assert not g.is_acyclic()
    with pytest.raises(GraphCycleError):
        g.leaves_first()
    s = dataclasses.replace(chain(2), extra_transitions=(
        ExtraTransition("S0", "x", "N1", "none", "S0", 0.9),))
    with pytest.raises(ScenarioError):
        generate_states(s)  # 0.5 + 0.9 > 1


# -- properties --------------------------------------------------------------

def _safe_generate(s):
    try:
        return generate_states(dataclasses.replace(s, extra_transitions=()))
    except ScenarioError:
        return None


@settings(max_examples=150)
@given(scenarios())
def test_generated_graphs_are_acyclic_and_bounded(s):
    g = _safe_generate(s)
    if g is None:
        return
    g.leaves_first()
    assert len(g.states) <= 1 + len(s.nodes)
    focus = [n for st in g.states[1:] for n in st.focus]
    assert len(focus) == len(set(focus))  # each node expanded at most once
    for (k, _, _), outs in g.transitions.items():
        for to, _ in outs:
            before, after = g.state(k).node_levels, g.state(to).node_levels
            assert all(after[n] >= before[n] for n in before)
            assert any(after[n] > before[n] for n in before)


@settings(max_examples=100)
@given(scenarios())
def test_generation_is_deterministic(s):
    g1, g2 = _safe_generate(s), _safe_generate(s)
    if g1 is None:
        return
    assert g1 == g2


@settings(max_examples=150)
@given(scenarios())
def test_greedy_argmax(s):
    g = _safe_generate(s)
    if g is None:
        return
    for child_id, parent_id in g.parents.items():
        child, parent = g.state(child_id), g.state(parent_id)
        (node,) = child.focus
        level = parent.node_levels[node]
        options = [o for o in s.config(node).attacks if o.effect > level]
        defenses = _defenses_for(s, [(o.attack, node) for o in options])
        scores = {o.attack: score_attack(s, o.attack, node, defenses) for o in options}
        chosen = [o for o in options if o.effect == child.node_levels[node]]
        assert any(scores[o.attack] >= max(scores.values()) - 1e-12 for o in chosen)


def test_case_study_greedy_choices(case_study, case_graph):
    # S1 takes ClientB with a1 (20 beats a4's -6); S2 takes ServerB
    assert case_graph.state("S1").focus == ("ClientB",)
    assert case_graph.state("S1").node_levels["ClientB"] == USER
    assert case_graph.state("S2").node_levels["ServerB"] == NodeStateLevel.ROOT
    assert score_attack(case_study, "a1", "ClientB", ("d1", "d5")) == 60.0
    assert score_attack(case_study, "a4", "ClientB", ("d1", "d5")) == -6.0


def test_graph_helpers(case_graph):
    assert case_graph.successors("S0") == {"S1"}
    assert case_graph.is_acyclic()
    order = case_graph.leaves_first()
    assert order.index("S2") < order.index("S1") < order.index("S0")
    with pytest.raises(KeyError):
        case_graph.state("S42")
    assert isinstance(case_graph, GameGraph)
