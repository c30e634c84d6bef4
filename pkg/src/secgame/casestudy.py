"""Six-node example network: two clients, two servers, a key asset and its decoy.

Numbers are calibrated so the generated S0 and S2 payoff matrices come out
as published:

* S0 (Client A taken): rows a1..a4, columns d1 / noop,
  [[30, 70], [30, 90], [25, 25], [20, 20]].
* S2 (Server B taken): a7 / a8 against Key Asset and Shadow Asset, which
  share an observed fingerprint, fold to [[400, 400], [200, 200]].

The indirect-benefit terms of S0 are pinned with continuation overrides;
the published totals cannot be rebuilt from the rest of the graph.
"""

from __future__ import annotations

from .model import (
    AclRule, AttackAction, AttackOption, DeceptionConfig, DefenseAction, GameParams,
    NetworkNode, NodeConfig, NodeStateLevel, Scenario, WILDCARD,
)

USER = NodeStateLevel.REMOTE_ACCESS
ROOT = NodeStateLevel.ROOT
NONE = NodeStateLevel.NO_PRIVILEGE

COMPROMISED = ("ClientA",)

# published S0 / S2 matrices, rows = attacker, cols = (d1 | d3, noop)
PUBLISHED_S0 = [[30, 70], [30, 90], [25, 25], [20, 20]]
PUBLISHED_S2 = [[400, 400], [200, 200]]
PUBLISHED_S2_RAW_D3 = {("a7", "KeyAsset"): 900, ("a8", "KeyAsset"): 500,
                       ("a7", "ShadowAsset"): -100, ("a8", "ShadowAsset"): -100}
PUBLISHED_S0_ATTACKER = [0.5, 0.5, 0.0, 0.0]


def builtin_case_study() -> Scenario:
    nodes = (
        NetworkNode("ClientA", "Client A", 1.0, "client-a", "client-a", is_entrance=True),
        NetworkNode("ClientB", "Client B", 1.0, "client-b", "client-b", is_entrance=True),
        NetworkNode("ServerA", "Server A", 2.0, "server-a", "server-a"),
        NetworkNode("ServerB", "Server B", 5.0, "server-b", "server-b"),
        NetworkNode("KeyAsset", "Key Asset", 10.0, "key-asset", "key-asset"),
        NetworkNode("ShadowAsset", "Shadow Asset", 0.0, "shadow", "key-asset", is_shadow=True),
    )
    # Server B is listed before Server A so it is expanded first and gets id S2
    edges = (
        ("ClientA", "ClientB"),
        ("ClientB", "ServerB"),
        ("ClientB", "ServerA"),
        ("ServerA", "ServerB"),
        ("ServerB", "KeyAsset"),
        ("ServerB", "ShadowAsset"),
    )
    acl = (
        AclRule(WILDCARD, "ServerB"),
        AclRule("ClientB", "ServerA"),
        AclRule("ClientA", "ClientB"),
        AclRule("ServerB", "KeyAsset"),
        AclRule("ServerB", "ShadowAsset"),
    )
    attacks = (
        AttackAction("a1", "weak password attack", "intrusion", loss_c=60, success_prob=0.8,
                     attack_time=1.0),
        AttackAction("a2", "CVE", "privilege-elevation", loss_i=80, success_prob=0.6,
                     attack_time=2.0, result_state=ROOT),
        AttackAction("a3", "DOS", "intrusion", loss_a=30, success_prob=0.9, attack_time=5.0,
                     result_state=NONE),
        AttackAction("a4", "CVE", "intrusion", loss_i=40, success_prob=0.5, attack_time=10.0),
        AttackAction("a5", "malicious code", "intrusion", loss_i=50, success_prob=0.5,
                     attack_time=4.0),
        AttackAction("a6", "phishing email", "intrusion", loss_c=20, success_prob=0.7,
                     attack_time=3.0),
        AttackAction("a7", "Bypass the hash", "lateral-transfer", loss_c=100, success_prob=0.5,
                     attack_time=100.0),
        AttackAction("a8", "CVE", "lateral-transfer", loss_c=100, success_prob=0.5,
                     attack_time=100.0),
    )
    defenses = (
        DefenseAction("d1", "Limited login", "passive", recovery=40),
        DefenseAction("d2", "anti-virus software", "passive", recovery=30, tracing_alpha=0.5,
                      detection_window=2.0),
        DefenseAction("d3", "Patch manager system", "passive", recovery=40),
        DefenseAction("d4", "firewall", "passive", recovery=20, tracing_alpha=1.0,
                      detection_window=5.0, cost_flat=5.0),
        DefenseAction("d5", "none", "noop"),
    )
    configs = {
        "ClientA": NodeConfig("ClientA", (
            AttackOption("a2", ROOT, success_coeff=0.5),
            AttackOption("a3", NONE),
            AttackOption("a6", USER),
        )),
        "ClientB": NodeConfig("ClientB", (
            AttackOption("a1", USER, countered_by=("d1",)),
            AttackOption("a3", NONE, exposure=1.0, countered_by=()),
            AttackOption("a4", USER, success_coeff=0.1, exposure=1.0, countered_by=()),
        ), defenses=("d1",)),
        "ServerA": NodeConfig("ServerA", (
            AttackOption("a2", USER, countered_by=("d3",)),
            AttackOption("a5", USER, countered_by=("d2",)),
        ), defenses=("d2", "d3")),
        "ServerB": NodeConfig("ServerB", (
            AttackOption("a1", ROOT, countered_by=("d1",)),
            AttackOption("a6", USER, countered_by=("d4",)),
        ), defenses=("d1", "d4")),
        # the patch level behind "(100-40)" is already in place on the key asset
        "KeyAsset": NodeConfig("KeyAsset", (
            AttackOption("a7", USER, exposure=1.0, countered_by=()),
            AttackOption("a8", USER, exposure=1.0, recovery=40.0, countered_by=()),
        ), defenses=("d3",)),
        "ShadowAsset": NodeConfig("ShadowAsset", (
            AttackOption("a7", USER, exposure=1.0, countered_by=()),
            AttackOption("a8", USER, exposure=1.0, countered_by=("d3",)),
        ), defenses=("d3",)),
    }
    deception = DeceptionConfig({("key-asset", "key-asset"): 1, ("shadow", "key-asset"): 1})
    # indirect benefit of each S0 cell, as printed next to the immediate terms
    s0 = {("a1", "ClientB"): (10.0, 10.0), ("a2", "ClientA"): (-10.0, 50.0),
          ("a3", "ClientB"): (0.0, 0.0), ("a4", "ClientB"): (26.0, 26.0)}
    overrides = {}
    for (a, target), (with_d1, with_noop) in s0.items():
        overrides[("S0", a, target, "d1")] = with_d1
        overrides[("S0", a, target, "d5")] = with_noop
    return Scenario(
        nodes=nodes, edges=edges, acl_rules=acl, attack_catalog=attacks,
        defense_catalog=defenses, node_configs=configs, game_params=GameParams(),
        deception=deception, continuation_overrides=overrides,
    )
