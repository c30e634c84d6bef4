"""Domain types for the two-player attack/defense stochastic game.

One attacker role and one defender role; payoffs are zero-sum, so only the
attacker payoff is ever stored and the defender payoff is its negation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional, Sequence

from .errors import UnknownNodeError

WILDCARD = "*"

STAGES = (
    "information-collecting",
    "intrusion",
    "privilege-elevation",
    "lateral-transfer",
    "persistent-resident",
    "tracks-eraser",
)

DEFENSE_KINDS = ("passive", "proactive", "noop")


class NodeStateLevel(enum.IntEnum):
    """Compromise level of a single node, ordered by danger."""

    NO_PRIVILEGE = 0
    REMOTE_ACCESS = 1
    ROOT = 2
    DATA_LEAK = 3

    @property
    def label(self) -> str:
        return self.name.lower().replace("_", "-")

    @classmethod
    def from_label(cls, text: str) -> "NodeStateLevel":
        key = text.strip().upper().replace("-", "_")
        # "user" is how privilege tables usually spell remote access
        if key == "USER":
            key = "REMOTE_ACCESS"
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown node state level {text!r}") from None


@dataclass(frozen=True)
class NetworkNode:
    id: str
    name: str
    asset_value: float
    true_fingerprint: str
    observed_fingerprint: str
    is_entrance: bool = False
    is_shadow: bool = False
    # window for the node's own monitoring (see AttackOption.exposure)
    detection_window: float = 1.0


@dataclass(frozen=True)
class AclRule:
    source: str  # node id or WILDCARD
    target: str
    permit: bool = True


@dataclass(frozen=True)
class AttackAction:
    id: str
    name: str
    stage: str
    loss_c: float = 0.0
    loss_i: float = 0.0
    loss_a: float = 0.0
    success_prob: float = 1.0
    attack_time: float = 1.0
    result_state: NodeStateLevel = NodeStateLevel.REMOTE_ACCESS

    @property
    def loss(self) -> float:
        return self.loss_c + self.loss_i + self.loss_a


@dataclass(frozen=True)
class DefenseAction:
    id: str
    name: str
    kind: str
    recovery: float = 0.0
    tracing_alpha: float = 0.0
    detection_window: float = 1.0
    # carried for reporting only; the zero-sum payoff has no slot for it
    cost_flat: float = 0.0

    @property
    def is_noop(self) -> bool:
        return self.kind == "noop"


@dataclass(frozen=True)
class AttackOption:
    """One attack that applies to one node, with its node-specific pricing.

    ``success_coeff`` multiplies the node's asset value. ``exposure`` is the
    tracing coefficient of the node's standing monitoring, charged whatever
    the defender plays. ``recovery`` is standing mitigation already in place.
    ``countered_by`` lists the defenses whose recovery/tracing apply to this
    attack; ``None`` means every defense configured on the node.
    """

    attack: str
    effect: NodeStateLevel
    success_coeff: float = 1.0
    exposure: float = 0.0
    recovery: float = 0.0
    countered_by: Optional[tuple[str, ...]] = None


@dataclass(frozen=True)
class NodeConfig:
    node: str
    attacks: tuple[AttackOption, ...] = ()
    defenses: tuple[str, ...] = ()

    def option(self, attack_id: str) -> Optional[AttackOption]:
        for opt in self.attacks:
            if opt.attack == attack_id:
                return opt
        return None

    def counters(self, opt: AttackOption, defense_id: str) -> bool:
        if defense_id not in self.defenses:
            return False
        return opt.countered_by is None or defense_id in opt.countered_by


@dataclass(frozen=True)
class DeceptionConfig:
    """phi[(true_fp, observed_fp)] = number of devices with that pairing."""

    counts: Mapping[tuple[str, str], int] = field(default_factory=dict)

    def observed_total(self, observed: str) -> int:
        return sum(n for (_, obs), n in self.counts.items() if obs == observed)

    def weights(self, observed: str) -> dict[str, float]:
        total = self.observed_total(observed)
        if total <= 0:
            raise ValueError(f"no device presents fingerprint {observed!r}")
        return {f: n / total for (f, obs), n in self.counts.items()
                if obs == observed and n > 0}

    @property
    def observed_fingerprints(self) -> set[str]:
        return {obs for (_, obs) in self.counts}


@dataclass(frozen=True)
class GameParams:
    discount: float = 1.0
    convergence_delta: float = 1e-6
    lp_tolerance: float = 1e-9
    max_sweeps: int = 10_000


@dataclass(frozen=True)
class ExtraTransition:
    """Hand-declared transition appended after state generation."""

    state: str
    attack: str
    target: str
    defense: str
    to: str
    prob: float


@dataclass(frozen=True)
class Scenario:
    nodes: tuple[NetworkNode, ...]
    edges: tuple[tuple[str, str], ...]
    acl_rules: tuple[AclRule, ...]
    attack_catalog: tuple[AttackAction, ...]
    defense_catalog: tuple[DefenseAction, ...]
    node_configs: Mapping[str, NodeConfig]
    game_params: GameParams = GameParams()
    deception: DeceptionConfig = DeceptionConfig()
    # (attack, defense) -> success probability of the transition
    transition_probs: Mapping[tuple[str, str], float] = field(default_factory=dict)
    # (state, attack, target, defense) -> fixed indirect-benefit term
    continuation_overrides: Mapping[tuple[str, str, str, str], float] = field(
        default_factory=dict)
    extra_transitions: tuple[ExtraTransition, ...] = ()

    @cached_property
    def node_index(self) -> dict[str, NetworkNode]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def attack_index(self) -> dict[str, AttackAction]:
        return {a.id: a for a in self.attack_catalog}

    @cached_property
    def defense_index(self) -> dict[str, DefenseAction]:
        return {d.id: d for d in self.defense_catalog}

    def node(self, node_id: str) -> NetworkNode:
        try:
            return self.node_index[node_id]
        except KeyError:
            raise UnknownNodeError(f"unknown node id {node_id!r}") from None

    def attack(self, attack_id: str) -> AttackAction:
        return self.attack_index[attack_id]

    def defense(self, defense_id: str) -> DefenseAction:
        return self.defense_index[defense_id]

    @property
    def noop(self) -> DefenseAction:
        for d in self.defense_catalog:
            if d.is_noop:
                return d
        raise LookupError("scenario has no noop defense")

    def config(self, node_id: str) -> NodeConfig:
        return self.node_configs.get(node_id) or NodeConfig(node_id)

    @property
    def entrance_nodes(self) -> list[str]:
        return [n.id for n in self.nodes if n.is_entrance]

    def neighbors(self, node_id: str) -> list[str]:
        """Edge targets of ``node_id`` in declaration order, ACL-filtered."""
        out = []
        for a, b in self.edges:
            if a == node_id and b not in out and acl_permits(self, a, b):
                out.append(b)
        return out

    def transition_prob(self, attack_id: str, defense_id: str) -> float:
        p = self.transition_probs.get((attack_id, defense_id))
        if p is None:
            p = self.attack(attack_id).success_prob
        return p


@dataclass(frozen=True)
class Violation:
    subject: str
    message: str

    def __str__(self):
        return f"{self.subject}: {self.message}"


def acl_permits(s: Scenario, source: str, target: str) -> bool:
    """First matching rule decides; no match denies."""
    s.node(source)
    s.node(target)
    for rule in s.acl_rules:
        if rule.target == target and rule.source in (source, WILDCARD):
            return rule.permit
    return False


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)


def validate_scenario(s: Scenario) -> list[Violation]:
    """Every invariant violation in ``s``; empty when the scenario is valid."""
    out: list[Violation] = []
    bad = out.append

    def dupes(ids: Sequence[str], what: str):
        seen = set()
        for i in ids:
            if i in seen:
                bad(Violation(i, f"duplicate {what} id"))
            seen.add(i)

    dupes([n.id for n in s.nodes], "node")
    dupes([a.id for a in s.attack_catalog], "attack")
    dupes([d.id for d in s.defense_catalog], "defense")
    nodes = set(s.node_index)
    attacks = set(s.attack_index)
    defenses = set(s.defense_index)

    for n in s.nodes:
        if not _finite(n.asset_value) or n.asset_value < 0:
            bad(Violation(n.id, f"asset_value must be >= 0, got {n.asset_value}"))
        if not _finite(n.detection_window) or n.detection_window <= 0:
            bad(Violation(n.id, "detection_window must be > 0"))
    if not any(n.is_entrance for n in s.nodes):
        bad(Violation("nodes", "no entrance node"))

    for a, b in s.edges:
        for end in (a, b):
            if end not in nodes:
                bad(Violation(end, f"edge ({a}, {b}) references unknown node {end}"))
    for r in s.acl_rules:
        if r.source != WILDCARD and r.source not in nodes:
            bad(Violation(r.source, f"ACL rule references unknown node {r.source}"))
        if r.target not in nodes:
            bad(Violation(r.target, f"ACL rule references unknown node {r.target}"))

    for a in s.attack_catalog:
        if a.stage not in STAGES:
            bad(Violation(a.id, f"unknown stage {a.stage!r}"))
        for part in ("loss_c", "loss_i", "loss_a"):
            v = getattr(a, part)
            if not _finite(v) or v < 0:
                bad(Violation(a.id, f"{part} must be >= 0"))
        if not (_finite(a.success_prob) and 0 <= a.success_prob <= 1):
            bad(Violation(a.id, "success_prob must lie in [0, 1]"))
        if not _finite(a.attack_time) or a.attack_time <= 0:
            bad(Violation(a.id, "attack_time must be > 0"))
        if not isinstance(a.result_state, NodeStateLevel):
            bad(Violation(a.id, "result_state is not a node state level"))

    noops = [d for d in s.defense_catalog if d.kind == "noop"]
    if len(noops) != 1:
        bad(Violation("defenses", f"expected exactly one noop defense, found {len(noops)}"))
    for d in s.defense_catalog:
        if d.kind not in DEFENSE_KINDS:
            bad(Violation(d.id, f"unknown defense kind {d.kind!r}"))
        if not _finite(d.detection_window) or d.detection_window <= 0:
            bad(Violation(d.id, "detection_window must be > 0"))
        for part in ("recovery", "tracing_alpha", "cost_flat"):
            v = getattr(d, part)
            if not _finite(v) or v < 0:
                bad(Violation(d.id, f"{part} must be >= 0"))
        if d.kind == "noop" and (d.recovery or d.tracing_alpha or d.cost_flat):
            bad(Violation(d.id, "noop defense must have zero recovery, tracing and cost"))

    for key, cfg in s.node_configs.items():
        if key != cfg.node:
            bad(Violation(key, f"node_configs key {key} holds config for {cfg.node}"))
        if cfg.node not in nodes:
            bad(Violation(cfg.node, f"node config references unknown node {cfg.node}"))
        for d in cfg.defenses:
            if d not in defenses:
                bad(Violation(d, f"node {cfg.node} references unknown defense {d}"))
        for opt in cfg.attacks:
            if opt.attack not in attacks:
                bad(Violation(opt.attack, f"node {cfg.node} references unknown attack {opt.attack}"))
            if not isinstance(opt.effect, NodeStateLevel):
                bad(Violation(opt.attack, f"node {cfg.node}: bad effect level"))
            for part in ("success_coeff", "exposure", "recovery"):
                v = getattr(opt, part)
                if not _finite(v) or v < 0:
                    bad(Violation(opt.attack, f"node {cfg.node}: {part} must be >= 0"))
            for d in opt.countered_by or ():
                if d not in cfg.defenses:
                    bad(Violation(d, f"node {cfg.node}: {opt.attack} countered by "
                                     f"{d}, which is not configured on the node"))

    observed_counts: dict[str, int] = {}
    for n in s.nodes:
        observed_counts[n.observed_fingerprint] = observed_counts.get(n.observed_fingerprint, 0) + 1
    for (f, obs), count in s.deception.counts.items():
        if not isinstance(count, int) or count < 0:
            bad(Violation(obs, f"deception count for ({f}, {obs}) must be a nonnegative integer"))
    for obs in sorted(s.deception.observed_fingerprints):
        total = s.deception.observed_total(obs)
        if total != observed_counts.get(obs, 0):
            bad(Violation(obs, f"deception counts for observed fingerprint {obs} sum to "
                               f"{total} but {observed_counts.get(obs, 0)} nodes present it"))

    gp = s.game_params
    if not (_finite(gp.discount) and 0 < gp.discount <= 1):
        bad(Violation("params", "discount must lie in (0, 1]"))
    if not (_finite(gp.convergence_delta) and gp.convergence_delta > 0):
        bad(Violation("params", "convergence_delta must be > 0"))
    if not (_finite(gp.lp_tolerance) and gp.lp_tolerance > 0):
        bad(Violation("params", "lp_tolerance must be > 0"))
    if not isinstance(gp.max_sweeps, int) or gp.max_sweeps < 1:
        bad(Violation("params", "max_sweeps must be a positive integer"))

    for (a, d), p in s.transition_probs.items():
        if a not in attacks:
            bad(Violation(a, f"transition probability references unknown attack {a}"))
        if d not in defenses:
            bad(Violation(d, f"transition probability references unknown defense {d}"))
        if not (_finite(p) and 0 <= p <= 1):
            bad(Violation(f"{a}/{d}", "transition probability must lie in [0, 1]"))
    for (state, a, target, d), v in s.continuation_overrides.items():
        if a not in attacks:
            bad(Violation(a, f"continuation override references unknown attack {a}"))
        if d not in defenses:
            bad(Violation(d, f"continuation override references unknown defense {d}"))
        if target not in nodes:
            bad(Violation(target, f"continuation override references unknown node {target}"))
        if not _finite(v):
            bad(Violation(state, "continuation override must be finite"))
    for t in s.extra_transitions:
        if t.attack not in attacks:
            bad(Violation(t.attack, f"extra transition references unknown attack {t.attack}"))
        if t.defense not in defenses:
            bad(Violation(t.defense, f"extra transition references unknown defense {t.defense}"))
        if t.target not in nodes:
            bad(Violation(t.target, f"extra transition references unknown node {t.target}"))
        if not (_finite(t.prob) and 0 <= t.prob <= 1):
            bad(Violation(t.state, "extra transition probability must lie in [0, 1]"))
    return out
