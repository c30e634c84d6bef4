"""Scenario files, DOT export and solve reports.

Scenario and report documents are JSON with a ``format_version`` field.
Serialisation is canonical (sorted keys, fixed indentation), so identical
inputs give byte-identical files.

Scenario document layout (every key optional unless marked)::

    format_version: 1                                     (required)
    nodes:        [{id, name, asset_value, true_fingerprint,
                    observed_fingerprint, is_entrance, is_shadow,
                    detection_window}]                    (required)
    edges:        [[from, to], ...]
    acl:          [{from, to, permit}]      "*" as from matches any node
    attacks:      [{id, name, stage, loss_c, loss_i, loss_a, success_prob,
                    attack_time, result_state}]
    defenses:     [{id, name, kind, recovery, tracing_alpha,
                    detection_window, cost_flat}]
    node_configs: [{node, defenses: [ids],
                    attacks: [{attack, effect, success_coeff, exposure,
                               recovery, countered_by}]}]
    deception:    {counts: [{true, observed, count}]}
    params:       {discount, convergence_delta, lp_tolerance, max_sweeps}
    overrides:    {transition_probs: [{attack, defense, prob}],
                   continuations: [{state, attack, target, defense, value}],
                   extra_transitions: [{state, attack, target, defense, to, prob}]}

A catalog with no noop defense gets one named "none".
"""

from __future__ import annotations

import io
import json
import os
import warnings
from typing import Any, Mapping, Optional, Union

import numpy as np

from .errors import ConvergenceError, ParseError, ScenarioError, SchemaError
from .model import (
    AclRule, AttackAction, AttackOption, DeceptionConfig, DefenseAction, ExtraTransition,
    GameParams, NetworkNode, NodeConfig, NodeStateLevel, Scenario, validate_scenario,
)
from .solver import EquilibriumResult, security_risk
from .states import GameGraph

FORMAT_VERSION = 1
REPORT_FORMAT_VERSION = 1

_TOP_KEYS = {"format_version", "nodes", "edges", "acl", "attacks", "defenses",
             "node_configs", "deception", "params", "overrides"}


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# -- serialisation ---------------------------------------------------------

def scenario_to_dict(s: Scenario) -> dict:
    # numbers go out as floats so that a reloaded scenario serialises identically
    doc: dict[str, Any] = {"format_version": FORMAT_VERSION}
    doc["nodes"] = [{
        "id": n.id, "name": n.name, "asset_value": float(n.asset_value),
        "true_fingerprint": n.true_fingerprint, "observed_fingerprint": n.observed_fingerprint,
        "is_entrance": n.is_entrance, "is_shadow": n.is_shadow,
        "detection_window": float(n.detection_window),
    } for n in s.nodes]
    doc["edges"] = [[a, b] for a, b in s.edges]
    doc["acl"] = [{"from": r.source, "to": r.target, "permit": r.permit} for r in s.acl_rules]
    doc["attacks"] = [{
        "id": a.id, "name": a.name, "stage": a.stage, "loss_c": float(a.loss_c), "loss_i": float(a.loss_i),
        "loss_a": float(a.loss_a), "success_prob": float(a.success_prob), "attack_time": float(a.attack_time),
        "result_state": a.result_state.label,
    } for a in s.attack_catalog]
    doc["defenses"] = [{
        "id": d.id, "name": d.name, "kind": d.kind, "recovery": float(d.recovery),
        "tracing_alpha": float(d.tracing_alpha), "detection_window": float(d.detection_window),
        "cost_flat": float(d.cost_flat),
    } for d in s.defense_catalog]
    configs = []
    for key in s.node_configs:
        cfg = s.node_configs[key]
        attacks = []
        for o in cfg.attacks:
            entry = {"attack": o.attack, "effect": o.effect.label,
                     "success_coeff": float(o.success_coeff), "exposure": float(o.exposure),
                     "recovery": float(o.recovery)}
            if o.countered_by is not None:
                entry["countered_by"] = list(o.countered_by)
            attacks.append(entry)
        configs.append({"node": cfg.node, "attacks": attacks, "defenses": list(cfg.defenses)})
    doc["node_configs"] = configs
    doc["deception"] = {"counts": [{"true": f, "observed": o, "count": n}
                                   for (f, o), n in s.deception.counts.items()]}
    gp = s.game_params
    doc["params"] = {"discount": float(gp.discount), "convergence_delta": float(gp.convergence_delta),
                     "lp_tolerance": float(gp.lp_tolerance), "max_sweeps": gp.max_sweeps}
    doc["overrides"] = {
        "transition_probs": [{"attack": a, "defense": d, "prob": float(p)}
                             for (a, d), p in s.transition_probs.items()],
        "continuations": [{"state": k, "attack": a, "target": t, "defense": d, "value": float(v)}
                          for (k, a, t, d), v in s.continuation_overrides.items()],
        "extra_transitions": [{"state": t.state, "attack": t.attack, "target": t.target,
                               "defense": t.defense, "to": t.to, "prob": float(t.prob)}
                              for t in s.extra_transitions],
    }
    return doc


def serialize_scenario(s: Scenario) -> str:
    return _dump(scenario_to_dict(s))


# -- parsing ---------------------------------------------------------------

class _Reader:
    """Field access with schema errors that name the offending path."""

    def __init__(self, strict: bool):
        self.strict = strict

    def obj(self, value, path, allowed) -> Mapping:
        if not isinstance(value, dict):
            raise SchemaError(f"{path}: expected an object", path)
        extra = sorted(set(value) - set(allowed))
        if extra:
            msg = f"{path}: unknown field(s) {', '.join(extra)}"
            if self.strict:
                raise SchemaError(msg, f"{path}.{extra[0]}")
            warnings.warn(msg + " (ignored)", stacklevel=3)
        return value

    def list(self, value, path) -> list:
        if not isinstance(value, list):
            raise SchemaError(f"{path}: expected a list", path)
        return value

    def get(self, d, key, path, kind, default=...):
        if key not in d:
            if default is ...:
                raise SchemaError(f"{path}.{key}: required field missing", f"{path}.{key}")
            return default
        value = d[key]
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise SchemaError(f"{path}.{key}: expected a number", f"{path}.{key}")
            return float(value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise SchemaError(f"{path}.{key}: expected an integer", f"{path}.{key}")
            return value
        if not isinstance(value, kind):
            raise SchemaError(f"{path}.{key}: expected {kind.__name__}", f"{path}.{key}")
        return value

    def level(self, d, key, path, default=...):
        text = self.get(d, key, path, str, default)
        if isinstance(text, NodeStateLevel):
            return text
        try:
            return NodeStateLevel.from_label(text)
        except ValueError as exc:
            raise SchemaError(f"{path}.{key}: {exc}", f"{path}.{key}") from None


def scenario_from_dict(doc, *, strict: bool = True) -> Scenario:
    r = _Reader(strict)
    doc = r.obj(doc, "$", _TOP_KEYS)
    version = r.get(doc, "format_version", "$", int)
    if version != FORMAT_VERSION:
        raise SchemaError(f"$.format_version: unsupported version {version}", "format_version")

    nodes = []
    for i, n in enumerate(r.list(r.get(doc, "nodes", "$", list), "$.nodes")):
        p = f"$.nodes[{i}]"
        n = r.obj(n, p, {"id", "name", "asset_value", "true_fingerprint", "observed_fingerprint",
                         "is_entrance", "is_shadow", "detection_window"})
        node_id = r.get(n, "id", p, str)
        true_fp = r.get(n, "true_fingerprint", p, str, node_id)
        nodes.append(NetworkNode(
            node_id, r.get(n, "name", p, str, node_id), r.get(n, "asset_value", p, float, 0.0),
            true_fp, r.get(n, "observed_fingerprint", p, str, true_fp),
            r.get(n, "is_entrance", p, bool, False), r.get(n, "is_shadow", p, bool, False),
            r.get(n, "detection_window", p, float, 1.0)))

    edges = []
    for i, e in enumerate(r.list(doc.get("edges", []), "$.edges")):
        if (not isinstance(e, list) or len(e) != 2
                or not all(isinstance(x, str) for x in e)):
            raise SchemaError(f"$.edges[{i}]: expected [from, to]", f"edges[{i}]")
        edges.append((e[0], e[1]))

    acl = []
    for i, a in enumerate(r.list(doc.get("acl", []), "$.acl")):
        p = f"$.acl[{i}]"
        a = r.obj(a, p, {"from", "to", "permit"})
        acl.append(AclRule(r.get(a, "from", p, str), r.get(a, "to", p, str),
                           r.get(a, "permit", p, bool, True)))

    attacks = []
    for i, a in enumerate(r.list(doc.get("attacks", []), "$.attacks")):
        p = f"$.attacks[{i}]"
        a = r.obj(a, p, {"id", "name", "stage", "loss_c", "loss_i", "loss_a", "success_prob",
                         "attack_time", "result_state"})
        attack_id = r.get(a, "id", p, str)
        attacks.append(AttackAction(
            attack_id, r.get(a, "name", p, str, attack_id), r.get(a, "stage", p, str),
            r.get(a, "loss_c", p, float, 0.0), r.get(a, "loss_i", p, float, 0.0),
            r.get(a, "loss_a", p, float, 0.0), r.get(a, "success_prob", p, float, 1.0),
            r.get(a, "attack_time", p, float, 1.0),
            r.level(a, "result_state", p, NodeStateLevel.REMOTE_ACCESS)))

    defenses = []
    for i, d in enumerate(r.list(doc.get("defenses", []), "$.defenses")):
        p = f"$.defenses[{i}]"
        d = r.obj(d, p, {"id", "name", "kind", "recovery", "tracing_alpha", "detection_window",
                         "cost_flat"})
        defense_id = r.get(d, "id", p, str)
        defenses.append(DefenseAction(
            defense_id, r.get(d, "name", p, str, defense_id), r.get(d, "kind", p, str, "passive"),
            r.get(d, "recovery", p, float, 0.0), r.get(d, "tracing_alpha", p, float, 0.0),
            r.get(d, "detection_window", p, float, 1.0), r.get(d, "cost_flat", p, float, 0.0)))
    if not any(d.kind == "noop" for d in defenses):
        defenses.append(DefenseAction("none", "no defense", "noop"))

    configs = {}
    for i, c in enumerate(r.list(doc.get("node_configs", []), "$.node_configs")):
        p = f"$.node_configs[{i}]"
        c = r.obj(c, p, {"node", "attacks", "defenses"})
        node_id = r.get(c, "node", p, str)
        if node_id in configs:
            raise SchemaError(f"{p}.node: duplicate config for node {node_id}", f"{p}.node")
        options = []
        for j, o in enumerate(r.list(c.get("attacks", []), f"{p}.attacks")):
            q = f"{p}.attacks[{j}]"
            o = r.obj(o, q, {"attack", "effect", "success_coeff", "exposure", "recovery",
                             "countered_by"})
            countered = r.get(o, "countered_by", q, list, None)
            if countered is not None:
                if not all(isinstance(x, str) for x in countered):
                    raise SchemaError(f"{q}.countered_by: expected a list of ids", q)
                countered = tuple(countered)
            options.append(AttackOption(
                r.get(o, "attack", q, str), r.level(o, "effect", q, NodeStateLevel.REMOTE_ACCESS),
                r.get(o, "success_coeff", q, float, 1.0), r.get(o, "exposure", q, float, 0.0),
                r.get(o, "recovery", q, float, 0.0), countered))
        defs = r.get(c, "defenses", p, list, [])
        if not all(isinstance(x, str) for x in defs):
            raise SchemaError(f"{p}.defenses: expected a list of ids", f"{p}.defenses")
        configs[node_id] = NodeConfig(node_id, tuple(options), tuple(defs))

    counts = {}
    dec = r.obj(doc.get("deception", {}), "$.deception", {"counts"})
    for i, c in enumerate(r.list(dec.get("counts", []), "$.deception.counts")):
        p = f"$.deception.counts[{i}]"
        c = r.obj(c, p, {"true", "observed", "count"})
        counts[(r.get(c, "true", p, str), r.get(c, "observed", p, str))] = r.get(c, "count", p, int)

    pr = r.obj(doc.get("params", {}), "$.params",
               {"discount", "convergence_delta", "lp_tolerance", "max_sweeps"})
    params = GameParams(r.get(pr, "discount", "$.params", float, 1.0),
                        r.get(pr, "convergence_delta", "$.params", float, 1e-6),
                        r.get(pr, "lp_tolerance", "$.params", float, 1e-9),
                        r.get(pr, "max_sweeps", "$.params", int, 10_000))

    ov = r.obj(doc.get("overrides", {}), "$.overrides",
               {"transition_probs", "continuations", "extra_transitions"})
    probs, conts, extra = {}, {}, []
    for i, t in enumerate(r.list(ov.get("transition_probs", []), "$.overrides.transition_probs")):
        p = f"$.overrides.transition_probs[{i}]"
        t = r.obj(t, p, {"attack", "defense", "prob"})
        probs[(r.get(t, "attack", p, str), r.get(t, "defense", p, str))] = r.get(t, "prob", p, float)
    for i, t in enumerate(r.list(ov.get("continuations", []), "$.overrides.continuations")):
        p = f"$.overrides.continuations[{i}]"
        t = r.obj(t, p, {"state", "attack", "target", "defense", "value"})
        key = tuple(r.get(t, k, p, str) for k in ("state", "attack", "target", "defense"))
        conts[key] = r.get(t, "value", p, float)
    for i, t in enumerate(r.list(ov.get("extra_transitions", []),
                                 "$.overrides.extra_transitions")):
        p = f"$.overrides.extra_transitions[{i}]"
        t = r.obj(t, p, {"state", "attack", "target", "defense", "to", "prob"})
        extra.append(ExtraTransition(*(r.get(t, k, p, str) for k in
                                       ("state", "attack", "target", "defense", "to")),
                                     r.get(t, "prob", p, float)))

    return Scenario(tuple(nodes), tuple(edges), tuple(acl), tuple(attacks), tuple(defenses),
                    configs, params, DeceptionConfig(counts), probs, conts, tuple(extra))


def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"document is not valid UTF-8: {exc}") from None
    return data


def _parse_json(text: str):
    if not text.strip():
        raise ParseError("empty document", 1, 1)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None


def load_scenario(source: Union[str, os.PathLike, bytes, io.IOBase], *,
                  strict: bool = True) -> Scenario:
    """Parse and validate a scenario document (path, bytes or open stream)."""
    s = scenario_from_dict(_parse_json(_read_text(source)), strict=strict)
    violations = validate_scenario(s)
    if violations:
        raise ScenarioError(f"scenario invalid: {violations[0]}", violations)
    return s


# -- exports ---------------------------------------------------------------

def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _quote(text: str) -> str:
    return '"' + _escape(text) + '"'


def _label(*lines: str) -> str:
    """Quoted multi-line DOT label; ``\\n`` is DOT's centred line break."""
    return '"' + "\\n".join(_escape(x) for x in lines) + '"'


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def export_graph(g: GameGraph, e: Optional[EquilibriumResult] = None) -> str:
    """DOT rendering of the state graph, values included when ``e`` is given."""
    lines = ["digraph game {", "  rankdir=LR;", "  node [shape=box];"]
    for st in sorted(g.states, key=lambda st: _state_order(st.id)):
        label = [st.id]
        if st.focus:
            label.append(",".join(st.focus))
        if e is not None and st.id in e.values:
            label.append(f"v={_fmt(e.values[st.id])}")
        shape = ', peripheries=2' if st.id == g.initial_state else ""
        lines.append(f"  {_quote(st.id)} [label={_label(*label)}{shape}];")
    edges = []
    for (k, (a, target), d), outs in g.transitions.items():
        for to, p in outs:
            edges.append((_state_order(k), a, target, d, _state_order(to), k, to, p))
    for _, a, target, d, _, k, to, p in sorted(edges):
        label = f"({a}@{target}, {d}) : {_fmt(p)}"
        lines.append(f"  {_quote(k)} -> {_quote(to)} [label={_quote(label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _state_order(state_id: str):
    digits = state_id.lstrip("S")
    return (0, int(digits), "") if digits.isdigit() else (1, 0, state_id)


def graph_to_dict(g: GameGraph) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "initial_state": g.initial_state,
        "states": [{
            "id": st.id,
            "focus": list(st.focus),
            "node_levels": {n: lv.label for n, lv in st.node_levels.items()},
            "attacker_actions": [[a, t] for a, t in st.attacker_actions],
            "defender_actions": list(st.defender_actions),
            "is_terminal": st.is_terminal,
        } for st in g.states],
        "transitions": [{"state": k, "attack": a, "target": t, "defense": d,
                         "successors": [[to, p] for to, p in outs]}
                        for (k, (a, t), d), outs in sorted(
                            g.transitions.items(),
                            key=lambda kv: (_state_order(kv[0][0]), kv[0][1], kv[0][2]))],
    }


def export_graph_structured(g: GameGraph) -> str:
    return _dump(graph_to_dict(g))


def _matrix_dict(m) -> dict:
    out = {"rows": m.row_names(), "row_targets": [t for _, t in m.rows], "cols": list(m.cols),
           "entries": m.entries.tolist(), "immediate": m.immediate.tolist(),
           "indirect": m.indirect.tolist()}
    if m.raw is not None:
        out["raw"] = _matrix_dict(m.raw)
    return out


def report_to_dict(s: Scenario, g: GameGraph, e: EquilibriumResult) -> dict:
    risk = security_risk(e, g)
    states = []
    for st in g.states:
        x, y = e.strategies.get(st.id, (np.zeros(0), np.zeros(0)))
        entry = {"id": st.id, "value": e.values[st.id], "terminal": st.is_terminal,
                 "focus": list(st.focus)}
        m = e.matrices.get(st.id)
        if m is not None:
            entry["matrix"] = _matrix_dict(m)
            entry["attacker_strategy"] = x.tolist()
            entry["defender_strategy"] = y.tolist()
        states.append(entry)
    return {
        "format_version": REPORT_FORMAT_VERSION,
        "headline": {"security_risk": risk.value, "verdict": risk.verdict, "safe": risk.safe,
                     "initial_state": risk.initial_state},
        "diagnostics": {"method": e.method, "iterations": e.iterations, "converged": e.converged,
                        "residual": e.residual, "residual_history": list(e.residual_history),
                        "discount": s.game_params.discount,
                        "convergence_delta": s.game_params.convergence_delta},
        "scenario": {"nodes": [n.id for n in s.nodes],
                     "attacks": [a.id for a in s.attack_catalog],
                     "defenses": [d.id for d in s.defense_catalog]},
        "states": states,
    }


def export_report(s: Scenario, g: GameGraph, e: EquilibriumResult) -> str:
    """Machine-readable JSON report of a converged solve."""
    if not e.converged:
        raise ConvergenceError("cannot report an unconverged solve", e.residual_history)
    return _dump(report_to_dict(s, g, e))


def load_report(source) -> dict:
    doc = _parse_json(_read_text(source))
    if not isinstance(doc, dict) or doc.get("format_version") != REPORT_FORMAT_VERSION:
        raise SchemaError("not a version-1 report document", "format_version")
    for key in ("headline", "diagnostics", "states"):
        if key not in doc:
            raise SchemaError(f"report missing {key}", key)
    return doc
