import io
import json
import warnings

import pytest
from hypothesis import given, settings

from secgame import (
    ConvergenceError, GameGraph, GameState, ParseError, ScenarioError, SchemaError, TabularEngine, UtilityEngine,
    backward_induct, export_graph, export_report, load_report, load_scenario,
    serialize_scenario,
)
from secgame.model import Scenario
from secgame.scenario_io import export_graph_structured, scenario_to_dict

from strategies import scenarios


def _solve(s, g):
    return backward_induct(g, UtilityEngine(s))


def test_builtin_round_trip(case_study):
    text = serialize_scenario(case_study)
    back = load_scenario(text.encode())
    assert back == case_study
    assert serialize_scenario(back) == text


@settings(max_examples=50)
@given(scenarios())
def test_random_round_trip(s):
    text = serialize_scenario(s)
    assert load_scenario(io.BytesIO(text.encode())) == s
    assert serialize_scenario(load_scenario(text.encode())) == text


def test_load_from_path(tmp_path, case_study):
    path = tmp_path / "s.json"
    path.write_text(serialize_scenario(case_study))
    assert load_scenario(path) == case_study
    assert load_scenario(str(path)) == case_study


@pytest.mark.parametrize("text", ["", "   \n"])
def test_empty_document(text):
    with pytest.raises(ParseError) as info:
        load_scenario(text.encode())
    assert info.value.line == 1


def test_bad_json_location():
    with pytest.raises(ParseError) as info:
        load_scenario(b'{\n  "nodes": [,]\n}')
    assert info.value.line == 2


def test_unknown_action_id(case_study):
    doc = scenario_to_dict(case_study)
    doc["node_configs"][0]["attacks"][0]["attack"] = "a99"
    with pytest.raises(ScenarioError) as info:
        load_scenario(json.dumps(doc).encode())
    assert any(v.subject == "a99" for v in info.value.violations)
    assert "a99" in str(info.value)


def test_strict_and_lenient(case_study):
    doc = scenario_to_dict(case_study)
    doc["nodes"][0]["colour"] = "red"
    blob = json.dumps(doc).encode()
    with pytest.raises(SchemaError) as info:
        load_scenario(blob)
    assert "colour" in info.value.field
    with pytest.warns(UserWarning, match="colour"):
        assert load_scenario(blob, strict=False) == case_study


def test_schema_type_errors(case_study):
    doc = scenario_to_dict(case_study)
    doc["attacks"][0]["loss_c"] = "lots"
    with pytest.raises(SchemaError, match=r"attacks\[0\]\.loss_c"):
        load_scenario(json.dumps(doc).encode())
    doc = scenario_to_dict(case_study)
    doc["format_version"] = 7
    with pytest.raises(SchemaError):
        load_scenario(json.dumps(doc).encode())
    with pytest.raises(SchemaError):
        load_scenario(b"[1, 2]")


def test_noop_added_when_missing(case_study):
    doc = scenario_to_dict(case_study)
    doc["defenses"] = [d for d in doc["defenses"] if d["id"] != "d5"]
    doc["overrides"]["continuations"] = [c for c in doc["overrides"]["continuations"]
                                         if c["defense"] != "d5"]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        s = load_scenario(json.dumps(doc).encode())
    assert s.noop.id == "none"


def test_minimal_document():
    doc = {"format_version": 1,
           "nodes": [{"id": "A", "asset_value": 1, "is_entrance": True}]}
    s = load_scenario(json.dumps(doc).encode())
    assert s.node("A").observed_fingerprint == s.node("A").true_fingerprint


def test_dot_export(case_study, case_graph):
    e = _solve(case_study, case_graph)
    dot = export_graph(case_graph, e)
    assert dot == export_graph(case_graph, e)
    assert dot.startswith("digraph")
    assert '"S0" [label="S0\\nClientA\\nv=30"' in dot
    assert '"S2" -> "S4" [label="(a7@KeyAsset, d3) : 0.5"];' in dot
    plain = export_graph(case_graph)
    assert "v=" not in plain


def test_dot_single_state():
    g = GameGraph((GameState("S0", {}),), {}, "S0")
    dot = export_graph(g)
    assert dot.count("[label=") == 1
    assert "->" not in dot


def test_structured_graph(case_graph):
    doc = json.loads(export_graph_structured(case_graph))
    assert [s["id"] for s in doc["states"]] == case_graph.state_ids
    assert export_graph_structured(case_graph) == export_graph_structured(case_graph)


def test_report(case_study, case_graph):
    e = _solve(case_study, case_graph)
    text = export_report(case_study, case_graph, e)
    assert text == export_report(case_study, case_graph, _solve(case_study, case_graph))
    doc = load_report(text.encode())
    assert doc["headline"]["security_risk"] == e.values["S0"]
    assert doc["headline"]["verdict"] == "not safe"
    s2 = next(s for s in doc["states"] if s["id"] == "S2")
    assert s2["matrix"]["entries"] == [[400, 400], [200, 200]]
    assert s2["matrix"]["raw"]["entries"] == [[900, 900], [-100, -100], [500, 500], [-100, -100]]
    for st in doc["states"]:
        assert st["value"] == e.values[st["id"]]
        if "matrix" in st:
            x, y = e.strategies[st["id"]]
            assert st["attacker_strategy"] == x.tolist()
            assert st["defender_strategy"] == y.tolist()


def test_report_single_state():
    g = GameGraph((GameState("S0", {}, (), (("r", "x"),), ("c",)),), {}, "S0")
    e = backward_induct(g, TabularEngine({"S0": [[2.5]]}))
    s = Scenario((), (), (), (), (), {})
    doc = load_report(export_report(s, g, e).encode())
    assert doc["states"][0]["matrix"]["entries"] == [[2.5]]
    assert doc["headline"]["security_risk"] == 2.5


def test_report_needs_convergence(case_study, case_graph):
    e = _solve(case_study, case_graph)
    e.converged = False
    with pytest.raises(ConvergenceError):
        export_report(case_study, case_graph, e)


def test_load_report_rejects_scenario(case_study):
    with pytest.raises(SchemaError):
        load_report(serialize_scenario(case_study).encode())
