from __future__ import annotations

import json
import math
from datetime import datetime, timezone

import pytest

from questlog.cache import build_entry
from questlog.config import EngineConfig
from questlog.errors import SelectionError
from questlog.model import ancestors
from questlog.qa import (
    INTENT_COMPARE,
    INTENT_EXPLAIN,
    INTENT_SHOW,
    INTENT_TREND,
    INTENT_UNKNOWN,
    INTENT_WHY_LOW,
    QARequest,
    answer,
    audit_answer_numbers,
    classify_intent,
    resolve_selection,
)
from questlog.report import generate_report
from questlog.synth import STEVEN_ID, synthesize

NOW = datetime(2024, 4, 1, tzinfo=timezone.utc)


@pytest.fixture(scope="module")
def world():
    graph, records, catalog = synthesize(seed=1729, cohort=40)
    config = EngineConfig()
    entry = build_entry(STEVEN_ID, "U7", records, graph, catalog, config)
    doc = generate_report(entry, graph, config, now=NOW)
    return graph, config, entry, doc


def ask(world, selection, question):
    graph, config, entry, doc = world
    request = QARequest(report_id="r1", selection=tuple(selection), question=question)
    return answer(doc, request, entry, graph, config)


# ---------------------------------------------------------------------------
# Selection resolution
# ---------------------------------------------------------------------------


def test_unit_element_expands_to_unit_objectives(world):
    _g, _c, _e, doc = world
    objectives, unit = resolve_selection(doc, ["el-unit-U3"])
    assert objectives == ["N1114", "N1115", "N1136"]
    assert unit == "U3"


def test_single_element_single_tag(world):
    _g, _c, _e, doc = world
    objectives, _unit = resolve_selection(doc, ["el-mastery-S1102"])
    assert objectives == ["S1102"]


def test_selection_union(world):
    _g, _c, _e, doc = world
    objectives, _unit = resolve_selection(doc, ["el-mastery-S1102", "el-mastery-S1205"])
    assert objectives == ["S1102", "S1205"]


def test_unknown_ids_raise_listing_them(world):
    _g, _c, _e, doc = world
    with pytest.raises(SelectionError) as err:
        resolve_selection(doc, ["el-mastery-S1102", "bogus-1", "bogus-2"])
    assert err.value.bad_ids == ["bogus-1", "bogus-2"]


def test_text_span_resolves_to_stage_objectives(world):
    _g, _c, _e, doc = world
    objectives, _unit = resolve_selection(doc, ["text:S9"])
    assert set(objectives) >= {"S1102", "S1205", "S1206", "S2106"}


# ---------------------------------------------------------------------------
# Intent classification
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "question,intent",
    [
        ("Why is my overall accuracy in Unit 3 so low?", INTENT_WHY_LOW),
        ("How does my performance compare with other students?", INTENT_COMPARE),
        ("Why did you suggest more practice for S1102?", INTENT_EXPLAIN),
        ("Show me the average number of problems solved per objective", INTENT_SHOW),
        ("How has my accuracy progressed over time?", INTENT_TREND),
        ("asdf", INTENT_UNKNOWN),
        ("", INTENT_UNKNOWN),
    ],
)
def test_intent_table(question, intent):
    assert classify_intent(question) == intent


# ---------------------------------------------------------------------------
# Answers
# ---------------------------------------------------------------------------


def test_unit3_why_low_cites_weakest_with_peer_chart(world):
    response = ask(world, ["el-unit-U3"], "Why is my overall accuracy in Unit 3 so low?")
    assert response.grounding["intent"] == INTENT_WHY_LOW
    assert "N1114" in response.answer  # the weakest of the three
    assert {"N1114", "N1115", "N1136"} <= set(response.grounding["objective_ids"])
    assert response.charts and response.charts[0]["kind"] == "bar"
    names = [s["name"] for s in response.charts[0]["series"]]
    assert "peer average" in names
    assert audit_answer_numbers(response) == []


def test_explain_suggestion_surfaces_rule_provenance(world):
    response = ask(world, ["el-mastery-S1102"], "Why did you suggest that for S1102?")
    assert response.grounding["intent"] == INTENT_EXPLAIN
    assert "S1102" in response.answer
    assert "mastery" in response.answer
    assert any(label.startswith("suggestion:") for label in (s["label"] for s in response.grounding["slices"]))
    assert response.charts  # the gap visualization
    assert audit_answer_numbers(response) == []


def test_show_metric_values_match_flat_recomputation(world):
    graph, config, entry, doc = world
    response = ask(world, ["el-unit-U7"], "Show me the average number of problems solved per objective")
    assert response.grounding["intent"] == INTENT_SHOW
    chart = response.charts[0]
    you = {x: y for x, y in zip(chart["series"][0]["x"], chart["series"][0]["y"])}
    peers = {x: y for x, y in zip(chart["series"][1]["x"], chart["series"][1]["y"])}
    for obj in ("S1102", "S1205", "S1206", "S2106"):
        points = entry["series"][f"{obj}|all"]
        assert you[obj] == sum(p["count"] for p in points)
        cell = entry["cohort"][f"{obj}|overall|all"]
        assert peers[obj] == pytest.approx(cell["mean_count"], abs=1e-12)
    assert audit_answer_numbers(response) == []


def test_trend_over_time_returns_line_chart(world):
    response = ask(world, ["el-mastery-S1205"], "How has my accuracy changed over time?")
    assert response.grounding["intent"] == INTENT_TREND
    assert response.charts[0]["kind"] == "line"
    assert audit_answer_numbers(response) == []


def test_unknown_intent_returns_generic_summary(world):
    response = ask(world, ["el-mastery-S1206"], "qwerty zxcv")
    assert response.grounding["intent"] == INTENT_UNKNOWN
    assert "S1206" in response.answer
    assert audit_answer_numbers(response) == []


def test_grounding_soundness_within_tri_level_closure(world):
    graph, config, entry, doc = world
    for selection, question in [
        (["el-unit-U3"], "Why is my accuracy low?"),
        (["el-mastery-S1205"], "How do I compare with my peers?"),
        (["el-unit-U7"], "show my accuracy"),
        (["el-testacc-S2106"], "why is this so weak?"),
    ]:
        response = ask(world, selection, question)
        resolved, _ = resolve_selection(doc, selection)
        allowed = set(resolved)
        for obj in resolved:
            if graph.has_objective(obj):
                allowed.update(ancestors(graph, obj))
            for assoc in entry.get("associated_sets", {}).get(obj, []):
                allowed.update(assoc["objectives"])
        assert set(response.grounding["objective_ids"]) <= allowed


def test_multi_objective_selection_uses_joint_series_when_co_tagged(world):
    response = ask(
        world, ["el-mastery-S1205", "el-mastery-S2106"], "How has accuracy moved over time?"
    )
    chart = response.charts[0]
    # the joint S1205+S2106 series exists in the cache, so the line is joint
    assert "S1205+S2106" in chart["chart_id"] or all(
        set(e["objectives"]) == {"S1205", "S2106"} for e in chart["elements"].values()
    )


def test_llm_backend_falls_back_on_missing_numbers(world):
    graph, config, entry, doc = world
    request = QARequest(report_id="r1", selection=("el-unit-U3",), question="why so low?")

    class DropDigits:
        def transport(self, prompt: str) -> str:
            return "everything is fine"

    response = answer(doc, request, entry, graph, config, backend=DropDigits())
    assert response.fallback
    assert response.backend_mode == "deterministic"
    assert audit_answer_numbers(response) == []


def test_llm_backend_used_when_numbers_echoed(world):
    graph, config, entry, doc = world
    request = QARequest(report_id="r1", selection=("el-unit-U3",), question="why so low?")

    class Echo:
        def transport(self, prompt: str) -> str:
            base = prompt.split("BASE ANSWER: ", 1)[1]
            return "Rephrased: " + base

    response = answer(doc, request, entry, graph, config, backend=Echo())
    assert response.backend_mode == "llm"
    assert response.answer.startswith("Rephrased: ")
