"""Assembles diagnoses, insights, and feedback into the 12-stage report.

Stage structure is fixed: four phases of three stages, info groups of
3/6/3 (overview, summary, guidance). Narrative text comes from per-stage
templates (data files, editable without code changes) or from a remote LLM
backend that must echo every injected number exactly; any deficient or
failed LLM response falls back to the template for that stage and the
substitution is recorded in the document metadata.

Every numeral that can appear in template narrative is first placed in a
structured payload (insight displays, feedback items, stage data), which is
what the number-provenance audit checks.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources

import httpx

from . import __version__
from .aggregate import OVERALL
from .config import EngineConfig
from .fmt import fmt_num, fmt_pct
from .formative import ObjectiveDiagnosis
from .insights import (
    KIND_MAJORITY,
    MEASURE_ACCURACY,
    MEASURE_COUNT,
    MEASURE_DURATION,
    Insight,
)
from .model import MODE_ALL, ObjectiveGraph
from .pedagogy import FeedbackItem

SCHEMA_VERSION = 1

# (stage id, phase, info group); S1-S3 overview, S4-S9 summary, S10-S12 guidance
STAGES = [
    ("S1", "departure", "overview_intro"),
    ("S2", "departure", "overview_intro"),
    ("S3", "departure", "overview_intro"),
    ("S4", "initiation", "summary_info"),
    ("S5", "initiation", "summary_info"),
    ("S6", "initiation", "summary_info"),
    ("S7", "unification", "summary_info"),
    ("S8", "unification", "summary_info"),
    ("S9", "unification", "summary_info"),
    ("S10", "return", "formative_guidance"),
    ("S11", "return", "formative_guidance"),
    ("S12", "return", "formative_guidance"),
]

ALWAYS_TRANSITIONAL = {"S4", "S10"}

_NUMERAL = re.compile(r"(?<![A-Za-z0-9_.])\d+(?:\.\d+)?")


def load_templates() -> dict:
    text = resources.files("questlog").joinpath("templates/stages.json").read_text(encoding="utf-8")
    return json.loads(text)


def extract_numerals(text: str) -> list[str]:
    return _NUMERAL.findall(text)


# ---------------------------------------------------------------------------
# Chart specifications
# ---------------------------------------------------------------------------


@dataclass
class ChartSeries:
    name: str
    x: list
    y: list
    element_ids: list[str]
    y_unit: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "x": self.x, "y": self.y, "element_ids": self.element_ids, "y_unit": self.y_unit}


@dataclass
class ChartSpec:
    chart_id: str
    kind: str  # line | bar | stacked_bar | pie | radial_progress | node_link
    title: str
    x_label: str
    y_label: str
    series: list[ChartSeries]
    annotations: list[dict] = field(default_factory=list)
    elements: dict[str, dict] = field(default_factory=dict)
    links: list[dict] = field(default_factory=list)  # node_link only

    def validate(self) -> list[str]:
        problems = []
        for s in self.series:
            if not (len(s.x) == len(s.y) == len(s.element_ids)):
                problems.append(f"{self.chart_id}/{s.name}: inconsistent series lengths")
            for eid in s.element_ids:
                if eid not in self.elements:
                    problems.append(f"{self.chart_id}: data point id {eid} missing from registry")
        for ann in self.annotations:
            if ann["target"] not in self.elements:
                problems.append(f"{self.chart_id}: annotation target {ann['target']} missing")
        return problems

    def to_dict(self) -> dict:
        return {
            "chart_id": self.chart_id,
            "kind": self.kind,
            "title": self.title,
            "x_label": self.x_label,
            "y_label": self.y_label,
            "series": [s.to_dict() for s in self.series],
            "annotations": self.annotations,
            "elements": self.elements,
            "links": self.links,
        }


def _element(objectives: list[str], unit_id: str | None, metric: str) -> dict:
    return {"objectives": list(objectives), "unit_id": unit_id, "metric": metric}


def _unit_map_chart(entry: dict, graph: ObjectiveGraph) -> ChartSpec:
    xs, ys, ids, elements = [], [], [], {}
    for summary in entry["unit_summaries"]:
        uid = summary["unit_id"]
        eid = f"el-unit-{uid}"
        xs.append(summary["title"])
        ys.append(summary["accuracy"])
        ids.append(eid)
        elements[eid] = _element(list(graph.unit(uid).objectives), uid, "unit_accuracy")
    links = []
    seen = set()
    for frm, to in sorted(graph.edges):
        u_from = graph.objectives[frm].unit_id
        u_to = graph.objectives[to].unit_id
        if u_from != u_to and (u_from, u_to) not in seen:
            seen.add((u_from, u_to))
            links.append({"source": f"el-unit-{u_from}", "target": f"el-unit-{u_to}"})
    return ChartSpec(
        chart_id="chart-s1-unit-map",
        kind="node_link",
        title="Your learning map, unit by unit",
        x_label="unit",
        y_label="accuracy",
        series=[ChartSeries(name="unit accuracy", x=xs, y=ys, element_ids=ids, y_unit="fraction")],
        elements=elements,
        links=links,
    )


def _difficulty_chart(entry: dict, unit_objs: list[str], unit_id: str, graph: ObjectiveGraph) -> ChartSpec | None:
    series, elements = [], {}
    tiers = ("easy", "medium", "hard")
    profiles = {
        obj: entry["indicators"][obj].get("difficulty_profile") for obj in unit_objs
    }
    if not any(profiles.values()):
        return None
    for tier in tiers:
        ys, ids = [], []
        for obj in unit_objs:
            prof = profiles[obj]
            ys.append(prof[tier] if prof else None)
            eid = f"el-diff-{obj}-{tier}"
            ids.append(eid)
            elements[eid] = _element([obj], unit_id, f"difficulty_share_{tier}")
        series.append(ChartSeries(name=tier, x=list(unit_objs), y=ys, element_ids=ids, y_unit="share"))
    return ChartSpec(
        chart_id="chart-s3-difficulty",
        kind="stacked_bar",
        title="How hard the question bank runs, per objective",
        x_label="objective",
        y_label="share of questions",
        series=series,
        elements=elements,
    )


def _interval_line_chart(
    entry: dict,
    chart_id: str,
    title: str,
    series_key: str,
    unit_objs: list[str],
    unit_id: str,
    prefix: str,
) -> ChartSpec | None:
    points = entry["series"].get(series_key)
    if not points or all(p["count"] == 0 for p in points):
        return None
    xs, ys, ids, elements = [], [], [], {}
    for k, p in enumerate(points):
        eid = f"{prefix}{k}"
        xs.append(k)
        ys.append(p["accuracy"])
        ids.append(eid)
        elements[eid] = _element(list(unit_objs), unit_id, "accuracy_by_interval")
    return ChartSpec(
        chart_id=chart_id,
        kind="line",
        title=title,
        x_label="interval",
        y_label="accuracy",
        series=[ChartSeries(name="accuracy", x=xs, y=ys, element_ids=ids, y_unit="fraction")],
        elements=elements,
    )


def _per_objective_bar(
    entry: dict,
    chart_id: str,
    title: str,
    unit_objs: list[str],
    unit_id: str,
    value_of,
    metric: str,
    prefix: str,
    y_label: str,
    y_unit: str,
) -> ChartSpec:
    xs, ys, ids, elements = [], [], [], {}
    for obj in unit_objs:
        eid = f"{prefix}{obj}"
        xs.append(obj)
        ys.append(value_of(obj))
        ids.append(eid)
        elements[eid] = _element([obj], unit_id, metric)
    return ChartSpec(
        chart_id=chart_id,
        kind="bar",
        title=title,
        x_label="objective",
        y_label=y_label,
        series=[ChartSeries(name=y_label, x=xs, y=ys, element_ids=ids, y_unit=y_unit)],
        elements=elements,
    )


def _test_comparison_chart(entry: dict, unit_objs: list[str], unit_id: str) -> ChartSpec | None:
    cohort = entry["cohort"]
    you_ys, peer_ys, you_ids, peer_ids, xs = [], [], [], [], []
    elements = {}
    any_data = False
    for obj in unit_objs:
        ind = entry["indicators"][obj]
        cell = cohort.get(f"{obj}|{OVERALL}|test")
        you = ind.get("test_accuracy")
        peer = cell["mean_accuracy"] if cell else None
        if you is not None:
            any_data = True
        xs.append(obj)
        you_ys.append(you)
        peer_ys.append(peer)
        eid_you, eid_peer = f"el-testacc-{obj}", f"el-peeracc-{obj}"
        you_ids.append(eid_you)
        peer_ids.append(eid_peer)
        elements[eid_you] = _element([obj], unit_id, "test_accuracy")
        elements[eid_peer] = _element([obj], unit_id, "peer_test_accuracy")
    if not any_data:
        return None
    return ChartSpec(
        chart_id="chart-s8-test-peers",
        kind="bar",
        title="Test accuracy, you against the cohort",
        x_label="objective",
        y_label="accuracy",
        series=[
            ChartSeries(name="you", x=xs, y=you_ys, element_ids=you_ids, y_unit="fraction"),
            ChartSeries(name="peer average", x=xs, y=peer_ys, element_ids=peer_ids, y_unit="fraction"),
        ],
        elements=elements,
    )


def _radial(entry: dict, unit_objs: list[str], unit_id: str) -> ChartSpec:
    xs, ys, ids, elements = [], [], [], {}
    for obj in unit_objs:
        eid = f"el-mastery-{obj}"
        xs.append(obj)
        ys.append(entry["indicators"][obj].get("mastery"))
        ids.append(eid)
        elements[eid] = _element([obj], unit_id, "mastery")
    return ChartSpec(
        chart_id="chart-s9-mastery",
        kind="radial_progress",
        title="Realized mastery per objective",
        x_label="objective",
        y_label="mastery",
        series=[ChartSeries(name="mastery", x=xs, y=ys, element_ids=ids, y_unit="fraction")],
        elements=elements,
    )


# ---------------------------------------------------------------------------
# Insight verbalization
# ---------------------------------------------------------------------------

_MEASURE_PHRASE = {
    MEASURE_COUNT: "attempt volume",
    MEASURE_DURATION: "time per question",
    MEASURE_ACCURACY: "accuracy",
}
_MODE_PHRASE = {"exercise": "practice only", "test": "test only", "all": "practice and test combined"}


def _measure_display(measure: str, value: float) -> tuple[str, str]:
    """(display string, unit suffix) for one value of a measure."""
    if measure == MEASURE_ACCURACY:
        return fmt_pct(value), "%"
    if measure == MEASURE_DURATION:
        return fmt_num(value, 1), " s"
    return fmt_num(value, 1), ""


def verbalize_insight(insight: Insight, templates: dict) -> tuple[str, dict]:
    """Render one insight sentence; returns (text, display payload)."""
    sub = insight.subspace
    scope = sub.objective if sub.objective else "all objectives"
    slots: dict[str, str] = {
        "measure_phrase": _MEASURE_PHRASE[sub.measure],
        "mode_phrase": _MODE_PHRASE[sub.mode],
        "scope_phrase": scope,
    }
    display: dict[str, str] = {}
    ev = insight.evidence
    if insight.kind == "trend":
        value, unit = _measure_display(sub.measure, abs(ev["slope"]))
        slots["direction_word"] = "climbed" if ev["slope"] > 0 else "slid"
        slots["slope_display"] = display["slope_display"] = value
        slots["slope_unit"] = ("percentage points" if sub.measure == MEASURE_ACCURACY else ("seconds" if sub.measure == MEASURE_DURATION else "attempts"))
    elif insight.kind == "outlier":
        value, unit = _measure_display(sub.measure, ev["value"])
        median, _ = _measure_display(sub.measure, ev["median"])
        slots["index_display"] = display["index_display"] = str(ev["index"])
        slots["value_display"] = display["value_display"] = value
        slots["median_display"] = display["median_display"] = median
        slots["value_unit"] = unit
    elif insight.kind == "change_point":
        before, unit = _measure_display(sub.measure, ev["before_mean"])
        after, _ = _measure_display(sub.measure, ev["after_mean"])
        slots["index_display"] = display["index_display"] = str(ev["index"])
        slots["before_display"] = display["before_display"] = before
        slots["after_display"] = display["after_display"] = after
        slots["value_unit"] = unit
    elif insight.kind == "low_variance":
        mean, unit = _measure_display(sub.measure, ev["mean"])
        slots["mean_display"] = display["mean_display"] = mean
        slots["value_unit"] = unit
    elif insight.kind == KIND_MAJORITY:
        slots["objective"] = ev["objective"]
        slots["share_pct"] = display["share_pct"] = fmt_pct(ev["share"])
    text = templates["insights"][insight.kind].format(**slots)
    return text, display


def enrich_insight(insight: Insight, templates: dict) -> dict:
    text, display = verbalize_insight(insight, templates)
    doc = insight.to_dict()
    doc["text"] = text
    doc["display"] = display
    return doc


# ---------------------------------------------------------------------------
# Stage planning
# ---------------------------------------------------------------------------


@dataclass
class StagePlan:
    stage_id: str
    phase: str
    info_group: str
    title: str
    transitional: bool
    slots: dict
    data: dict
    insights: list[dict]
    feedback: list[dict]
    charts: list[ChartSpec]


def _feedback_sentence(item: dict, templates: dict) -> str:
    return templates["feedback"][item["category"]].format(
        label=item["label"],
        objective_id=item["objective_id"],
        praise=item["praise"] or "",
        gap=item["gap"] or "",
        action=item["action"],
    )


def plan_stages(
    entry: dict,
    graph: ObjectiveGraph,
    diagnoses: list[ObjectiveDiagnosis],
    top_insights: list[Insight],
    feedback: list[FeedbackItem],
    config: EngineConfig,
    templates: dict | None = None,
) -> list[StagePlan]:
    """Bind content to the twelve stages; no narrative text is produced here."""
    templates = templates or load_templates()
    unit_id = entry["unit_id"]
    unit = graph.unit(unit_id)
    unit_objs = list(unit.objectives)
    indicators = entry["indicators"]
    counts = entry["record_counts"]

    exercise_insights = [i for i in top_insights if i.subspace.mode != "test"]
    test_insights = [i for i in top_insights if i.subspace.mode == "test"]

    plans: list[StagePlan] = []

    def add(stage_id, transitional, slots=None, data=None, insights=None, feedback_items=None, charts=None):
        idx = int(stage_id[1:]) - 1
        _sid, phase, group = STAGES[idx]
        plans.append(
            StagePlan(
                stage_id=stage_id,
                phase=phase,
                info_group=group,
                title=templates["stages"][stage_id]["title"],
                transitional=transitional,
                slots=slots or {},
                data=data or {},
                insights=insights or [],
                feedback=feedback_items or [],
                charts=[c for c in (charts or []) if c is not None],
            )
        )

    # S1 — prior units
    summaries = [s for s in entry["unit_summaries"] if s["unit_id"] != unit_id]
    with_data = [s for s in summaries if s["attempts"] > 0]
    strong = [s for s in with_data if s["accuracy"] is not None and s["accuracy"] >= 0.8]
    weak = [s for s in with_data if s["accuracy"] is not None and s["accuracy"] < 0.6]
    if with_data:
        strong_sentence = ""
        if strong:
            names = ", ".join(f"{s['title']} ({s['accuracy_pct_round']}%)" for s in strong)
            strong_sentence = f"Units you have handled well stand behind you: {names}. "
        weak_sentence = ""
        if weak:
            names = "; ".join(
                f"{s['title']}, where you scored about {s['accuracy_pct_round']}%" for s in weak
            )
            weak_sentence = f"Rockier ground remains: {names}."
        add(
            "S1",
            False,
            slots={"strong_units_sentence": strong_sentence, "weak_units_sentence": weak_sentence},
            data={"unit_summaries": entry["unit_summaries"]},
            charts=[_unit_map_chart(entry, graph)],
        )
    else:
        add("S1", True, charts=[_unit_map_chart(entry, graph)])

    # S2 — unit objectives
    objective_list = "; ".join(f"{o} — {graph.objectives[o].label}" for o in unit_objs)
    add(
        "S2",
        False,
        slots={
            "unit_title": entry["unit_title"],
            "objective_count": str(len(unit_objs)),
            "objective_list": objective_list,
        },
        data={
            "unit_id": unit_id,
            "unit_title": entry["unit_title"],
            "objective_count": len(unit_objs),
            "objectives": [{"id": o, "label": graph.objectives[o].label} for o in unit_objs],
        },
    )

    # S3 — challenge framing from the question bank
    rewards = {
        obj: indicators[obj].get("reward_score")
        for obj in unit_objs
        if indicators[obj].get("reward_score") is not None
    }
    if rewards:
        hardest = max(rewards, key=lambda o: (rewards[o], o))
        shares = {
            obj: indicators[obj]["difficulty_profile"]["hard"]
            for obj in unit_objs
            if indicators[obj].get("difficulty_profile")
        }
        hard_share_obj = max(shares, key=lambda o: (shares[o], o))
        reward_payload = {
            obj: {
                "potential_reward": rewards.get(obj),
                "potential_reward_display": fmt_num(rewards[obj], 4) if obj in rewards else None,
                "hard_share": shares.get(obj),
                "hard_share_pct": fmt_pct(shares[obj]) if obj in shares else None,
                "profile": indicators[obj].get("difficulty_profile"),
            }
            for obj in unit_objs
        }
        add(
            "S3",
            False,
            slots={
                "hardest_sentence": (
                    f"{graph.objectives[hardest].label} ({hardest}) carries the highest challenge "
                    f"score at {reward_payload[hardest]['potential_reward_display']} — potential reward, "
                    f"not yet a realized one."
                ),
                "hard_share_sentence": (
                    f"And {reward_payload[hard_share_obj]['hard_share_pct']}% of the question bank "
                    f"behind {hard_share_obj} is rated hard."
                ),
            },
            data={"challenge": reward_payload},
            charts=[_difficulty_chart(entry, unit_objs, unit_id, graph)],
        )
    else:
        add("S3", True)

    # S4 — transitional by design (no lecture data exists in the record schema)
    add("S4", True)

    # S5 — exercise phase introduction
    if counts["exercise"] > 0:
        active = sum(1 for o in unit_objs if indicators[o]["exercise_attempts"] > 0)
        add(
            "S5",
            False,
            slots={
                "unit_title": entry["unit_title"],
                "exercise_attempts": str(counts["exercise"]),
                "active_objectives": str(active),
            },
            data={"exercise_attempts": counts["exercise"], "active_objectives": active},
        )
    else:
        add("S5", True)

    # S6 — exercise insights
    enriched_exercise = [enrich_insight(i, templates) for i in exercise_insights]
    if enriched_exercise:
        add(
            "S6",
            False,
            slots={"insight_sentences": " ".join(d["text"] for d in enriched_exercise)},
            insights=enriched_exercise,
            charts=[
                _interval_line_chart(
                    entry,
                    "chart-s6-exercise-accuracy",
                    "Practice accuracy over time",
                    f"{MODE_ALL}|exercise",
                    unit_objs,
                    unit_id,
                    "el-exacc-",
                ),
                _per_objective_bar(
                    entry,
                    "chart-s6-exercise-volume",
                    "Practice volume per objective",
                    unit_objs,
                    unit_id,
                    lambda o: indicators[o]["exercise_attempts"],
                    "exercise_attempts",
                    "el-excount-",
                    "attempts",
                    "count",
                ),
            ],
        )
    else:
        add("S6", True)

    # S7 — practice recap; a narrative beat with one number, no charts
    if counts["exercise"] > 0:
        add(
            "S7",
            False,
            slots={"total_practice": str(counts["exercise"])},
            data={"total_practice": counts["exercise"]},
        )
    else:
        add("S7", True)

    # S8 — the test, with peer comparison
    test_points = entry["series"].get(f"{MODE_ALL}|test", [])
    test_attempts = sum(p["count"] for p in test_points)
    if test_attempts > 0:
        correct = math.fsum(p["count"] * p["accuracy"] for p in test_points if p["count"])
        test_acc = correct / test_attempts
        peer_cells = [
            entry["cohort"].get(f"{obj}|{OVERALL}|test") for obj in unit_objs
        ]
        peer_values = [c["mean_accuracy"] for c in peer_cells if c]
        peer_acc = math.fsum(peer_values) / len(peer_values) if peer_values else None
        if peer_acc is None:
            vs_peer = "with no cohort to compare against"
            delta_pct = None
        else:
            delta = test_acc - peer_acc
            delta_pct = fmt_pct(abs(delta))
            if delta > 0:
                vs_peer = f"{delta_pct} points above the typical classmate"
            elif delta < 0:
                vs_peer = f"{delta_pct} points below the typical classmate"
            else:
                vs_peer = "right at the peer average"
        per_obj = {}
        for obj in unit_objs:
            ind = indicators[obj]
            cell = entry["cohort"].get(f"{obj}|{OVERALL}|test")
            per_obj[obj] = {
                "test_accuracy": ind.get("test_accuracy"),
                "test_accuracy_pct": fmt_pct(ind["test_accuracy"]) if ind.get("test_accuracy") is not None else None,
                "peer_accuracy": cell["mean_accuracy"] if cell else None,
                "peer_accuracy_pct": fmt_pct(cell["mean_accuracy"]) if cell else None,
            }
        objective_bits = ", ".join(
            f"{obj} at {per_obj[obj]['test_accuracy_pct']}%"
            for obj in unit_objs
            if per_obj[obj]["test_accuracy_pct"] is not None
        )
        enriched_test = [enrich_insight(i, templates) for i in test_insights]
        test_insight_text = " " + " ".join(d["text"] for d in enriched_test) if enriched_test else ""
        add(
            "S8",
            False,
            slots={
                "test_attempts": str(test_attempts),
                "test_accuracy_pct": fmt_pct(test_acc),
                "vs_peer_phrase": vs_peer,
                "test_objective_sentence": f"Objective by objective: {objective_bits}." if objective_bits else "",
                "test_insight_sentences": test_insight_text,
            },
            data={
                "test_attempts": test_attempts,
                "test_accuracy": test_acc,
                "test_accuracy_pct": fmt_pct(test_acc),
                "peer_test_accuracy": peer_acc,
                "peer_test_accuracy_pct": fmt_pct(peer_acc) if peer_acc is not None else None,
                "delta_pct": delta_pct,
                "per_objective": per_obj,
            },
            insights=enriched_test,
            charts=[
                _test_comparison_chart(entry, unit_objs, unit_id),
                _interval_line_chart(
                    entry,
                    "chart-s8-overall-accuracy",
                    "Accuracy across the whole unit, interval by interval",
                    f"{MODE_ALL}|{MODE_ALL}",
                    unit_objs,
                    unit_id,
                    "el-allacc-",
                ),
            ],
        )
    else:
        add("S8", True)

    # S9 — mastery summary; diagnosis payloads (ancestor findings capped at
    # three for density) ride along here
    masteries = {
        obj: indicators[obj].get("mastery") for obj in unit_objs if indicators[obj].get("mastery") is not None
    }
    if masteries:
        best = max(masteries, key=lambda o: (masteries[o], o))
        worst = min(masteries, key=lambda o: (masteries[o], o))
        trimmed = []
        for diag in diagnoses:
            doc = diag.to_dict()
            doc["ancestor_findings"] = doc["ancestor_findings"][:3]
            trimmed.append(doc)
        add(
            "S9",
            False,
            slots={
                "best_objective": f"{graph.objectives[best].label} ({best})",
                "best_mastery_pct": fmt_pct(masteries[best]),
                "worst_objective": f"{graph.objectives[worst].label} ({worst})",
                "worst_mastery_pct": fmt_pct(masteries[worst]),
            },
            data={
                "mastery": {
                    obj: {"mastery": m, "mastery_pct": fmt_pct(m), "label": graph.objectives[obj].label}
                    for obj, m in masteries.items()
                },
                "diagnoses": trimmed,
            },
            charts=[_radial(entry, unit_objs, unit_id)],
        )
    else:
        add("S9", True)

    # S10 — transitional by design
    add("S10", True)

    # S11 — feedback
    items = [item.to_dict() for item in feedback]
    if items:
        sentences = " ".join(_feedback_sentence(item, templates) for item in items)
        add("S11", False, slots={"feedback_sentences": sentences}, feedback_items=items)
    else:
        add("S11", True)

    # S12 — forward-looking close
    if masteries:
        focus = min(masteries, key=lambda o: (masteries[o], o))
        add(
            "S12",
            False,
            slots={"focus_objective": f"{graph.objectives[focus].label} ({focus})"},
            data={
                "focus_objective": {
                    "id": focus,
                    "label": graph.objectives[focus].label,
                    "mastery": masteries[focus],
                    "mastery_pct": fmt_pct(masteries[focus]),
                }
            },
        )
    else:
        add("S12", True)

    return plans


# ---------------------------------------------------------------------------
# Narrative backends
# ---------------------------------------------------------------------------


class TemplateBackend:
    """Deterministic slot filling; never performs network activity."""

    mode = "template"

    def __init__(self, templates: dict | None = None):
        self.templates = templates or load_templates()

    def render(self, plan: StagePlan) -> str:
        stage = self.templates["stages"][plan.stage_id]
        if plan.transitional:
            return stage["transitional"]
        return stage["narrative"].format(**plan.slots)


class RemoteLlmBackend:
    """Optional LLM narration; prompts carry anonymized tokens only.

    The transport is any callable(prompt) -> text. Responses must echo every
    numeral the structured layer injected, otherwise the caller falls back to
    the template for that stage.
    """

    mode = "llm"

    def __init__(self, endpoint: str | None = None, transport=None, timeout: float = 10.0):
        if transport is None and endpoint is None:
            raise ValueError("RemoteLlmBackend needs an endpoint or a transport callable")
        self.endpoint = endpoint
        self.timeout = timeout
        self._transport = transport

    def transport(self, prompt: str) -> str:
        if self._transport is not None:
            return self._transport(prompt)
        response = httpx.post(self.endpoint, json={"prompt": prompt}, timeout=self.timeout)
        response.raise_for_status()
        return response.json()["text"]

    def build_prompt(self, plan: StagePlan, student_token: str, template_text: str) -> str:
        payload = {
            "student": student_token,
            "stage": plan.stage_id,
            "stage_title": plan.title,
            "data": plan.data,
            "insights": plan.insights,
            "feedback": plan.feedback,
        }
        return (
            "Rewrite the stage narrative below in a warm, second-person voice. "
            "Use ONLY the numbers present in the structured data; echo each one exactly. "
            "Do not invent values. Do not use any personal name; the student is "
            f"identified only as {student_token}.\n"
            f"STRUCTURED DATA: {json.dumps(payload, sort_keys=True)}\n"
            f"BASE NARRATIVE: {template_text}"
        )

    def render(self, plan: StagePlan, student_token: str, template_text: str) -> str:
        return self.transport(self.build_prompt(plan, student_token, template_text))


# ---------------------------------------------------------------------------
# Report assembly
# ---------------------------------------------------------------------------


def render_report(
    plans: list[StagePlan],
    entry: dict,
    config: EngineConfig,
    backend: RemoteLlmBackend | None = None,
    now: datetime | None = None,
    templates: dict | None = None,
) -> dict:
    """Fill narratives and assemble the final report document."""
    templates = templates or load_templates()
    template_backend = TemplateBackend(templates)
    fallback_stages: list[str] = []
    stages = []
    registry: dict[str, dict] = {}

    for plan in plans:
        base_text = template_backend.render(plan)
        narrative = base_text
        if backend is not None:
            required = extract_numerals(base_text)
            try:
                candidate = backend.render(plan, entry["student_token"], base_text)
                if all(num in candidate for num in required):
                    narrative = candidate
                else:
                    fallback_stages.append(plan.stage_id)
            except Exception:
                fallback_stages.append(plan.stage_id)

        chart_dicts = []
        for chart in plan.charts:
            problems = chart.validate()
            if problems:
                raise ValueError(f"invalid chart spec: {problems}")
            for eid, element in chart.elements.items():
                registry[eid] = {**element, "stage_id": plan.stage_id}
            chart_dicts.append(chart.to_dict())

        stages.append(
            {
                "stage_id": plan.stage_id,
                "phase": plan.phase,
                "info_group": plan.info_group,
                "title": plan.title,
                "transitional": plan.transitional,
                "narrative": narrative,
                "insights": plan.insights,
                "feedback": plan.feedback,
                "data": plan.data,
                "charts": chart_dicts,
            }
        )

    generated_at = (now or datetime.now(timezone.utc)).isoformat().replace("+00:00", "Z")
    return {
        "schema_version": SCHEMA_VERSION,
        "metadata": {
            "student_token": entry["student_token"],
            "unit_id": entry["unit_id"],
            "unit_title": entry["unit_title"],
            "generated_at": generated_at,
            "engine_version": __version__,
            "backend_mode": backend.mode if backend is not None else "template",
            "fallback_stages": fallback_stages,
        },
        "stages": stages,
        "sidebar": [
            {"stage_id": s["stage_id"], "title": s["title"], "info_group": s["info_group"]}
            for s in stages
        ],
        "registry": registry,
    }


def document_json(doc: dict, exclude_timestamp: bool = False) -> str:
    """Canonical serialization; optionally stable across generation times."""
    if exclude_timestamp:
        doc = json.loads(json.dumps(doc))
        doc["metadata"]["generated_at"] = None
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def audit_narrative_numbers(doc: dict) -> list[dict]:
    """Numerals in narrative text must exist in the structured payloads."""
    structured = json.dumps(
        [[s["insights"], s["feedback"], s["data"]] for s in doc["stages"]], sort_keys=True
    )
    violations = []
    for stage in doc["stages"]:
        for numeral in extract_numerals(stage["narrative"]):
            if numeral not in structured:
                violations.append({"stage_id": stage["stage_id"], "numeral": numeral})
    return violations


def structure_check(doc: dict) -> list[str]:
    """The fixed 12-stage shape: phases (3,3,3,3), info groups (3,6,3)."""
    problems = []
    if len(doc["stages"]) != 12:
        problems.append(f"expected twelve stages, found {len(doc['stages'])}")
    expected = [(sid, phase, group) for sid, phase, group in STAGES]
    got = [(s["stage_id"], s["phase"], s["info_group"]) for s in doc["stages"]]
    if got != expected:
        problems.append("stage order, phases, or info groups deviate from the fixed table")
    seen_insights: set[str] = set()
    for stage in doc["stages"]:
        for insight in stage["insights"]:
            if insight["id"] in seen_insights:
                problems.append(f"insight {insight['id']} embedded in more than one stage")
            seen_insights.add(insight["id"])
    return problems
