"""Selection-grounded question answering over a generated report.

A request names chart elements (or stage text spans) plus a free-text
question. The selection maps to objectives through the report's element
registry, the question maps to an intent through a fixed keyword table, and
the answer is composed from cache slices only: current objectives, their
prerequisite closure, their associated sets, and peer statistics. Every
numeral in the answer text is present in the grounding slices.

Intent keyword table (first match wins):

1. explain_suggestion: "why"/"explain" together with suggest/recommend
2. why_low_performance: "why" together with low/poor/weak/wrong/struggl/fail/miss
3. show_metric: show / how many / how much / average number / average problems
4. compare_to_peers: compare / peer / other students / others / classmates /
   cohort / average
5. trend_over_time: over time / progress / history / trend / improv
6. unknown otherwise

show_metric is checked before compare_to_peers so that "average number of
problems" reads as a metric request rather than a peer comparison.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass

from .aggregate import OVERALL
from .config import EngineConfig
from .errors import SelectionError
from .fmt import fmt_num, fmt_pct
from .formative import ols_slope
from .model import MODE_ALL, ObjectiveGraph, ancestors
from .story import ChartSeries, ChartSpec, load_templates

INTENT_WHY_LOW = "why_low_performance"
INTENT_COMPARE = "compare_to_peers"
INTENT_EXPLAIN = "explain_suggestion"
INTENT_SHOW = "show_metric"
INTENT_TREND = "trend_over_time"
INTENT_UNKNOWN = "unknown"

_NUMERAL = re.compile(r"(?<![A-Za-z0-9_.])\d+(?:\.\d+)?")


@dataclass(frozen=True)
class QARequest:
    report_id: str
    selection: tuple[str, ...]
    question: str

    @classmethod
    def from_dict(cls, doc: dict) -> "QARequest":
        return cls(
            report_id=str(doc.get("report_id", "")),
            selection=tuple(str(s) for s in doc.get("selection", [])),
            question=str(doc.get("question", "")),
        )


@dataclass
class QAResponse:
    answer: str
    charts: list[dict]
    grounding: dict
    backend_mode: str = "deterministic"
    fallback: bool = False

    def to_dict(self) -> dict:
        return {
            "answer": self.answer,
            "charts": self.charts,
            "grounding": self.grounding,
            "backend_mode": self.backend_mode,
            "fallback": self.fallback,
        }


# ---------------------------------------------------------------------------
# Selection and intent
# ---------------------------------------------------------------------------


def resolve_selection(doc: dict, selection: list[str] | tuple[str, ...]) -> tuple[list[str], str | None]:
    """Selected element ids -> (sorted objective ids, unit scope).

    "text:<stage id>" entries resolve to the stage's bound objective set;
    anything else must be a chart element id from the report registry.
    """
    registry = doc.get("registry", {})
    objectives: set[str] = set()
    units: set[str] = set()
    bad: list[str] = []
    stage_ids = {s["stage_id"] for s in doc.get("stages", [])}

    for sel in selection:
        if sel.startswith("text:"):
            stage_id = sel.split(":", 1)[1]
            if stage_id not in stage_ids:
                bad.append(sel)
                continue
            for eid, element in registry.items():
                if element["stage_id"] == stage_id:
                    objectives.update(element["objectives"])
                    if element.get("unit_id"):
                        units.add(element["unit_id"])
            for stage in doc["stages"]:
                if stage["stage_id"] != stage_id:
                    continue
                for insight in stage["insights"]:
                    if insight["subspace"]["objective"]:
                        objectives.add(insight["subspace"]["objective"])
                for item in stage["feedback"]:
                    objectives.add(item["objective_id"])
        elif sel in registry:
            element = registry[sel]
            objectives.update(element["objectives"])
            if element.get("unit_id"):
                units.add(element["unit_id"])
        else:
            bad.append(sel)

    if bad:
        raise SelectionError(bad)
    if not objectives:
        raise SelectionError(list(selection))
    unit_scope = sorted(units)[0] if len(units) == 1 else doc["metadata"]["unit_id"]
    return sorted(objectives), unit_scope


_EXPLAIN = re.compile(r"(why|explain).*(suggest|recommend)|(suggest|recommend).*why")
_WHY_LOW = re.compile(r"why.*(low|poor|weak|wrong|bad|struggl|fail|miss)|(low|poor|weak|wrong|struggl).*why")
_SHOW = re.compile(r"\bshow\b|how many|how much|average number|average problems")
_COMPARE = re.compile(r"compar|\bpeers?\b|other student|\bothers\b|classmate|cohort|average")
_TREND = re.compile(r"over time|progress|history|\btrend\b|improv")


def classify_intent(question: str) -> str:
    q = question.lower()
    if not q.strip():
        return INTENT_UNKNOWN
    if _EXPLAIN.search(q):
        return INTENT_EXPLAIN
    if _WHY_LOW.search(q):
        return INTENT_WHY_LOW
    if _SHOW.search(q):
        return INTENT_SHOW
    if _COMPARE.search(q):
        return INTENT_COMPARE
    if _TREND.search(q):
        return INTENT_TREND
    return INTENT_UNKNOWN


# ---------------------------------------------------------------------------
# Cache slice helpers
# ---------------------------------------------------------------------------


def _series_points(entry: dict, key: str) -> list[dict]:
    return entry["series"].get(key, [])


def _overall_from_series(points: list[dict]) -> dict:
    n = sum(p["count"] for p in points)
    if n == 0:
        return {"attempts": 0, "accuracy": None, "mean_duration": None}
    correct = math.fsum(p["count"] * p["accuracy"] for p in points if p["count"])
    duration = math.fsum(p["count"] * p["mean_duration"] for p in points if p["count"])
    return {"attempts": n, "accuracy": correct / n, "mean_duration": duration / n}


def objective_slice(entry: dict, obj: str) -> dict:
    """Everything known about one objective, with display strings attached."""
    ind = entry["indicators"].get(obj) or entry.get("ancestor_indicators", {}).get(obj)
    stats = _overall_from_series(_series_points(entry, f"{obj}|{MODE_ALL}"))
    if ind is None:
        ind = {}
    cell = entry.get("cohort", {}).get(f"{obj}|{OVERALL}|{MODE_ALL}")
    accuracy = ind.get("accuracy", stats["accuracy"]) if ind else stats["accuracy"]
    payload = {
        "objective_id": obj,
        "attempts": ind.get("attempts", stats["attempts"]),
        "accuracy": accuracy,
        "accuracy_pct": fmt_pct(accuracy) if accuracy is not None else None,
        "mastery": ind.get("mastery"),
        "mastery_pct": fmt_pct(ind["mastery"]) if ind.get("mastery") is not None else None,
        "velocity": ind.get("velocity"),
        "peer_accuracy": cell["mean_accuracy"] if cell else None,
        "peer_accuracy_pct": fmt_pct(cell["mean_accuracy"]) if cell else None,
        "peer_mean_count": cell["mean_count"] if cell else None,
        "peer_mean_count_display": fmt_num(cell["mean_count"], 1) if cell else None,
        "cohort_size": cell["size"] if cell else None,
    }
    return payload


def _tri_level_slices(entry: dict, graph: ObjectiveGraph, objectives: list[str]) -> tuple[list[dict], set[str]]:
    """Current, predecessor, and associated slices for the resolved set."""
    slices: list[dict] = []
    cited: set[str] = set(objectives)
    for obj in objectives:
        slices.append({"label": f"current:{obj}", "payload": objective_slice(entry, obj)})
    for obj in objectives:
        if not graph.has_objective(obj):
            continue
        chain = entry.get("ancestors", {}).get(obj)
        if chain is None:
            chain = ancestors(graph, obj)
        for anc in chain[:3]:
            if anc in cited:
                continue
            cited.add(anc)
            slices.append({"label": f"predecessor:{anc}", "payload": objective_slice(entry, anc)})
    for obj in objectives:
        for assoc in entry.get("associated_sets", {}).get(obj, []):
            members = [m for m in assoc["objectives"]]
            cited.update(members)
            key = "+".join(assoc["objectives"])
            stats = _overall_from_series(_series_points(entry, f"{key}|{MODE_ALL}"))
            slices.append(
                {
                    "label": f"associated:{key}",
                    "payload": {
                        "objectives": members,
                        "attempts": stats["attempts"],
                        "accuracy": stats["accuracy"],
                        "accuracy_pct": fmt_pct(stats["accuracy"]) if stats["accuracy"] is not None else None,
                    },
                }
            )
    return slices, cited


def _comparison_chart(chart_id: str, title: str, objectives: list[str], you: list, peers: list, unit_id: str | None, metric: str, y_label: str) -> dict:
    elements = {}
    you_ids, peer_ids = [], []
    for obj in objectives:
        you_ids.append(f"qa-{metric}-you-{obj}")
        peer_ids.append(f"qa-{metric}-peer-{obj}")
        elements[you_ids[-1]] = {"objectives": [obj], "unit_id": unit_id, "metric": metric}
        elements[peer_ids[-1]] = {"objectives": [obj], "unit_id": unit_id, "metric": f"peer_{metric}"}
    spec = ChartSpec(
        chart_id=chart_id,
        kind="bar",
        title=title,
        x_label="objective",
        y_label=y_label,
        series=[
            ChartSeries(name="you", x=list(objectives), y=you, element_ids=you_ids),
            ChartSeries(name="peer average", x=list(objectives), y=peers, element_ids=peer_ids),
        ],
        elements=elements,
    )
    return spec.to_dict()


def _line_chart(chart_id: str, title: str, obj_key: str, points: list[dict], unit_id: str | None) -> dict:
    xs, ys, ids, elements = [], [], [], {}
    for k, p in enumerate(points):
        eid = f"qa-line-{obj_key}-{k}"
        xs.append(k)
        ys.append(p["accuracy"])
        ids.append(eid)
        elements[eid] = {"objectives": obj_key.split("+"), "unit_id": unit_id, "metric": "accuracy_by_interval"}
    spec = ChartSpec(
        chart_id=chart_id,
        kind="line",
        title=title,
        x_label="interval",
        y_label="accuracy",
        series=[ChartSeries(name="accuracy", x=xs, y=ys, element_ids=ids, y_unit="fraction")],
        elements=elements,
    )
    return spec.to_dict()


# ---------------------------------------------------------------------------
# Answer composition
# ---------------------------------------------------------------------------


def _scope_phrase(doc: dict, objectives: list[str], unit_scope: str | None) -> str:
    if unit_scope and unit_scope != doc["metadata"]["unit_id"]:
        return f"{unit_scope} ({', '.join(objectives)})"
    if len(objectives) == 1:
        return objectives[0]
    return ", ".join(objectives)


def answer(
    doc: dict,
    request: QARequest,
    entry: dict,
    graph: ObjectiveGraph,
    config: EngineConfig,
    backend=None,
    templates: dict | None = None,
) -> QAResponse:
    """Deterministic tri-level answer; optional LLM rephrasing on top."""
    templates = templates or load_templates()
    qa_templates = templates["qa"]
    objectives, unit_scope = resolve_selection(doc, request.selection)
    intent = classify_intent(request.question)

    slices, cited = _tri_level_slices(entry, graph, objectives)
    unit_titles = {u["unit_id"]: u["title"] for u in entry["unit_summaries"]}
    selection_slice = {
        "label": "selection",
        "payload": {
            "objective_ids": objectives,
            "unit_id": unit_scope,
            "unit_title": unit_titles.get(unit_scope),
            "question": request.question,
        },
    }
    slices = [selection_slice] + slices
    by_label = {s["label"]: s["payload"] for s in slices}
    scope = _scope_phrase(doc, objectives, unit_scope)
    charts: list[dict] = []

    def current(obj: str) -> dict:
        return by_label[f"current:{obj}"]

    if intent == INTENT_WHY_LOW:
        with_acc = [o for o in objectives if current(o)["accuracy"] is not None]
        weakest = min(with_acc, key=lambda o: (current(o)["accuracy"], o)) if with_acc else objectives[0]
        weak_payload = current(weakest)
        cause_sentence = "Accuracy there trails the peer line, so focused practice should close the gap."
        for s in slices:
            if s["label"].startswith("predecessor:") and s["payload"]["mastery"] is not None:
                if s["payload"]["mastery"] < config.ancestor_threshold:
                    anc = s["payload"]
                    cause_sentence = (
                        f"A likely root sits earlier in the graph: {anc['objective_id']} is at "
                        f"{anc['mastery_pct']}% mastery, and the selected work builds on it."
                    )
                    break
        else:
            for s in slices:
                if s["label"].startswith("associated:") and s["payload"]["accuracy"] is not None and s["payload"]["accuracy"] < 0.6:
                    ids = ", ".join(s["payload"]["objectives"])
                    cause_sentence = (
                        f"Questions that combine {ids} run at {s['payload']['accuracy_pct']}% — "
                        f"the mix, not any single idea, is where accuracy drops."
                    )
                    break
        text = qa_templates[INTENT_WHY_LOW].format(
            scope_phrase=scope,
            weakest_label=graph.objectives[weakest].label if graph.has_objective(weakest) else weakest,
            weakest_id=weakest,
            weakest_pct=weak_payload["accuracy_pct"] or "0",
            peer_pct=weak_payload["peer_accuracy_pct"] or "0",
            cause_sentence=cause_sentence,
        )
        charts.append(
            _comparison_chart(
                "qa-chart-why-low",
                "Your accuracy against the peer average",
                objectives,
                [current(o)["accuracy"] for o in objectives],
                [current(o)["peer_accuracy"] for o in objectives],
                unit_scope,
                "accuracy",
                "accuracy",
            )
        )

    elif intent == INTENT_COMPARE:
        bits = []
        for o in objectives:
            p = current(o)
            if p["accuracy_pct"] is not None and p["peer_accuracy_pct"] is not None:
                bits.append(f"on {o} you sit at {p['accuracy_pct']}% against a peer average of {p['peer_accuracy_pct']}%")
        text = qa_templates[INTENT_COMPARE].format(
            scope_phrase=scope,
            comparison_sentence=("; ".join(bits) + ".") if bits else "no attempts are on record yet.",
        )
        charts.append(
            _comparison_chart(
                "qa-chart-peers",
                "You against the cohort",
                objectives,
                [current(o)["accuracy"] for o in objectives],
                [current(o)["peer_accuracy"] for o in objectives],
                unit_scope,
                "accuracy",
                "accuracy",
            )
        )

    elif intent == INTENT_EXPLAIN:
        item = None
        for stage in doc["stages"]:
            for fb in stage["feedback"]:
                if fb["objective_id"] in objectives:
                    item = fb
                    break
            if item:
                break
        if item is None:
            text = qa_templates[INTENT_UNKNOWN].format(
                scope_phrase=scope,
                summary_sentence="no recorded suggestion touches this selection.",
            )
        else:
            prov = item["provenance"]
            rationale_bits = []
            prov_display: dict[str, str] = {}
            if prov.get("mastery") is not None:
                prov_display["mastery_pct"] = fmt_pct(prov["mastery"])
                rationale_bits.append(f"mastery stands at {prov_display['mastery_pct']}%")
            if prov.get("velocity") is not None:
                prov_display["velocity_pct_per_interval"] = fmt_pct(prov["velocity"])
                rationale_bits.append(
                    f"accuracy is moving {prov_display['velocity_pct_per_interval']} points per interval"
                )
            if prov.get("flagged_ancestors"):
                rationale_bits.append(f"prerequisite gaps were flagged on {', '.join(prov['flagged_ancestors'])}")
            slices.append(
                {
                    "label": f"suggestion:{item['objective_id']}",
                    "payload": {**item, "provenance_display": prov_display},
                }
            )
            target = item["objective_id"]
            payload = objective_slice(entry, target)
            slices.append({"label": f"current:{target}:suggestion", "payload": payload})
            cited.add(target)
            text = qa_templates[INTENT_EXPLAIN].format(
                label=item["label"],
                objective_id=item["objective_id"],
                rationale_sentence=(", ".join(rationale_bits) + ".") if rationale_bits else "the category rule fired.",
            )
            charts.append(
                _comparison_chart(
                    "qa-chart-suggestion-gap",
                    "The gap behind the suggestion",
                    [target],
                    [prov.get("mastery")],
                    [payload.get("peer_accuracy")],
                    unit_scope,
                    "mastery",
                    "mastery",
                )
            )

    elif intent == INTENT_SHOW:
        q = request.question.lower()
        if any(w in q for w in ("time", "duration", "minute", "second")):
            metric, label = "mean_duration", "average time per question"
        elif any(w in q for w in ("accuracy", "correct", "score")):
            metric, label = "accuracy", "accuracy"
        else:
            metric, label = "count", "problems solved"
        bits = []
        you_vals, peer_vals = [], []
        for o in objectives:
            p = current(o)
            if metric == "count":
                you_val = p["attempts"]
                peer_val = p["peer_mean_count"]
                you_disp = str(p["attempts"])
                peer_disp = p["peer_mean_count_display"]
            elif metric == "accuracy":
                you_val, peer_val = p["accuracy"], p["peer_accuracy"]
                you_disp, peer_disp = p["accuracy_pct"], p["peer_accuracy_pct"]
            else:
                stats = _overall_from_series(_series_points(entry, f"{o}|{MODE_ALL}"))
                cell = entry.get("cohort", {}).get(f"{o}|{OVERALL}|{MODE_ALL}")
                you_val = stats["mean_duration"]
                peer_val = cell["mean_duration"] if cell else None
                you_disp = fmt_num(you_val, 1) if you_val is not None else None
                peer_disp = fmt_num(peer_val, 1) if peer_val is not None else None
                by_label[f"current:{o}"]["mean_duration"] = you_val
                by_label[f"current:{o}"]["mean_duration_display"] = you_disp
                by_label[f"current:{o}"]["peer_mean_duration"] = peer_val
                by_label[f"current:{o}"]["peer_mean_duration_display"] = peer_disp
            you_vals.append(you_val)
            peer_vals.append(peer_val)
            if you_disp is not None:
                piece = f"{o}: {you_disp}"
                if peer_disp is not None:
                    piece += f" (peer average {peer_disp})"
                bits.append(piece)
        text = qa_templates[INTENT_SHOW].format(
            metric_phrase=label,
            scope_phrase=scope,
            metric_sentence=("; ".join(bits) + ".") if bits else "no attempts are on record yet.",
        )
        charts.append(
            _comparison_chart(
                "qa-chart-metric",
                f"{label} per objective",
                objectives,
                you_vals,
                peer_vals,
                unit_scope,
                metric,
                label,
            )
        )

    elif intent == INTENT_TREND:
        joint_key = "+".join(objectives)
        if len(objectives) > 1 and f"{joint_key}|{MODE_ALL}" in entry["series"]:
            key = joint_key
        else:
            key = objectives[0]
        points = _series_points(entry, f"{key}|{MODE_ALL}")
        present = [(k, p["accuracy"]) for k, p in enumerate(points) if p["count"] > 0]
        slope = ols_slope(present)
        if slope is None:
            trend_sentence = "there are not enough scored intervals to read a direction yet."
        else:
            direction = "upward" if slope > 0 else ("downward" if slope < 0 else "flat")
            slope_disp = fmt_pct(abs(slope))
            trend_sentence = f"accuracy is tracking {direction}, about {slope_disp} percentage points per interval."
            by_label["selection"]["trend_slope"] = slope
            by_label["selection"]["trend_slope_display"] = slope_disp
        text = qa_templates[INTENT_TREND].format(scope_phrase=scope, trend_sentence=trend_sentence)
        if points:
            charts.append(_line_chart("qa-chart-trend", f"Accuracy over time: {key}", key, points, unit_scope))

    else:
        bits = []
        for o in objectives:
            p = current(o)
            if p["accuracy_pct"] is not None:
                bits.append(f"{o} sits at {p['accuracy_pct']}% over {p['attempts']} attempts")
        text = qa_templates[INTENT_UNKNOWN].format(
            scope_phrase=scope,
            summary_sentence=("; ".join(bits) + ".") if bits else "no attempts are on record for this selection.",
        )
        charts.append(
            _comparison_chart(
                "qa-chart-overview",
                "Accuracy across the selection",
                objectives,
                [current(o)["accuracy"] for o in objectives],
                [current(o)["peer_accuracy"] for o in objectives],
                unit_scope,
                "accuracy",
                "accuracy",
            )
        )

    grounding = {
        "objective_ids": sorted(cited),
        "intent": intent,
        "slices": slices,
    }
    response = QAResponse(answer=text, charts=charts, grounding=grounding)

    if backend is not None:
        required = _NUMERAL.findall(text)
        try:
            prompt = (
                "Answer the student's question using ONLY the data slices below; echo every number exactly. "
                f"The student is identified only as {entry['student_token']}.\n"
                f"QUESTION: {request.question}\nDATA: {json.dumps(slices, sort_keys=True)}\n"
                f"BASE ANSWER: {text}"
            )
            candidate = backend.transport(prompt)
            if candidate and all(num in candidate for num in required):
                response.answer = candidate
                response.backend_mode = "llm"
            else:
                response.fallback = True
        except Exception:
            response.fallback = True

    return response


def audit_answer_numbers(response: QAResponse | dict) -> list[str]:
    """Numerals in the answer must appear in the grounding slices."""
    doc = response.to_dict() if isinstance(response, QAResponse) else response
    blob = json.dumps(doc["grounding"]["slices"], sort_keys=True)
    return [num for num in _NUMERAL.findall(doc["answer"]) if num not in blob]
