#!/usr/bin/env python3
"""The full journey: a 12-stage report document, then grounded follow-ups.

Renders the report with the deterministic template backend, prints the stage
skeleton and a few narratives, then asks the question-answering engine three
selection-grounded questions.
"""

import json

from questlog.cache import build_entry
from questlog.config import EngineConfig
from questlog.qa import QARequest, answer, resolve_selection
from questlog.report import generate_report
from questlog.story import audit_narrative_numbers
from questlog.synth import STEVEN_ID, synthesize

graph, records, catalog = synthesize(seed=1729, cohort=25)
config = EngineConfig()
entry = build_entry(STEVEN_ID, "U7", records, graph, catalog, config)
doc = generate_report(entry, graph, config)

print(f"report for {doc['metadata']['student_token']} on {doc['metadata']['unit_title']}\n")
for stage in doc["stages"]:
    marker = "~" if stage["transitional"] else "*"
    extras = []
    if stage["insights"]:
        extras.append(f"{len(stage['insights'])} insights")
    if stage["feedback"]:
        extras.append(f"{len(stage['feedback'])} feedback items")
    if stage["charts"]:
        extras.append(", ".join(c["kind"] for c in stage["charts"]))
    print(f" {marker} {stage['stage_id']:4s} {stage['title']:30s} {'; '.join(extras)}")

print("\nS1 narrative:", doc["stages"][0]["narrative"], "\n")
print("S6 narrative:", doc["stages"][5]["narrative"], "\n")

# every numeral in the narrative is backed by a structured payload
print("number-provenance audit:", audit_narrative_numbers(doc) or "clean")

# selection-grounded Q&A: select the Unit 3 node on the journey map and ask why
questions = [
    (["el-unit-U3"], "Why is my overall accuracy in Unit 3 so low?"),
    (["el-mastery-S1205"], "How does my performance compare with other students?"),
    (["el-unit-U7"], "Show me the average number of problems solved per objective"),
]
for selection, question in questions:
    resolved, unit = resolve_selection(doc, selection)
    response = answer(doc, QARequest("demo", tuple(selection), question), entry, graph, config)
    print(f"\nQ: {question}")
    print(f"   selection {selection} -> {resolved} (unit {unit}), intent={response.grounding['intent']}")
    print(f"A: {response.answer}")
    if response.charts:
        print(f"   + {response.charts[0]['kind']} chart: {response.charts[0]['title']}")
