"""Acceptance suite: one test per release criterion, one printed line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the PASS/FAIL lines.
"""

from __future__ import annotations

import functools
import json
import math
import random
import re
import time
from datetime import datetime, timedelta, timezone

import pytest

import test_insights as oracles
from questlog.aggregate import IntervalScheme, SeriesSubject, build_series
from questlog.cache import build_entry, bundle_from_entry, refresh_cache
from questlog.config import EngineConfig
from questlog.formative import diagnose
from questlog.insights import MEASURES, MinerConfig, SeriesBundle, mine_top_k
from questlog.io import FileRecordStore, load_catalog, load_graph, load_records
from questlog.model import (
    LearningObjective,
    Mode,
    ObjectiveGraph,
    Unit,
    validate_graph,
)
from questlog.qa import QARequest, answer, audit_answer_numbers, resolve_selection
from questlog.report import generate_report
from questlog.story import (
    RemoteLlmBackend,
    audit_narrative_numbers,
    document_json,
    extract_numerals,
    structure_check,
)
from questlog.synth import STEVEN_ID, synthesize, write_dataset

from helpers import make_record, T0

NOW = datetime(2024, 4, 1, tzinfo=timezone.utc)


def criterion(name):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"[ACCEPTANCE] {name}: FAIL")
                raise
            print(f"[ACCEPTANCE] {name}: PASS")
            return result

        return wrapper

    return decorate


@pytest.fixture(scope="module")
def steven_files(tmp_path_factory):
    out = tmp_path_factory.mktemp("steven")
    write_dataset(out, seed=1729, cohort=200, scenario="steven")
    graph = load_graph(out / "graph.json")
    records = load_records(out / "records.ndjson")
    catalog = load_catalog(out / "catalog.ndjson")
    return out, graph, records, catalog


@pytest.fixture(scope="module")
def steven_entry(steven_files):
    _out, graph, records, catalog = steven_files
    config = EngineConfig()
    return config, build_entry(STEVEN_ID, "U7", records, graph, catalog, config)


@pytest.fixture(scope="module")
def steven_doc(steven_files, steven_entry):
    _out, graph, _records, _catalog = steven_files
    config, entry = steven_entry
    return generate_report(entry, graph, config, now=NOW)


# ---------------------------------------------------------------------------
# 1. Formula fidelity (tolerance 1e-9; >= 1,000 randomized cases; < 10 s)
# ---------------------------------------------------------------------------


@criterion("formula fidelity")
def test_formula_fidelity():
    start = time.perf_counter()

    # hand-built fixture: closed-form N, mean duration, accuracy
    records = [
        make_record(question="q1", at=T0, duration=100.0, correct=True),
        make_record(question="q2", at=T0 + timedelta(hours=1), duration=140.0, correct=True),
        make_record(question="q3", at=T0 + timedelta(days=8), duration=90.0, correct=False),
    ]
    scheme = IntervalScheme(origin=T0, width=timedelta(days=7), count=2)
    series = build_series(records, scheme, SeriesSubject("s1", ("A",), "all"))
    assert series.points[0].count == 2
    assert abs(series.points[0].mean_duration - 120.0) < 1e-9
    assert abs(series.points[0].accuracy - 1.0) < 1e-9
    assert series.points[1].count == 1
    assert abs(series.points[1].accuracy - 0.0) < 1e-9

    rng = random.Random(20240101)
    for case in range(1000):
        n = rng.randint(1, 40)
        k = rng.randint(1, 6)
        recs = [
            make_record(
                question=f"q{case}_{i}",
                at=T0 + timedelta(days=rng.uniform(0, 7 * k - 0.01)),
                duration=rng.uniform(1, 500),
                correct=rng.random() < 0.5,
            )
            for i in range(n)
        ]
        scheme = IntervalScheme(origin=T0, width=timedelta(days=7), count=k)
        series = build_series(recs, scheme, SeriesSubject("s1", ("A",), "all"))

        # conservation of attempts
        assert series.total_count() == n

        # per-interval formulas against a flat scan
        for idx, point in enumerate(series.points):
            cell = [r for r in recs if scheme.index_of(r.timestamp) == idx]
            assert point.count == len(cell)
            if cell:
                assert abs(point.mean_duration - sum(r.duration for r in cell) / len(cell)) < 1e-9
                assert abs(point.accuracy - sum(r.correct for r in cell) / len(cell)) < 1e-9
                assert 0.0 <= point.accuracy <= 1.0
                assert point.mean_duration >= 0.0

        # weighted merge: collapsing all intervals equals the count-weighted mean
        merged = build_series(recs, IntervalScheme(origin=T0, width=timedelta(days=7 * k), count=1),
                              SeriesSubject("s1", ("A",), "all"))
        weighted = [
            (p.count, p.accuracy, p.mean_duration) for p in series.points if p.count
        ]
        total = sum(w for w, _a, _d in weighted)
        acc = sum(w * a for w, a, _d in weighted) / total
        dur = sum(w * d for w, _a, d in weighted) / total
        assert abs(merged.points[0].accuracy - acc) < 1e-9
        assert abs(merged.points[0].mean_duration - dur) < 1e-9

    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"formula fidelity took {elapsed:.2f}s"


# ---------------------------------------------------------------------------
# 2. Steven fixture reproduction (< 5 s)
# ---------------------------------------------------------------------------


@criterion("steven fixture reproduction")
def test_steven_fixture_reproduction(steven_files):
    start = time.perf_counter()
    _out, graph, records, catalog = steven_files

    steven = [r for r in records if r.student_id == STEVEN_ID]
    scheme = IntervalScheme.covering(steven)

    # S1102 exercise-mode accuracy is exactly 15/16 = 0.9375
    s1102 = build_series(steven, scheme, SeriesSubject(STEVEN_ID, ("S1102",), "exercise"))
    assert s1102.overall_accuracy() == 0.9375
    assert s1102.total_count() == 16

    # every Unit 3 objective accuracy lies in [0.24, 0.25]
    for obj in ("N1114", "N1115", "N1136"):
        acc = build_series(steven, scheme, SeriesSubject(STEVEN_ID, (obj,), "all")).overall_accuracy()
        assert 0.24 <= acc <= 0.25, f"{obj} accuracy {acc}"

    # S1206 hard-question share is exactly 0.4902
    s1206_questions = catalog.questions_for("S1206")
    hard = sum(1 for q in s1206_questions if q.difficulty.value == "hard")
    assert hard / len(s1206_questions) == 0.4902

    # all four Unit 7 test accuracies strictly above 0.80
    for obj in ("S1102", "S1205", "S1206", "S2106"):
        acc = build_series(steven, scheme, SeriesSubject(STEVEN_ID, (obj,), "test")).overall_accuracy()
        assert acc is not None and acc > 0.80, f"{obj} test accuracy {acc}"

    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"steven reproduction took {elapsed:.2f}s"


# ---------------------------------------------------------------------------
# 3. Insight oracle equivalence (>= 500 series, K <= 8, 1e-12; < 60 s)
# ---------------------------------------------------------------------------


@criterion("insight oracle equivalence")
def test_insight_oracle_equivalence():
    start = time.perf_counter()
    rng = oracles.OracleRng(424242)
    series_seen = 0
    bundles = 0
    trial = 0
    while series_seen < 500:
        k_intervals = 3 + rng.below(6)  # 3..8 intervals
        n_objs = 2 + rng.below(3)  # 2..4 objectives
        per_obj = {}
        for o in range(n_objs):
            attempts = [
                (rng.below(k_intervals), rng.below(10) < 6, 10.0 + rng.below(300))
                for _ in range(4 + rng.below(24))
            ]
            per_obj[f"O{o}"] = attempts
        bundle = oracles._bundle_from_values(per_obj, k_intervals)
        series_seen += len(bundle.series)
        bundles += 1
        config = MinerConfig(floor=0.8, permutations=200, seed=1000 + trial, top_k=10_000)
        trial += 1

        mined = mine_top_k(bundle, config)
        expected = oracles._oracle_rank(bundle, config)

        assert len(mined) == len(expected)
        for insight, (score, kind, sub_key, sig) in zip(mined, expected):
            assert insight.kind == kind
            assert insight.subspace.sort_key() == sub_key
            assert abs(insight.score - score) <= 1e-12
            assert abs(insight.significance - sig) <= 1e-12

    assert series_seen >= 500
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"oracle equivalence took {elapsed:.2f}s over {bundles} bundles"


# ---------------------------------------------------------------------------
# 4. Top-k cardinality
# ---------------------------------------------------------------------------


@criterion("top-k cardinality")
def test_top_k_cardinality(steven_files, steven_entry, steven_doc):
    _out, graph, _records, _catalog = steven_files
    config, entry = steven_entry
    candidates = mine_top_k(bundle_from_entry(entry), config.miner(), k=10_000)
    assert len(candidates) >= 3, "fixture must offer at least three candidates over the floor"
    assert len(mine_top_k(bundle_from_entry(entry), config.miner())) == 3
    assert sum(len(s["insights"]) for s in steven_doc["stages"]) == 3


# ---------------------------------------------------------------------------
# 5. Report structure
# ---------------------------------------------------------------------------


@criterion("report structure")
def test_report_structure(steven_files, steven_entry, steven_doc):
    _out, graph, _records, _catalog = steven_files
    config, entry = steven_entry

    assert structure_check(steven_doc) == []
    phases = [s["phase"] for s in steven_doc["stages"]]
    assert [phases.count(p) for p in ("departure", "initiation", "unification", "return")] == [3, 3, 3, 3]
    groups = [s["info_group"] for s in steven_doc["stages"]]
    assert [groups.count(g) for g in ("overview_intro", "summary_info", "formative_guidance")] == [3, 6, 3]

    again = generate_report(entry, graph, config, now=datetime(2031, 5, 5, tzinfo=timezone.utc))
    assert document_json(steven_doc, exclude_timestamp=True) == document_json(again, exclude_timestamp=True)

    seen: set[str] = set()
    for stage in steven_doc["stages"]:
        for insight in stage["insights"]:
            assert insight["id"] not in seen
            seen.add(insight["id"])


# ---------------------------------------------------------------------------
# 6. Tri-level soundness (random DAGs <= 12 nodes, >= 200 cases; < 30 s)
# ---------------------------------------------------------------------------


def _closure_oracle(edges, node):
    preds = {}
    for f, t in edges:
        preds.setdefault(t, set()).add(f)
    seen = set()
    stack = [node]
    while stack:
        for p in preds.get(stack.pop(), ()):
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return seen


@criterion("tri-level soundness")
def test_tri_level_soundness():
    start = time.perf_counter()
    rng = random.Random(777)
    config = EngineConfig(permutations=24)  # traversal is under test, not p-values

    for case in range(200):
        n = rng.randint(2, 12)
        ids = [f"N{case}_{i}" for i in range(n)]
        edges = [
            (ids[i], ids[j])
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < 0.25
        ]
        objectives = [LearningObjective(i, i, "U1") for i in ids]
        units = [Unit("U1", "Unit 1", tuple(ids))]
        assert validate_graph(objectives, units, edges) == []
        graph = ObjectiveGraph.build(objectives, units, edges)

        records = []
        for i in range(rng.randint(10, 50)):
            n_tags = rng.randint(1, min(3, n))
            tags = tuple(rng.sample(ids, n_tags))
            records.append(
                make_record(
                    student="s1",
                    question=f"q{case}_{i}",
                    at=T0 + timedelta(days=rng.uniform(0, 27)),
                    duration=rng.uniform(5, 300),
                    correct=rng.random() < 0.6,
                    objectives=tags,
                    mode=Mode.EXERCISE if rng.random() < 0.8 else Mode.TEST,
                )
            )

        entry = build_entry("s1", "U1", records, graph, _catalog_for(records), config)
        diagnoses = diagnose(entry, graph, config)
        assert len(diagnoses) == n

        for diag in diagnoses:
            expected = _closure_oracle(edges, diag.objective_id)
            assert set(diag.ancestor_ids) == expected, diag.objective_id
            anc = set(diag.ancestor_ids)
            for finding in diag.associated_findings:
                members = set(finding.objectives)
                assert diag.objective_id in members
                assert not (members & anc), "associated set intersects the ancestor closure"

    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, f"tri-level soundness took {elapsed:.2f}s"


def _catalog_for(records):
    from questlog.model import QuestionCatalog

    return QuestionCatalog.from_records(records)


# ---------------------------------------------------------------------------
# 7. QA round-trip (three grounded queries; zero raw reads; < 100 ms each)
# ---------------------------------------------------------------------------


@criterion("qa round-trip")
def test_qa_round_trip(steven_files, steven_entry, steven_doc):
    out, graph, _records, _catalog = steven_files
    config, entry = steven_entry
    store = FileRecordStore(out / "records.ndjson")

    queries = [
        (("el-unit-U3",), "Why is my overall accuracy in Unit 3 so low?", {"N1114", "N1115", "N1136"}),
        (("el-mastery-S1205",), "How does my performance compare with other students?", {"S1205"}),
        (("el-mastery-S1102",), "Why did you suggest that next step for S1102?", {"S1102"}),
    ]

    # warmup excluded from timing
    answer(steven_doc, QARequest("r", ("el-unit-U3",), "why low"), entry, graph, config)

    for selection, question, expected_core in queries:
        request = QARequest("r", selection, question)
        t0 = time.perf_counter()
        response = answer(steven_doc, request, entry, graph, config)
        elapsed = time.perf_counter() - t0
        assert elapsed < 0.100, f"qa answer took {elapsed * 1000:.1f} ms"
        assert response.answer and isinstance(response.charts, list)
        resolved, _unit = resolve_selection(steven_doc, selection)
        assert expected_core <= set(resolved)
        assert expected_core <= set(response.grounding["objective_ids"])
        assert audit_answer_numbers(response) == []

    assert store.read_count == 0
    # the unit-3 resolution itself matches the three expected objectives
    resolved, unit = resolve_selection(steven_doc, ["el-unit-U3"])
    assert resolved == ["N1114", "N1115", "N1136"]
    assert unit == "U3"


# ---------------------------------------------------------------------------
# 8. Narrative number provenance
# ---------------------------------------------------------------------------


@criterion("narrative number provenance")
def test_narrative_number_provenance(steven_files, steven_entry, steven_doc):
    _out, graph, records, catalog = steven_files
    config, entry = steven_entry
    assert audit_narrative_numbers(steven_doc) == []

    # exercise-only variant (transitional S8)
    exercise_only = [r for r in records if r.mode.value != "test"]
    entry2 = build_entry(STEVEN_ID, "U7", exercise_only, graph, catalog, config)
    doc2 = generate_report(entry2, graph, config, now=NOW)
    assert audit_narrative_numbers(doc2) == []

    # baseline scenario document
    g3, r3, c3 = synthesize(seed=5, cohort=30, scenario="baseline", n_objectives=6)
    entry3 = build_entry("alex", "U1", r3, g3, c3, config)
    doc3 = generate_report(entry3, g3, config, now=NOW)
    assert audit_narrative_numbers(doc3) == []


# ---------------------------------------------------------------------------
# 9. Anonymization and LLM fallback
# ---------------------------------------------------------------------------


@criterion("anonymization and llm fallback")
def test_anonymization_and_fallback(steven_files, steven_entry):
    _out, graph, records, _catalog = steven_files
    config, entry = steven_entry

    raw_ids = sorted({r.student_id for r in records})
    assert STEVEN_ID in raw_ids
    pattern = re.compile("|".join(re.escape(s) for s in raw_ids), re.IGNORECASE)

    captured: list[str] = []

    def capturing_ok(prompt: str) -> str:
        captured.append(prompt)
        return prompt.split("BASE NARRATIVE: ", 1)[1]

    doc = generate_report(entry, graph, config, backend=RemoteLlmBackend(transport=capturing_ok), now=NOW)
    assert captured, "mock backend saw no prompts"
    for prompt in captured:
        assert not pattern.search(prompt), "raw student identifier found in a prompt"
    assert doc["metadata"]["fallback_stages"] == []

    def deficient(prompt: str) -> str:
        return re.sub(r"\d", "", prompt.split("BASE NARRATIVE: ", 1)[1])

    doc2 = generate_report(entry, graph, config, backend=RemoteLlmBackend(transport=deficient), now=NOW)
    number_bearing = [s["stage_id"] for s in doc2["stages"] if extract_numerals(s["narrative"])]
    assert doc2["metadata"]["fallback_stages"], "deficient responses must trigger fallback"
    assert set(number_bearing) <= set(doc2["metadata"]["fallback_stages"])
    assert audit_narrative_numbers(doc2) == []


# ---------------------------------------------------------------------------
# 10. Latency envelope (200 students, 10 objectives, 12 intervals; < 2 s)
# ---------------------------------------------------------------------------


@criterion("latency envelope")
def test_latency_envelope():
    graph, records, catalog = synthesize(seed=99, cohort=200, scenario="baseline", n_objectives=10)
    assert len(graph.unit("U1").objectives) == 10
    config = EngineConfig()

    import questlog.insights as insights_module

    insights_module._detector_memo.clear()  # cold caches; no head start

    t0 = time.perf_counter()
    entry = build_entry("alex", "U1", records, graph, catalog, config)
    assert entry["scheme"]["count"] == 12
    doc = generate_report(entry, graph, config)
    elapsed = time.perf_counter() - t0

    assert structure_check(doc) == []
    assert elapsed < 2.0, f"end-to-end generation took {elapsed:.2f}s"
