from __future__ import annotations

import random

import pytest

from questlog.errors import UnknownObjectiveError
from questlog.model import (
    LearningObjective,
    ObjectiveGraph,
    Unit,
    ancestors,
    associated_set_counts,
    associated_sets,
    validate_graph,
)

from helpers import chain_graph, make_record


def _graph_parts(ids, edges, unit_id="U1"):
    objectives = [LearningObjective(i, i, unit_id) for i in ids]
    units = [Unit(unit_id, unit_id, tuple(ids))]
    return objectives, units, edges


def test_validate_accepts_acyclic_chain():
    parts = _graph_parts(["A", "B", "C"], [("A", "B"), ("B", "C")])
    assert validate_graph(*parts) == []


def test_validate_reports_two_cycle():
    parts = _graph_parts(["A", "B"], [("A", "B"), ("B", "A")])
    violations = validate_graph(*parts)
    assert len(violations) == 1
    assert violations[0].kind == "cycle"
    assert set(violations[0].subjects) == {"A", "B"}


def test_validate_reports_dangling_edge():
    parts = _graph_parts(["A"], [("A", "X")])
    kinds = {v.kind for v in validate_graph(*parts)}
    assert "dangling_edge" in kinds


def test_validate_reports_duplicate_and_orphan():
    objectives = [LearningObjective("A", "A", "U1"), LearningObjective("A", "A", "U1"), LearningObjective("B", "B", "U1")]
    units = [Unit("U1", "U1", ("A",))]  # B listed in no unit
    violations = validate_graph(objectives, units, [])
    kinds = {v.kind for v in violations}
    assert "duplicate_id" in kinds
    assert "orphan_objective" in kinds


def test_validate_reports_self_edge():
    parts = _graph_parts(["A"], [("A", "A")])
    kinds = {v.kind for v in validate_graph(*parts)}
    assert "self_edge" in kinds


def test_ancestors_linear_chain():
    graph = chain_graph("A", "B", "C")
    assert ancestors(graph, "C") == ["B", "A"]


def test_ancestors_isolated_node():
    graph = chain_graph("D")
    assert ancestors(graph, "D") == []


def test_ancestors_unknown_objective():
    graph = chain_graph("A")
    with pytest.raises(UnknownObjectiveError):
        ancestors(graph, "nope")


def _closure_oracle(edges: list[tuple[str, str]], node: str) -> set[str]:
    preds: dict[str, set[str]] = {}
    for f, t in edges:
        preds.setdefault(t, set()).add(f)

    seen: set[str] = set()

    def walk(n: str):
        for p in preds.get(n, ()):
            if p not in seen:
                seen.add(p)
                walk(p)

    walk(node)
    return seen


def test_ancestors_diamond_matches_closure_oracle(diamond_graph):
    got = ancestors(diamond_graph, "D")
    # nearest first: B and C at distance 1 (tie broken by id), then A
    assert got == ["B", "C", "A"]
    assert set(got) == _closure_oracle([("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")], "D")


def test_ancestors_monotone_on_random_dags():
    rng = random.Random(42)
    for _ in range(50):
        n = rng.randint(2, 10)
        ids = [f"N{i}" for i in range(n)]
        edges = [
            (ids[i], ids[j])
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < 0.3
        ]
        objectives = [LearningObjective(i, i, "U1") for i in ids]
        units = [Unit("U1", "U1", tuple(ids))]
        graph = ObjectiveGraph.build(objectives, units, edges)
        assert validate_graph(objectives, units, edges) == []
        for node in ids:
            anc = ancestors(graph, node)
            assert set(anc) == _closure_oracle(edges, node)
            for a in anc:
                assert set(ancestors(graph, a)) <= set(anc)


def test_validate_rejects_every_cyclic_graph():
    rng = random.Random(7)
    for _ in range(30):
        n = rng.randint(2, 8)
        ids = [f"N{i}" for i in range(n)]
        edges = [
            (ids[i], ids[j])
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < 0.3
        ]
        # close a cycle on a random pair
        i, j = sorted(rng.sample(range(n), 2))
        edges.append((ids[i], ids[j]))
        edges.append((ids[j], ids[i]))
        parts = _graph_parts(ids, edges)
        assert any(v.kind == "cycle" for v in validate_graph(*parts))


def test_associated_sets_discards_ancestor_bearing_sets(diamond_graph):
    # ancestors(C) == {A}; the {C, A} tag set must be discarded
    records = [
        make_record(question="q1", objectives=("C", "D")),
        make_record(question="q2", objectives=("C", "A")),
    ]
    assert associated_sets(records, diamond_graph, "C") == [frozenset({"C", "D"})]


def test_associated_sets_ignores_single_tag_records(diamond_graph):
    records = [make_record(objectives=("C",)), make_record(objectives=("C",))]
    assert associated_sets(records, diamond_graph, "C") == []


def test_associated_sets_orders_by_count_oracle():
    graph = chain_graph("C", "D", "E")  # C -> D -> E; query C has no ancestors
    records = (
        [make_record(question=f"a{i}", objectives=("C", "D", "E")) for i in range(3)]
        + [make_record(question="b0", objectives=("C", "D"))]
    )
    got = associated_sets(records, graph, "C")
    # brute-force count oracle
    counts: dict[frozenset, int] = {}
    for rec in records:
        if "C" in rec.objectives and len(rec.objectives) >= 2:
            counts[rec.objectives] = counts.get(rec.objectives, 0) + 1
    expected = sorted(counts, key=lambda s: (-counts[s], tuple(sorted(s))))
    assert got == expected == [frozenset({"C", "D", "E"}), frozenset({"C", "D"})]
    assert associated_set_counts(records, graph, "C") == [
        (frozenset({"C", "D", "E"}), 3),
        (frozenset({"C", "D"}), 1),
    ]


def test_associated_sets_always_contain_objective_and_no_ancestors(diamond_graph):
    rng = random.Random(3)
    ids = ["A", "B", "C", "D"]
    records = []
    for i in range(200):
        tags = rng.sample(ids, rng.randint(1, 3))
        records.append(make_record(question=f"q{i}", objectives=tuple(tags)))
    for node in ids:
        anc = set(ancestors(diamond_graph, node))
        for s in associated_sets(records, diamond_graph, node):
            assert node in s
            assert not (s & anc)
            assert len(s) >= 2
