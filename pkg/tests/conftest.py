from __future__ import annotations

import pytest

from questlog.model import LearningObjective, ObjectiveGraph, Unit


@pytest.fixture
def diamond_graph():
    """A -> B, A -> C, B -> D, C -> D."""
    ids = ("A", "B", "C", "D")
    objectives = [LearningObjective(i, f"label {i}", "U1") for i in ids]
    units = [Unit("U1", "Unit one", ids)]
    edges = [("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")]
    return ObjectiveGraph.build(objectives, units, edges)
