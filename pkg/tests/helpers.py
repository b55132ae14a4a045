from __future__ import annotations

from datetime import datetime, timedelta, timezone

from questlog.model import (
    AttemptRecord,
    Difficulty,
    LearningObjective,
    Mode,
    ObjectiveGraph,
    Unit,
)

T0 = datetime(2024, 1, 1, tzinfo=timezone.utc)


def make_record(
    student="s1",
    question="q1",
    at=T0,
    duration=60.0,
    correct=True,
    objectives=("A",),
    difficulty=Difficulty.MEDIUM,
    mode=Mode.EXERCISE,
):
    return AttemptRecord(
        student_id=student,
        question_id=question,
        timestamp=at,
        duration=duration,
        correct=correct,
        objectives=frozenset(objectives),
        difficulty=difficulty,
        mode=mode,
    )


def chain_graph(*ids, unit_id="U1"):
    """A -> B -> C ... prerequisite chain inside one unit."""
    objectives = [LearningObjective(i, f"label {i}", unit_id) for i in ids]
    units = [Unit(unit_id, f"Unit {unit_id}", tuple(ids))]
    edges = [(ids[i], ids[i + 1]) for i in range(len(ids) - 1)]
    return ObjectiveGraph.build(objectives, units, edges)


def minutes(n: float) -> timedelta:
    return timedelta(minutes=n)


def at_day(day: int, hour: int = 12) -> datetime:
    return T0 + timedelta(days=day, hours=hour)
