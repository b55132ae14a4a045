"""Per-objective time-series aggregation and cohort statistics.

Each series point holds the attempt count, the mean duration, and the mean
accuracy of one student's attempts on one objective (or objective set) within
one time interval. Empty intervals keep the count at zero and leave the means
absent; a zero would fabricate a measurement that never happened.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

from .errors import ConfigError, UnknownObjectiveError
from .model import MODE_ALL, AttemptRecord, ObjectiveGraph


@dataclass(frozen=True)
class IntervalScheme:
    """K contiguous half-open intervals [origin + k*width, origin + (k+1)*width)."""

    origin: datetime
    width: timedelta
    count: int

    def __post_init__(self):
        if self.width <= timedelta(0):
            raise ConfigError("interval width must be positive")
        if self.count < 1:
            raise ConfigError("interval count must be at least 1")

    @classmethod
    def covering(cls, records: list[AttemptRecord], width: timedelta = timedelta(days=7)) -> "IntervalScheme":
        """Scheme aligned to the midnight (UTC) before the earliest record."""
        if not records:
            raise ConfigError("cannot derive an interval scheme from zero records")
        earliest = min(r.timestamp for r in records)
        latest = max(r.timestamp for r in records)
        origin = earliest.astimezone(timezone.utc).replace(hour=0, minute=0, second=0, microsecond=0)
        span = (latest - origin).total_seconds()
        count = max(1, math.floor(span / width.total_seconds()) + 1)
        return cls(origin=origin, width=width, count=count)

    def index_of(self, ts: datetime) -> int | None:
        """Interval index for a timestamp, or None when out of range."""
        k = math.floor((ts - self.origin).total_seconds() / self.width.total_seconds())
        return k if 0 <= k < self.count else None

    def to_dict(self) -> dict:
        return {
            "origin": self.origin.astimezone(timezone.utc).isoformat().replace("+00:00", "Z"),
            "width_days": self.width.total_seconds() / 86400.0,
            "count": self.count,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "IntervalScheme":
        return cls(
            origin=datetime.fromisoformat(doc["origin"].replace("Z", "+00:00")),
            width=timedelta(days=float(doc["width_days"])),
            count=int(doc["count"]),
        )


@dataclass(frozen=True)
class SeriesPoint:
    count: int
    mean_duration: float | None
    accuracy: float | None

    def to_dict(self) -> dict:
        return {"count": self.count, "mean_duration": self.mean_duration, "accuracy": self.accuracy}

    @classmethod
    def from_dict(cls, doc: dict) -> "SeriesPoint":
        return cls(int(doc["count"]), doc["mean_duration"], doc["accuracy"])


EMPTY_POINT = SeriesPoint(0, None, None)


@dataclass(frozen=True)
class SeriesSubject:
    """What a series is about: one student, an objective scope, a mode filter.

    `objectives` is a sorted tuple of ids a record must carry *all* of; None
    means every in-unit record qualifies. `mode` is "exercise", "test", or
    "all".
    """

    student_id: str
    objectives: tuple[str, ...] | None
    mode: str

    def key(self) -> str:
        obj = "+".join(self.objectives) if self.objectives else MODE_ALL
        return f"{obj}|{self.mode}"


@dataclass(frozen=True)
class PerformanceSeries:
    subject: SeriesSubject
    points: tuple[SeriesPoint, ...]

    def total_count(self) -> int:
        return sum(p.count for p in self.points)

    def overall_accuracy(self) -> float | None:
        n = self.total_count()
        if n == 0:
            return None
        correct = sum(p.count * p.accuracy for p in self.points if p.accuracy is not None)
        return correct / n

    def overall_mean_duration(self) -> float | None:
        n = self.total_count()
        if n == 0:
            return None
        total = sum(p.count * p.mean_duration for p in self.points if p.mean_duration is not None)
        return total / n

    def to_dict(self) -> dict:
        return {
            "subject": {
                "objectives": list(self.subject.objectives) if self.subject.objectives else None,
                "mode": self.subject.mode,
            },
            "points": [p.to_dict() for p in self.points],
        }


def _record_matches(
    rec: AttemptRecord,
    objectives: tuple[str, ...] | None,
    mode: str,
    unit_scope: frozenset[str] | None,
) -> bool:
    if mode != MODE_ALL and rec.mode.value != mode:
        return False
    if objectives is None:
        return unit_scope is None or bool(rec.objectives & unit_scope)
    return all(o in rec.objectives for o in objectives)


def build_series(
    records: list[AttemptRecord],
    scheme: IntervalScheme,
    subject: SeriesSubject,
    graph: ObjectiveGraph | None = None,
    unit_scope: frozenset[str] | None = None,
) -> PerformanceSeries:
    """Aggregate one student's records into a K-point series.

    A record contributes only when it belongs to the subject's student, falls
    inside the scheme, carries every subject objective (or intersects the
    unit scope for the all-objectives subject), and passes the mode filter.
    """
    if graph is not None and subject.objectives:
        for o in subject.objectives:
            if not graph.has_objective(o):
                raise UnknownObjectiveError(f"unknown objective: {o}")

    durations: list[list[float]] = [[] for _ in range(scheme.count)]
    correct_sums = [0] * scheme.count
    for rec in records:
        if rec.student_id != subject.student_id:
            continue
        if not _record_matches(rec, subject.objectives, subject.mode, unit_scope):
            continue
        k = scheme.index_of(rec.timestamp)
        if k is None:
            continue
        durations[k].append(rec.duration)
        correct_sums[k] += 1 if rec.correct else 0

    # fsum keeps the duration mean independent of record order
    points = tuple(
        SeriesPoint(len(durs), math.fsum(durs) / len(durs), correct_sums[k] / len(durs))
        if durs
        else EMPTY_POINT
        for k, durs in enumerate(durations)
    )
    return PerformanceSeries(subject=subject, points=points)


# ---------------------------------------------------------------------------
# Cohort statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CohortCell:
    """Peer means over exactly the students active in this cell."""

    mean_accuracy: float
    mean_duration: float
    mean_count: float
    size: int

    def to_dict(self) -> dict:
        return {
            "mean_accuracy": self.mean_accuracy,
            "mean_duration": self.mean_duration,
            "mean_count": self.mean_count,
            "size": self.size,
        }


OVERALL = "overall"  # pseudo interval key for whole-span cells


class CohortStats:
    """Peer means per (objective, interval-or-overall, mode filter).

    The focal student is part of the cohort; the means are over every student
    with at least one matching attempt in the cell. Empty cells are absent.
    """

    def __init__(self, cells: dict[tuple[str, str, str], CohortCell]):
        self.cells = cells

    def get(self, objective_id: str, interval: int | str, mode: str) -> CohortCell | None:
        return self.cells.get((objective_id, str(interval), mode))

    def to_dict(self) -> dict:
        return {"|".join(k): v.to_dict() for k, v in sorted(self.cells.items())}

    @classmethod
    def from_dict(cls, doc: dict) -> "CohortStats":
        cells = {}
        for key, val in doc.items():
            obj, interval, mode = key.split("|")
            cells[(obj, interval, mode)] = CohortCell(
                mean_accuracy=val["mean_accuracy"],
                mean_duration=val["mean_duration"],
                mean_count=val["mean_count"],
                size=val["size"],
            )
        return cls(cells)


def build_cohort_stats(
    all_records: list[AttemptRecord],
    scheme: IntervalScheme,
    graph: ObjectiveGraph,
    objective_ids: list[str] | None = None,
) -> CohortStats:
    """Per-cell peer means over every student in the record set.

    For each (objective, interval, mode) and (objective, overall, mode) cell:
    accuracy and duration are the means of the per-student means, count is the
    mean per-student attempt count, size is how many students were active.
    """
    scoped = objective_ids if objective_ids is not None else sorted(graph.objectives)
    scope = set(scoped)

    # (objective, interval_key, mode, student) -> [n, correct, durations]
    acc: dict[tuple[str, str, str, str], list] = {}
    for rec in all_records:
        k = scheme.index_of(rec.timestamp)
        if k is None:
            continue
        hits = rec.objectives & scope
        if not hits:
            continue
        interval_keys = (str(k), OVERALL)
        for obj in hits:
            for mode in (rec.mode.value, MODE_ALL):
                for ik in interval_keys:
                    cell = acc.setdefault((obj, ik, mode, rec.student_id), [0, 0, []])
                    cell[0] += 1
                    cell[1] += 1 if rec.correct else 0
                    cell[2].append(rec.duration)

    grouped: dict[tuple[str, str, str], dict[str, list]] = {}
    for (obj, ik, mode, student), cell in acc.items():
        grouped.setdefault((obj, ik, mode), {})[student] = cell

    # fsum plus a sorted student order keeps every mean independent of
    # record order
    cells = {}
    for key, students in grouped.items():
        size = len(students)
        ordered = [students[s] for s in sorted(students)]
        cells[key] = CohortCell(
            mean_accuracy=math.fsum(c[1] / c[0] for c in ordered) / size,
            mean_duration=math.fsum(math.fsum(c[2]) / c[0] for c in ordered) / size,
            mean_count=math.fsum(float(c[0]) for c in ordered) / size,
            size=size,
        )
    return CohortStats(cells)
