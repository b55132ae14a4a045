"""Core domain vocabulary: objectives, the prerequisite graph, attempt records.

Everything here is immutable after load and safe to share across threads.
All downstream stages (aggregation, mining, diagnosis, reporting, Q&A) speak
in terms of these types.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

from .errors import DataError, UnknownObjectiveError, UnknownUnitError


class Difficulty(str, Enum):
    EASY = "easy"
    MEDIUM = "medium"
    HARD = "hard"


class Mode(str, Enum):
    EXERCISE = "exercise"
    TEST = "test"


# Mode *filter* values: a concrete mode or "all". Kept as plain strings so
# subspaces and cache keys serialize without special casing.
MODE_ALL = "all"
MODE_FILTERS = (Mode.EXERCISE.value, Mode.TEST.value, MODE_ALL)


@dataclass(frozen=True)
class LearningObjective:
    """A single knowledge point; a node of the prerequisite graph."""

    id: str
    label: str
    unit_id: str


@dataclass(frozen=True)
class Unit:
    """An instructional unit grouping an ordered list of objectives."""

    id: str
    title: str
    objectives: tuple[str, ...]


@dataclass(frozen=True)
class ObjectiveGraph:
    """Directed acyclic prerequisite graph of learning objectives.

    An edge (a, b) means `a` is a prerequisite of `b`. Construction is
    permissive so that `validate_graph` can report problems as data; the
    traversal helpers assume a graph that validates cleanly.
    """

    objectives: dict[str, LearningObjective]
    units: tuple[Unit, ...]
    edges: frozenset[tuple[str, str]]
    # predecessor adjacency: node -> sorted tuple of direct prerequisites
    _preds: dict[str, tuple[str, ...]] = field(repr=False, default_factory=dict)

    @classmethod
    def build(
        cls,
        objectives: list[LearningObjective],
        units: list[Unit],
        edges: list[tuple[str, str]],
    ) -> "ObjectiveGraph":
        by_id: dict[str, LearningObjective] = {}
        for obj in objectives:
            # keep the first declaration; duplicates are reported by validate_graph
            by_id.setdefault(obj.id, obj)
        preds: dict[str, list[str]] = {oid: [] for oid in by_id}
        for frm, to in edges:
            if to in preds and frm in by_id:
                preds[to].append(frm)
        return cls(
            objectives=by_id,
            units=tuple(units),
            edges=frozenset(edges),
            _preds={k: tuple(sorted(v)) for k, v in preds.items()},
        )

    @classmethod
    def from_dict(cls, doc: dict) -> "ObjectiveGraph":
        try:
            units = [
                Unit(id=u["id"], title=u.get("title", u["id"]), objectives=tuple(u["objectives"]))
                for u in doc["units"]
            ]
            objectives = [
                LearningObjective(id=o["id"], label=o.get("label", o["id"]), unit_id=o["unit_id"])
                for o in doc["objectives"]
            ]
            edges = [(str(e[0]), str(e[1])) for e in doc.get("edges", [])]
        except (KeyError, TypeError, IndexError) as exc:
            raise DataError(f"malformed graph document: {exc}") from exc
        return cls.build(objectives, units, edges)

    def to_dict(self) -> dict:
        return {
            "units": [
                {"id": u.id, "title": u.title, "objectives": list(u.objectives)}
                for u in self.units
            ],
            "objectives": [
                {"id": o.id, "label": o.label, "unit_id": o.unit_id}
                for o in sorted(self.objectives.values(), key=lambda o: o.id)
            ],
            "edges": sorted([list(e) for e in self.edges]),
        }

    def unit(self, unit_id: str) -> Unit:
        for u in self.units:
            if u.id == unit_id:
                return u
        raise UnknownUnitError(f"unknown unit: {unit_id}")

    def unit_objectives(self, unit_id: str) -> tuple[str, ...]:
        return self.unit(unit_id).objectives

    def has_objective(self, objective_id: str) -> bool:
        return objective_id in self.objectives

    def predecessors(self, objective_id: str) -> tuple[str, ...]:
        if objective_id not in self.objectives:
            raise UnknownObjectiveError(f"unknown objective: {objective_id}")
        return self._preds.get(objective_id, ())


@dataclass(frozen=True)
class AttemptRecord:
    """One exercise or test attempt by one student."""

    student_id: str
    question_id: str
    timestamp: datetime
    duration: float
    correct: bool
    objectives: frozenset[str]
    difficulty: Difficulty
    mode: Mode

    @classmethod
    def from_dict(cls, doc: dict) -> "AttemptRecord":
        try:
            ts = datetime.fromisoformat(str(doc["timestamp"]).replace("Z", "+00:00"))
            if ts.tzinfo is None:
                ts = ts.replace(tzinfo=timezone.utc)
            rec = cls(
                student_id=str(doc["student_id"]),
                question_id=str(doc["question_id"]),
                timestamp=ts,
                duration=float(doc["duration"]),
                correct=bool(doc["correct"]),
                objectives=frozenset(str(o) for o in doc["objectives"]),
                difficulty=Difficulty(doc["difficulty"]),
                mode=Mode(doc["mode"]),
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"malformed attempt record: {exc}") from exc
        except ValueError as exc:
            # covers bad timestamps and unknown difficulty/mode strings; the
            # enums are closed on purpose, there is no silent default
            raise DataError(f"invalid attempt record field: {exc}") from exc
        if rec.duration < 0:
            raise DataError(f"negative duration on question {rec.question_id}")
        if not rec.objectives:
            raise DataError(f"record for question {rec.question_id} has no objectives")
        return rec

    def to_dict(self) -> dict:
        return {
            "student_id": self.student_id,
            "question_id": self.question_id,
            "timestamp": self.timestamp.astimezone(timezone.utc).isoformat().replace("+00:00", "Z"),
            "duration": self.duration,
            "correct": self.correct,
            "objectives": sorted(self.objectives),
            "difficulty": self.difficulty.value,
            "mode": self.mode.value,
        }


@dataclass(frozen=True)
class CatalogEntry:
    question_id: str
    objectives: frozenset[str]
    difficulty: Difficulty


class QuestionCatalog:
    """The question bank: every known question with its tags and difficulty.

    Difficulty profiles are computed over the catalog, not over attempts, so
    unattempted questions still count toward an objective's challenge level.
    """

    def __init__(self, entries: dict[str, CatalogEntry]):
        self.entries = entries

    @classmethod
    def from_entries(cls, entries: list[CatalogEntry]) -> "QuestionCatalog":
        by_id: dict[str, CatalogEntry] = {}
        for e in entries:
            if e.question_id in by_id and by_id[e.question_id] != e:
                raise DataError(f"conflicting catalog entries for question {e.question_id}")
            by_id[e.question_id] = e
        return cls(by_id)

    @classmethod
    def from_records(cls, records: list[AttemptRecord]) -> "QuestionCatalog":
        """Fallback catalog derived from observed attempts only."""
        entries: dict[str, CatalogEntry] = {}
        for rec in records:
            entry = CatalogEntry(rec.question_id, rec.objectives, rec.difficulty)
            prev = entries.get(rec.question_id)
            if prev is not None and prev != entry:
                raise DataError(f"inconsistent tags for question {rec.question_id} across records")
            entries[rec.question_id] = entry
        return cls(entries)

    def questions_for(self, objective_id: str) -> list[CatalogEntry]:
        return [e for e in self.entries.values() if objective_id in e.objectives]

    def check_consistency(self, records: list[AttemptRecord]) -> list[str]:
        problems = []
        for rec in records:
            entry = self.entries.get(rec.question_id)
            if entry is None:
                problems.append(f"record references unknown question {rec.question_id}")
            elif entry.objectives != rec.objectives or entry.difficulty != rec.difficulty:
                problems.append(f"record disagrees with catalog on question {rec.question_id}")
        return problems

    def __len__(self) -> int:
        return len(self.entries)


# ---------------------------------------------------------------------------
# Graph operations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str  # duplicate_id | dangling_edge | self_edge | cycle | orphan_objective | duplicate_unit_membership | unknown_unit
    detail: str
    subjects: tuple[str, ...]


def validate_graph(
    objectives: list[LearningObjective],
    units: list[Unit],
    edges: list[tuple[str, str]],
) -> list[Violation]:
    """Check structural invariants; violations are data, not failures.

    Returns an empty list iff the graph is valid: unique ids, edges between
    declared nodes, no self-edges, acyclic (Kahn elimination consumes every
    node), and every objective in exactly one declared unit.
    """
    violations: list[Violation] = []

    seen: set[str] = set()
    for obj in objectives:
        if obj.id in seen:
            violations.append(Violation("duplicate_id", f"objective {obj.id} declared twice", (obj.id,)))
        seen.add(obj.id)

    unit_ids = {u.id for u in units}
    membership: dict[str, int] = {}
    for u in units:
        for oid in u.objectives:
            membership[oid] = membership.get(oid, 0) + 1
    for obj in objectives:
        if obj.unit_id not in unit_ids:
            violations.append(Violation("unknown_unit", f"objective {obj.id} names undeclared unit {obj.unit_id}", (obj.id,)))
        n = membership.get(obj.id, 0)
        if n == 0:
            violations.append(Violation("orphan_objective", f"objective {obj.id} listed in no unit", (obj.id,)))
        elif n > 1:
            violations.append(Violation("duplicate_unit_membership", f"objective {obj.id} listed in {n} units", (obj.id,)))

    for frm, to in edges:
        if frm == to:
            violations.append(Violation("self_edge", f"self edge on {frm}", (frm,)))
        missing = [x for x in (frm, to) if x not in seen]
        if missing:
            violations.append(Violation("dangling_edge", f"edge {frm}->{to} references undeclared node(s)", tuple(missing)))

    # Kahn elimination over the well-formed subset of edges
    good_edges = [(f, t) for f, t in edges if f in seen and t in seen and f != t]
    indegree = {oid: 0 for oid in seen}
    out: dict[str, list[str]] = {oid: [] for oid in seen}
    for f, t in good_edges:
        indegree[t] += 1
        out[f].append(t)
    queue = deque(sorted(oid for oid, d in indegree.items() if d == 0))
    consumed = 0
    while queue:
        node = queue.popleft()
        consumed += 1
        for nxt in out[node]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                queue.append(nxt)
    if consumed < len(seen):
        cyclic = tuple(sorted(oid for oid, d in indegree.items() if d > 0))
        violations.append(Violation("cycle", f"prerequisite cycle involving {{{', '.join(cyclic)}}}", cyclic))

    return violations


def ancestors(graph: ObjectiveGraph, objective_id: str) -> list[str]:
    """Transitive prerequisite closure, nearest first.

    Breadth-first over predecessor edges; ties at the same distance break by
    id order so the result is deterministic. Excludes the objective itself.
    """
    if not graph.has_objective(objective_id):
        raise UnknownObjectiveError(f"unknown objective: {objective_id}")
    ordered: list[str] = []
    visited = {objective_id}
    frontier = [objective_id]
    while frontier:
        nxt: list[str] = []
        for node in frontier:
            for pred in graph.predecessors(node):
                if pred not in visited:
                    visited.add(pred)
                    nxt.append(pred)
        nxt.sort()
        ordered.extend(nxt)
        frontier = nxt
    return ordered


def associated_sets(
    records: list[AttemptRecord],
    graph: ObjectiveGraph,
    objective_id: str,
) -> list[frozenset[str]]:
    """Distinct multi-objective tag sets observed alongside an objective.

    A set qualifies when it contains the objective, has at least two members,
    and contains none of the objective's ancestors (prerequisite influence is
    analyzed separately, so those sets are discarded). Ordered by descending
    attempt count, ties by the lexicographic sorted-id tuple.
    """
    anc = set(ancestors(graph, objective_id))
    counts: dict[frozenset[str], int] = {}
    for rec in records:
        tags = rec.objectives
        if objective_id not in tags or len(tags) < 2:
            continue
        if tags & anc:
            continue
        counts[tags] = counts.get(tags, 0) + 1
    return sorted(counts, key=lambda s: (-counts[s], tuple(sorted(s))))


def associated_set_counts(
    records: list[AttemptRecord],
    graph: ObjectiveGraph,
    objective_id: str,
) -> list[tuple[frozenset[str], int]]:
    """Like `associated_sets` but keeps the attempt count per set."""
    ordered = associated_sets(records, graph, objective_id)
    anc = set(ancestors(graph, objective_id))
    counts: dict[frozenset[str], int] = {}
    for rec in records:
        tags = rec.objectives
        if objective_id in tags and len(tags) >= 2 and not (tags & anc):
            counts[tags] = counts.get(tags, 0) + 1
    return [(s, counts[s]) for s in ordered]
