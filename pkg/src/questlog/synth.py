"""Deterministic synthetic datasets: a prerequisite graph, a question catalog,
and a cohort of attempt records.

Two scenarios:

* "steven": a hand-engineered focal student over a five-unit curriculum whose
  aggregates land on fixed values (15/16 on S1102, 24-25% across Unit 3,
  a 49.02% hard share for S1206, every Unit 7 test accuracy above 80%),
  plus a generic peer cohort.
* "baseline": one unit with a configurable objective count and a generic
  cohort; used for scale and latency checks.

Everything is driven by the documented LCG, so a given seed reproduces the
same files byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .insights import Lcg
from .io import save_catalog, save_graph, save_records
from .model import (
    AttemptRecord,
    CatalogEntry,
    Difficulty,
    LearningObjective,
    Mode,
    ObjectiveGraph,
    QuestionCatalog,
    Unit,
)

ORIGIN = datetime(2024, 1, 1, tzinfo=timezone.utc)

_D = {"e": Difficulty.EASY, "m": Difficulty.MEDIUM, "h": Difficulty.HARD}

STEVEN_ID = "steven"

_UNITS = [
    ("U1", "Unit 1: Number Foundations", [("M1011", "Integer arithmetic"), ("M1012", "Order of operations")]),
    ("U2", "Unit 2: Fractions and Decimals", [("M1021", "Fraction operations"), ("M1022", "Decimals and percents")]),
    ("U3", "Unit 3: Equations and the Plane", [
        ("N1114", "Linear equations in one variable"),
        ("N1115", "Inequalities on the number line"),
        ("N1136", "Coordinate plane basics"),
    ]),
    ("U5", "Unit 5: Roots and Exponents", [("M1051", "Square roots and radicals"), ("M1052", "Exponent rules")]),
    ("U7", "Unit 7: Quadratic Expressions", [
        ("S1102", "Polynomial addition and subtraction"),
        ("S1205", "Factoring quadratic expressions"),
        ("S1206", "Completing the square"),
        ("S2106", "Graphing quadratic functions"),
    ]),
]

_EDGES = [
    ("M1011", "N1114"),
    ("M1012", "N1115"),
    ("M1021", "N1136"),
    ("N1114", "S1205"),
    ("N1115", "S1205"),
    ("N1136", "S2106"),
    ("M1051", "S1206"),
    ("M1052", "S1102"),
]

# question bank sizes per difficulty; S1206's 1049/1500/2451 split pins its
# hard share at exactly 0.4902, S1205 and S2106 skew hard, S1102 skews easy
_CATALOG_SIZES: dict[str, tuple[int, int, int]] = {
    "M1011": (20, 20, 10),
    "M1012": (20, 20, 10),
    "M1021": (20, 20, 10),
    "M1022": (20, 20, 10),
    "N1114": (15, 25, 15),
    "N1115": (15, 25, 15),
    "N1136": (15, 25, 15),
    "M1051": (20, 20, 10),
    "M1052": (20, 20, 10),
    "S1102": (140, 50, 10),
    "S1205": (75, 125, 300),
    "S1206": (1049, 1500, 2451),
    "S2106": (60, 120, 220),
}

# multi-objective questions, all hard: the co-practice pool behind the
# associated-set analysis
_PAIR_SET = ("S1205", "S2106")
_PAIR_POOL_SIZE = 40


# (week, difficulty, correct) per exercise attempt; tallies documented in
# tests. S1102: 15/16 over weeks 4-7. S1205/S1206/S2106: improving weekly
# accuracy with hard-heavy mixes.
_STEVEN_EXERCISE: dict[str, list[tuple[int, str, int]]] = {
    "M1011": [(0, "m", 1)] * 9 + [(0, "m", 0)],
    "M1021": [(0, "m", 1)] * 9 + [(0, "m", 0)],
    "M1012": [(1, "m", 1)] * 9 + [(1, "m", 0)],
    "M1022": [(1, "m", 1)] * 9 + [(1, "m", 0)],
    "N1114": (
        [(1, "m", 1), (1, "m", 1)] + [(1, "m", 0)] * 7
        + [(2, "m", 1), (2, "m", 1)] + [(2, "m", 0)] * 6
        + [(3, "m", 1), (3, "m", 1)] + [(3, "m", 0)] * 6
    ),
    "N1115": (
        [(1, "m", 1)] + [(1, "m", 0)] * 5
        + [(2, "m", 1)] + [(2, "m", 0)] * 4
        + [(3, "m", 1), (3, "m", 1)] + [(3, "m", 0)] * 3
    ),
    "N1136": (
        [(2, "m", 1), (2, "m", 1)] + [(2, "m", 0)] * 8
        + [(3, "m", 1), (3, "m", 1), (3, "m", 1)] + [(3, "m", 0)] * 7
    ),
    "M1051": [(3, "m", 1)] * 9 + [(3, "m", 0)],
    "M1052": [(3, "m", 1)] * 9 + [(3, "m", 0)],
    "S1102": [(4, "e", 0), (4, "e", 1), (4, "e", 1), (4, "e", 1)]
    + [(w, "e", 1) for w in (5, 5, 5, 5, 6, 6, 6, 6, 7, 7, 7, 7)],
    "S1205": [
        (4, "h", 0), (4, "h", 0), (4, "m", 0),
        (5, "h", 1), (5, "h", 0), (5, "m", 0),
        (6, "h", 1), (6, "h", 0), (6, "e", 0),
        (7, "h", 1), (7, "m", 0), (7, "m", 0),
        (8, "h", 1), (8, "h", 0), (8, "m", 1),
        (9, "h", 1), (9, "m", 1), (9, "h", 0),
        (10, "m", 1), (10, "e", 1),
    ],
    "S1206": [
        (4, "h", 1), (4, "h", 0), (4, "m", 0),
        (5, "h", 1), (5, "m", 1), (5, "e", 0),
        (6, "h", 1), (6, "m", 1), (6, "h", 0),
        (7, "m", 1), (7, "e", 1), (7, "h", 0),
        (8, "h", 1), (8, "e", 1), (8, "h", 0),
        (9, "h", 1), (9, "m", 1), (9, "e", 1),
    ],
    "S2106": [
        (5, "h", 1), (5, "h", 0), (5, "m", 0),
        (6, "h", 1), (6, "m", 1), (6, "e", 0),
        (7, "h", 1), (7, "m", 1), (7, "h", 0),
        (8, "m", 1), (8, "e", 1), (8, "h", 0),
        (9, "h", 1), (9, "m", 1), (9, "h", 1),
    ],
}

_STEVEN_PAIR: list[tuple[int, str, int]] = [
    (8, "h", 1), (8, "h", 0),
    (9, "h", 1), (9, "h", 0),
    (10, "h", 1), (10, "h", 0),
]

# unit test in week 11; every Unit 7 accuracy lands strictly above 0.8
_STEVEN_TEST: dict[str, list[tuple[str, int]]] = {
    "S1102": [("e", 1), ("e", 1), ("m", 1), ("m", 1)],
    "S1205": [("h", 1), ("h", 1), ("m", 1), ("m", 1), ("e", 1), ("h", 0)],
    "S1206": [("h", 1), ("h", 1), ("m", 1), ("m", 1), ("e", 1), ("h", 0)],
    "S2106": [("h", 1), ("h", 1), ("m", 1), ("m", 1), ("e", 1), ("h", 0)],
}

# per-objective duration patterns: base + step * (i % cycle); S1102's cycle
# averages exactly 120 s over its 16 attempts
_DURATIONS = {
    "S1102": (119.0, [0.0, 2.0, 1.0, -1.0, 3.0]),
    "S1205": (170.0, [0.0, 10.0, 30.0, 20.0, 50.0, 40.0, 60.0]),
    "S1206": (130.0, [0.0, 8.0, 24.0, 16.0, 40.0, 32.0]),
    "S2106": (150.0, [0.0, 9.0, 27.0, 18.0, 36.0]),
    "pair": (200.0, [0.0, 10.0, 30.0, 20.0]),
    "history": (90.0, [0.0, 7.0, 21.0, 14.0, 28.0, 35.0]),
}


def _duration(kind: str, i: int) -> float:
    base, cycle = _DURATIONS[kind]
    return base + cycle[i % len(cycle)]


def build_graph() -> ObjectiveGraph:
    objectives = [
        LearningObjective(oid, label, unit_id)
        for unit_id, _title, pairs in _UNITS
        for oid, label in pairs
    ]
    units = [Unit(uid, title, tuple(oid for oid, _ in pairs)) for uid, title, pairs in _UNITS]
    return ObjectiveGraph.build(objectives, units, list(_EDGES))


@dataclass
class _Pools:
    """Per-objective question ids grouped by difficulty."""

    single: dict[str, dict[Difficulty, list[str]]]
    pair: list[str]


def build_catalog() -> tuple[QuestionCatalog, _Pools]:
    entries: list[CatalogEntry] = []
    single: dict[str, dict[Difficulty, list[str]]] = {}
    for obj, (n_easy, n_medium, n_hard) in _CATALOG_SIZES.items():
        single[obj] = {d: [] for d in Difficulty}
        for diff, n in ((Difficulty.EASY, n_easy), (Difficulty.MEDIUM, n_medium), (Difficulty.HARD, n_hard)):
            for i in range(n):
                qid = f"q-{obj}-{diff.value[0]}{i:04d}"
                entries.append(CatalogEntry(qid, frozenset({obj}), diff))
                single[obj][diff].append(qid)
    pair_ids = []
    for i in range(_PAIR_POOL_SIZE):
        qid = f"q-{'-'.join(_PAIR_SET)}-h{i:04d}"
        entries.append(CatalogEntry(qid, frozenset(_PAIR_SET), Difficulty.HARD))
        pair_ids.append(qid)
    return QuestionCatalog.from_entries(entries), _Pools(single=single, pair=pair_ids)


def _timestamp(week: int, slot: int) -> datetime:
    day = slot % 7
    hour = 8 + (slot * 3) % 12
    minute = (slot * 17) % 60
    return ORIGIN + timedelta(weeks=week, days=day, hours=hour, minutes=minute)


def _steven_records(pools: _Pools) -> list[AttemptRecord]:
    records: list[AttemptRecord] = []

    def pick_question(obj: str, diff: Difficulty, i: int) -> str:
        pool = pools.single[obj][diff]
        return pool[i % len(pool)]

    for obj, plan in _STEVEN_EXERCISE.items():
        dur_kind = obj if obj in _DURATIONS else "history"
        for i, (week, diff_key, correct) in enumerate(plan):
            diff = _D[diff_key]
            records.append(
                AttemptRecord(
                    student_id=STEVEN_ID,
                    question_id=pick_question(obj, diff, i),
                    timestamp=_timestamp(week, i),
                    duration=_duration(dur_kind, i),
                    correct=bool(correct),
                    objectives=frozenset({obj}),
                    difficulty=diff,
                    mode=Mode.EXERCISE,
                )
            )

    for i, (week, diff_key, correct) in enumerate(_STEVEN_PAIR):
        records.append(
            AttemptRecord(
                student_id=STEVEN_ID,
                question_id=pools.pair[i % len(pools.pair)],
                timestamp=_timestamp(week, 40 + i),
                duration=_duration("pair", i),
                correct=bool(correct),
                objectives=frozenset(_PAIR_SET),
                difficulty=_D[diff_key],
                mode=Mode.EXERCISE,
            )
        )

    for obj, plan in _STEVEN_TEST.items():
        dur_kind = obj if obj in _DURATIONS else "history"
        for i, (diff_key, correct) in enumerate(plan):
            diff = _D[diff_key]
            records.append(
                AttemptRecord(
                    student_id=STEVEN_ID,
                    question_id=pick_question(obj, diff, 50 + i),
                    timestamp=_timestamp(11, 10 + i),
                    duration=_duration(dur_kind, 7 + i),
                    correct=bool(correct),
                    objectives=frozenset({obj}),
                    difficulty=diff,
                    mode=Mode.TEST,
                )
            )
    return records


_UNIT_WEEKS = {"U1": (0, 1), "U2": (0, 1), "U3": (1, 3), "U5": (3, 3), "U7": (4, 10)}
_DIFF_DRAW = (Difficulty.EASY, Difficulty.MEDIUM, Difficulty.MEDIUM, Difficulty.HARD)


def _peer_records(graph: ObjectiveGraph, pools: _Pools, rng: Lcg, n_peers: int) -> list[AttemptRecord]:
    records: list[AttemptRecord] = []
    for p in range(n_peers):
        student = f"peer-{p:04d}"
        skill = 0.45 + rng.below(500) / 1000.0  # 0.45 .. 0.945
        for unit in graph.units:
            w_lo, w_hi = _UNIT_WEEKS.get(unit.id, (0, 10))
            for obj in unit.objectives:
                for i in range(3 + rng.below(5)):
                    diff = _DIFF_DRAW[rng.below(len(_DIFF_DRAW))]
                    pool = pools.single[obj][diff]
                    week = w_lo + rng.below(w_hi - w_lo + 1)
                    records.append(
                        AttemptRecord(
                            student_id=student,
                            question_id=pool[rng.below(len(pool))],
                            timestamp=_timestamp(week, rng.below(28)),
                            duration=40.0 + rng.below(260),
                            correct=rng.below(1000) < int(skill * 1000),
                            objectives=frozenset({obj}),
                            difficulty=diff,
                            mode=Mode.EXERCISE,
                        )
                    )
            if unit.id == "U7":
                for obj in unit.objectives:
                    for i in range(2 + rng.below(3)):
                        diff = _DIFF_DRAW[rng.below(len(_DIFF_DRAW))]
                        pool = pools.single[obj][diff]
                        records.append(
                            AttemptRecord(
                                student_id=student,
                                question_id=pool[rng.below(len(pool))],
                                timestamp=_timestamp(11, rng.below(28)),
                                duration=40.0 + rng.below(200),
                                correct=rng.below(1000) < int(skill * 1000),
                                objectives=frozenset({obj}),
                                difficulty=diff,
                                mode=Mode.TEST,
                            )
                        )
    return records


def _baseline_dataset(seed: int, cohort: int, n_objectives: int):
    ids = tuple(f"O{i:02d}" for i in range(n_objectives))
    objectives = [LearningObjective(o, f"Objective {o}", "U1") for o in ids]
    units = [Unit("U1", "Unit 1", ids)]
    edges = [(ids[i], ids[i + 2]) for i in range(len(ids) - 2)]
    graph = ObjectiveGraph.build(objectives, units, edges)

    entries = []
    pools: dict[str, dict[Difficulty, list[str]]] = {}
    for obj in ids:
        pools[obj] = {d: [] for d in Difficulty}
        for diff in Difficulty:
            for i in range(20):
                qid = f"q-{obj}-{diff.value[0]}{i:04d}"
                entries.append(CatalogEntry(qid, frozenset({obj}), diff))
                pools[obj][diff].append(qid)
    catalog = QuestionCatalog.from_entries(entries)

    rng = Lcg(seed)
    records: list[AttemptRecord] = []
    for s in range(cohort):
        student = "alex" if s == 0 else f"peer-{s:04d}"
        skill = 0.4 + rng.below(550) / 1000.0
        for obj in ids:
            for i in range(4 + rng.below(6)):
                diff = _DIFF_DRAW[rng.below(len(_DIFF_DRAW))]
                week = rng.below(11)
                records.append(
                    AttemptRecord(
                        student_id=student,
                        question_id=pools[obj][diff][rng.below(20)],
                        timestamp=_timestamp(week, rng.below(28)),
                        duration=30.0 + rng.below(300),
                        correct=rng.below(1000) < int((skill + 0.02 * week) * 1000),
                        objectives=frozenset({obj}),
                        difficulty=diff,
                        mode=Mode.EXERCISE,
                    )
                )
            for i in range(2 + rng.below(3)):
                diff = _DIFF_DRAW[rng.below(len(_DIFF_DRAW))]
                records.append(
                    AttemptRecord(
                        student_id=student,
                        question_id=pools[obj][diff][rng.below(20)],
                        timestamp=_timestamp(11, rng.below(28)),
                        duration=30.0 + rng.below(240),
                        correct=rng.below(1000) < int(min(skill + 0.2, 0.98) * 1000),
                        objectives=frozenset({obj}),
                        difficulty=diff,
                        mode=Mode.TEST,
                    )
                )
    records.sort(key=lambda r: (r.timestamp.isoformat(), r.student_id, r.question_id))
    return graph, records, catalog


def synthesize(
    seed: int = 1729,
    cohort: int = 200,
    scenario: str = "steven",
    n_objectives: int = 10,
) -> tuple[ObjectiveGraph, list[AttemptRecord], QuestionCatalog]:
    """Build a full synthetic dataset in memory."""
    if scenario == "baseline":
        return _baseline_dataset(seed, cohort, n_objectives)
    if scenario != "steven":
        raise ValueError(f"unknown scenario: {scenario}")
    graph = build_graph()
    catalog, pools = build_catalog()
    records = _steven_records(pools)
    records += _peer_records(graph, pools, Lcg(seed), max(0, cohort - 1))
    records.sort(key=lambda r: (r.timestamp.isoformat(), r.student_id, r.question_id))
    return graph, records, catalog


def write_dataset(
    out_dir: str | Path,
    seed: int = 1729,
    cohort: int = 200,
    scenario: str = "steven",
    n_objectives: int = 10,
) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    graph, records, catalog = synthesize(seed, cohort, scenario, n_objectives)
    paths = {
        "graph": out / "graph.json",
        "records": out / "records.ndjson",
        "catalog": out / "catalog.ndjson",
    }
    save_graph(graph, paths["graph"])
    save_records(records, paths["records"])
    save_catalog(catalog, paths["catalog"])
    return paths
