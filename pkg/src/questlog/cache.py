"""Offline metrics cache: one JSON entry per (student, unit).

An entry is a pure function of (records, graph, catalog, config), so the same
inputs always serialize byte-identically. Entries are content-hash named and
written atomically (temp file + rename); an index file maps (student, unit)
to the current entry. Request-time paths read entries only and never touch
raw records.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path

from .aggregate import (
    IntervalScheme,
    PerformanceSeries,
    SeriesSubject,
    build_cohort_stats,
    build_series,
)
from .config import EngineConfig
from .errors import StorageError
from .fmt import fmt_pct, fmt_pct_round
from .formative import (
    DifficultyProfile,
    RewardConfig,
    actual_reward,
    learning_velocity,
    reward_score,
)
from .model import (
    MODE_ALL,
    MODE_FILTERS,
    AttemptRecord,
    Mode,
    ObjectiveGraph,
    QuestionCatalog,
    ancestors,
    associated_set_counts,
)

CACHE_VERSION = 1
_ANON_SALT = "questlog-anon-v1"


def student_token(student_id: str) -> str:
    """Deterministic anonymized token; raw ids never reach prompts or reports."""
    digest = hashlib.sha256((_ANON_SALT + ":" + student_id).encode("utf-8")).hexdigest()
    return f"stu-{digest[:12]}"


def inputs_fingerprint(
    records: list[AttemptRecord],
    graph: ObjectiveGraph,
    catalog: QuestionCatalog,
    config: EngineConfig,
) -> str:
    h = hashlib.sha256()
    h.update(json.dumps(graph.to_dict(), sort_keys=True).encode())
    for rec in sorted(records, key=lambda r: (r.student_id, r.timestamp.isoformat(), r.question_id)):
        h.update(json.dumps(rec.to_dict(), sort_keys=True).encode())
    for qid in sorted(catalog.entries):
        e = catalog.entries[qid]
        h.update(f"{qid}|{','.join(sorted(e.objectives))}|{e.difficulty.value}".encode())
    h.update(json.dumps(config.to_dict(), sort_keys=True).encode())
    return h.hexdigest()


def _series_stats(points) -> dict:
    total = sum(p.count for p in points)
    if total == 0:
        return {"attempts": 0, "accuracy": None, "mean_duration": None, "correct": 0}
    correct = math.fsum(p.count * p.accuracy for p in points if p.count > 0)
    duration = math.fsum(p.count * p.mean_duration for p in points if p.count > 0)
    return {
        "attempts": total,
        "accuracy": correct / total,
        "mean_duration": duration / total,
        "correct": int(round(correct)),
    }


def build_entry(
    student_id: str,
    unit_id: str,
    records: list[AttemptRecord],
    graph: ObjectiveGraph,
    catalog: QuestionCatalog,
    config: EngineConfig,
    fingerprint: str | None = None,
) -> dict:
    """Compute the full cache entry for one (student, unit) in memory."""
    unit = graph.unit(unit_id)
    reward_cfg = RewardConfig.from_engine(config)

    student_records = [r for r in records if r.student_id == student_id]
    if config.origin is not None and config.interval_count is not None:
        scheme = IntervalScheme.from_dict(
            {"origin": config.origin, "width_days": config.interval_width_days, "count": config.interval_count}
        )
    else:
        import datetime as _dt

        scheme = IntervalScheme.covering(
            student_records or records, width=_dt.timedelta(days=config.interval_width_days)
        )

    unit_objs = list(unit.objectives)
    ancestry = {obj: ancestors(graph, obj) for obj in unit_objs}
    ancestor_ids = sorted({a for chain in ancestry.values() for a in chain} - set(unit_objs))
    unit_scope = frozenset(unit_objs)

    def series_for(objectives: tuple[str, ...] | None, mode: str) -> PerformanceSeries:
        subject = SeriesSubject(student_id=student_id, objectives=objectives, mode=mode)
        return build_series(student_records, scheme, subject, unit_scope=unit_scope)

    series: dict[str, list] = {}

    def store(key: str, ps: PerformanceSeries) -> PerformanceSeries:
        series[key] = [p.to_dict() for p in ps.points]
        return ps

    for mode in MODE_FILTERS:
        store(f"{MODE_ALL}|{mode}", series_for(None, mode))
    for obj in unit_objs + ancestor_ids:
        for mode in MODE_FILTERS:
            store(f"{obj}|{mode}", series_for((obj,), mode))

    # all-mode series for every other objective the student touched, so the
    # QA engine can chart any selection without a raw-record scan
    touched = {o for r in student_records for o in r.objectives if graph.has_objective(o)}
    for obj in sorted(touched - set(unit_objs) - set(ancestor_ids)):
        store(f"{obj}|{MODE_ALL}", series_for((obj,), MODE_ALL))

    associated: dict[str, list] = {}
    for obj in unit_objs:
        sets = associated_set_counts(student_records, graph, obj)
        associated[obj] = [
            {"objectives": sorted(s), "attempts": n} for s, n in sets
        ]
        for s, _n in sets:
            key_ids = tuple(sorted(s))
            for mode in MODE_FILTERS:
                key = f"{'+'.join(key_ids)}|{mode}"
                if key not in series:
                    store(key, series_for(key_ids, mode))

    def indicators_for(obj: str) -> dict:
        tagged = [r for r in student_records if obj in r.objectives and scheme.index_of(r.timestamp) is not None]
        all_stats = _series_stats([p for p in _points(series, f"{obj}|{MODE_ALL}")])
        exercise = _series_stats([p for p in _points(series, f"{obj}|{Mode.EXERCISE.value}")])
        test = _series_stats([p for p in _points(series, f"{obj}|{Mode.TEST.value}")])
        profile = DifficultyProfile.from_catalog(catalog, obj)
        mastery = actual_reward(tagged, reward_cfg)
        velocity = learning_velocity(_points(series, f"{obj}|{MODE_ALL}"))
        errors = sum(1 for r in tagged if not r.correct)
        return {
            "attempts": all_stats["attempts"],
            "exercise_attempts": exercise["attempts"],
            "test_attempts": test["attempts"],
            "accuracy": all_stats["accuracy"],
            "exercise_accuracy": exercise["accuracy"],
            "test_accuracy": test["accuracy"],
            "mean_duration": all_stats["mean_duration"],
            "reward_score": reward_score(profile, reward_cfg) if profile else None,
            "actual_reward": mastery,
            "mastery": mastery,
            "error_count": errors,
            "error_rate": errors / all_stats["attempts"] if all_stats["attempts"] else None,
            "velocity": velocity,
            "difficulty_profile": profile.to_dict() if profile else None,
        }

    indicators = {obj: indicators_for(obj) for obj in unit_objs}
    ancestor_indicators = {}
    for anc in ancestor_ids:
        tagged = [r for r in student_records if anc in r.objectives and scheme.index_of(r.timestamp) is not None]
        stats = _series_stats(_points(series, f"{anc}|{MODE_ALL}"))
        ancestor_indicators[anc] = {
            "attempts": stats["attempts"],
            "accuracy": stats["accuracy"],
            "mastery": actual_reward(tagged, reward_cfg),
            "velocity": learning_velocity(_points(series, f"{anc}|{MODE_ALL}")),
        }

    unit_summaries = []
    for u in graph.units:
        per_obj: dict[str, float | None] = {}
        total_attempts = 0
        total_correct = 0.0
        for obj in u.objectives:
            tagged = [
                r for r in student_records if obj in r.objectives and scheme.index_of(r.timestamp) is not None
            ]
            per_obj[obj] = actual_reward(tagged, reward_cfg)
        scoped = [
            r
            for r in student_records
            if (r.objectives & frozenset(u.objectives)) and scheme.index_of(r.timestamp) is not None
        ]
        total_attempts = len(scoped)
        total_correct = sum(1 for r in scoped if r.correct)
        accuracy = (total_correct / total_attempts) if total_attempts else None
        unit_summaries.append(
            {
                "unit_id": u.id,
                "title": u.title,
                "objective_mastery": per_obj,
                "objective_mastery_pct": {
                    o: (fmt_pct(m) if m is not None else None) for o, m in per_obj.items()
                },
                "attempts": total_attempts,
                "accuracy": accuracy,
                "accuracy_pct": fmt_pct(accuracy) if accuracy is not None else None,
                "accuracy_pct_round": fmt_pct_round(accuracy) if accuracy is not None else None,
            }
        )

    cohort = build_cohort_stats(records, scheme, graph)

    entry = {
        "version": CACHE_VERSION,
        "student_id": student_id,
        "student_token": student_token(student_id),
        "unit_id": unit_id,
        "unit_title": unit.title,
        "inputs_hash": fingerprint or inputs_fingerprint(records, graph, catalog, config),
        "config": {
            "weights": config.weights(),
            "insight_floor": config.insight_floor,
            "permutations": config.permutations,
            "seed": config.seed,
            "top_k": config.top_k,
            "mastery_strong": config.mastery_strong,
            "mastery_weak": config.mastery_weak,
            "ancestor_threshold": config.ancestor_threshold,
        },
        "scheme": scheme.to_dict(),
        # explicit list: JSON object keys get sorted on disk, arrays do not
        "unit_objectives": unit_objs,
        "series": series,
        "indicators": indicators,
        "ancestors": {obj: list(chain) for obj, chain in ancestry.items()},
        "ancestor_indicators": ancestor_indicators,
        "associated_sets": associated,
        "unit_summaries": unit_summaries,
        "cohort": cohort.to_dict(),
        "record_counts": {
            "total": sum(
                1
                for r in student_records
                if (r.objectives & unit_scope) and scheme.index_of(r.timestamp) is not None
            ),
            "exercise": sum(
                1
                for r in student_records
                if (r.objectives & unit_scope)
                and r.mode is Mode.EXERCISE
                and scheme.index_of(r.timestamp) is not None
            ),
            "test": sum(
                1
                for r in student_records
                if (r.objectives & unit_scope)
                and r.mode is Mode.TEST
                and scheme.index_of(r.timestamp) is not None
            ),
        },
    }
    return entry


def _points(series: dict, key: str):
    from .aggregate import SeriesPoint

    return tuple(SeriesPoint.from_dict(p) for p in series.get(key, []))


def bundle_from_entry(entry: dict) -> "SeriesBundle":
    """The miner's view of a cache entry: unit objectives plus the all-slice."""
    from .insights import SeriesBundle

    unit_objs = tuple(entry.get("unit_objectives") or entry["indicators"].keys())
    series = {}
    for mode in MODE_FILTERS:
        series[(None, mode)] = _points(entry["series"], f"{MODE_ALL}|{mode}")
        for obj in unit_objs:
            series[(obj, mode)] = _points(entry["series"], f"{obj}|{mode}")
    return SeriesBundle(
        unit_objectives=unit_objs,
        series=series,
        interval_count=entry["scheme"]["count"],
    )


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def entry_json(entry: dict) -> str:
    return json.dumps(entry, sort_keys=True, separators=(",", ":"))


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise StorageError(f"failed to write {path}: {exc}") from exc


def write_entry(cache_dir: str | Path, entry: dict) -> Path:
    """Persist an entry under a content-hash name and update the index."""
    cache_dir = Path(cache_dir)
    text = entry_json(entry)
    content_hash = hashlib.sha256(text.encode()).hexdigest()[:16]
    name = f"{entry['student_token']}_{entry['unit_id']}_{content_hash}.json"
    _atomic_write(cache_dir / name, text)

    index_path = cache_dir / "index.json"
    index = {}
    if index_path.exists():
        try:
            index = json.loads(index_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise StorageError(f"cache index is corrupt: {exc}") from exc
    index[f"{entry['student_id']}|{entry['unit_id']}"] = {
        "file": name,
        "inputs_hash": entry["inputs_hash"],
    }
    _atomic_write(index_path, json.dumps(index, sort_keys=True, indent=2))
    return cache_dir / name


def load_entry(cache_dir: str | Path, student_id: str, unit_id: str) -> dict | None:
    cache_dir = Path(cache_dir)
    index_path = cache_dir / "index.json"
    if not index_path.exists():
        return None
    index = json.loads(index_path.read_text(encoding="utf-8"))
    meta = index.get(f"{student_id}|{unit_id}")
    if meta is None:
        return None
    entry_path = cache_dir / meta["file"]
    if not entry_path.exists():
        return None
    return json.loads(entry_path.read_text(encoding="utf-8"))


def is_stale(entry: dict, current_fingerprint: str) -> bool:
    return entry.get("inputs_hash") != current_fingerprint


def refresh_cache(
    student_id: str,
    unit_id: str,
    records: list[AttemptRecord],
    graph: ObjectiveGraph,
    catalog: QuestionCatalog,
    config: EngineConfig,
    cache_dir: str | Path | None = None,
    fingerprint: str | None = None,
) -> tuple[dict, Path]:
    """Build and atomically persist the cache entry for (student, unit)."""
    entry = build_entry(student_id, unit_id, records, graph, catalog, config, fingerprint=fingerprint)
    path = write_entry(cache_dir or config.cache_dir, entry)
    return entry, path
