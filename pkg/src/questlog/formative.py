"""Formative indicators and the tri-level diagnostic profile.

Reward scores weigh an objective's question bank by difficulty; the actual
reward (reported as mastery) weighs the student's outcomes the same way, so
an all-easy objective can never look harder than it is. Diagnosis walks three
levels per objective: the objective's own series, its full prerequisite
closure, and the co-tagged objective sets that are not explained by
prerequisites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .aggregate import OVERALL, SeriesPoint
from .config import EngineConfig
from .errors import CacheMissError
from .fmt import fmt_num, fmt_pct
from .insights import Insight, SeriesBundle, mine_for_objective
from .model import MODE_ALL, AttemptRecord, Difficulty, Mode, ObjectiveGraph, QuestionCatalog


@dataclass(frozen=True)
class DifficultyProfile:
    """Share of an objective's question bank at each difficulty level."""

    easy: float
    medium: float
    hard: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("a difficulty profile needs at least one question")
        total = self.easy + self.medium + self.hard
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"difficulty proportions must sum to 1, got {total}")

    @classmethod
    def from_catalog(cls, catalog: QuestionCatalog, objective_id: str) -> "DifficultyProfile | None":
        questions = catalog.questions_for(objective_id)
        if not questions:
            return None
        n = len(questions)
        by_level = {Difficulty.EASY: 0, Difficulty.MEDIUM: 0, Difficulty.HARD: 0}
        for q in questions:
            by_level[q.difficulty] += 1
        return cls(
            easy=by_level[Difficulty.EASY] / n,
            medium=by_level[Difficulty.MEDIUM] / n,
            hard=by_level[Difficulty.HARD] / n,
            count=n,
        )

    def to_dict(self) -> dict:
        return {"easy": self.easy, "medium": self.medium, "hard": self.hard, "count": self.count}


@dataclass(frozen=True)
class RewardConfig:
    easy: float = 1.0
    medium: float = 2.0
    hard: float = 3.0

    def __post_init__(self):
        if not (0 < self.easy <= self.medium <= self.hard):
            raise ValueError("weights must be positive and non-decreasing easy<=medium<=hard")

    def weight(self, difficulty: Difficulty) -> float:
        return {Difficulty.EASY: self.easy, Difficulty.MEDIUM: self.medium, Difficulty.HARD: self.hard}[difficulty]

    @classmethod
    def from_engine(cls, config: EngineConfig) -> "RewardConfig":
        return cls(easy=config.weight_easy, medium=config.weight_medium, hard=config.weight_hard)


def reward_score(profile: DifficultyProfile, config: RewardConfig) -> float:
    """Weighted sum over the difficulty distribution; the objective's potential."""
    return config.easy * profile.easy + config.medium * profile.medium + config.hard * profile.hard


def actual_reward(attempts: list[AttemptRecord], config: RewardConfig) -> float | None:
    """Difficulty-weighted accuracy in [0, 1]; None when nothing was attempted."""
    if not attempts:
        return None
    weight_sum = math.fsum(config.weight(a.difficulty) for a in attempts)
    earned = math.fsum(config.weight(a.difficulty) for a in attempts if a.correct)
    return earned / weight_sum


def ols_slope(points: list[tuple[int, float]]) -> float | None:
    """Least-squares slope over (interval index, value) pairs; None under 2 points."""
    n = len(points)
    if n < 2:
        return None
    xs = [float(k) for k, _ in points]
    ys = [v for _, v in points]
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    xd = [x - mx for x in xs]
    sxx = math.fsum(d * d for d in xd)
    if sxx == 0.0:
        return None
    sxy = math.fsum(xd[i] * (ys[i] - my) for i in range(n))
    return sxy / sxx


def learning_velocity(points: tuple[SeriesPoint, ...]) -> float | None:
    """Accuracy change per interval, from the present points only."""
    present = [(k, p.accuracy) for k, p in enumerate(points) if p.count > 0]
    return ols_slope(present)


# ---------------------------------------------------------------------------
# Tri-level diagnosis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AncestorFinding:
    ancestor_id: str
    label: str
    mastery: float | None
    insights: tuple[Insight, ...]

    def to_dict(self) -> dict:
        return {
            "ancestor_id": self.ancestor_id,
            "label": self.label,
            "mastery": self.mastery,
            "mastery_pct": fmt_pct(self.mastery) if self.mastery is not None else None,
            "insights": [i.to_dict() for i in self.insights],
        }


@dataclass(frozen=True)
class AssociatedFinding:
    objectives: tuple[str, ...]
    attempts: int
    accuracy: float | None
    insights: tuple[Insight, ...]

    def to_dict(self) -> dict:
        return {
            "objectives": list(self.objectives),
            "attempts": self.attempts,
            "accuracy": self.accuracy,
            "accuracy_pct": fmt_pct(self.accuracy) if self.accuracy is not None else None,
            "insights": [i.to_dict() for i in self.insights],
        }


@dataclass(frozen=True)
class ObjectiveDiagnosis:
    objective_id: str
    label: str
    indicators: dict
    insights: tuple[Insight, ...]
    ancestor_ids: tuple[str, ...]  # full closure, nearest first
    ancestor_findings: tuple[AncestorFinding, ...]
    associated_findings: tuple[AssociatedFinding, ...]
    peer_deltas: dict
    needs_attention: bool
    flagged_ancestors: tuple[str, ...]
    display: dict

    def to_dict(self) -> dict:
        return {
            "objective_id": self.objective_id,
            "label": self.label,
            "indicators": self.indicators,
            "insights": [i.to_dict() for i in self.insights],
            "ancestor_ids": list(self.ancestor_ids),
            "ancestor_findings": [f.to_dict() for f in self.ancestor_findings],
            "associated_findings": [f.to_dict() for f in self.associated_findings],
            "peer_deltas": self.peer_deltas,
            "needs_attention": self.needs_attention,
            "flagged_ancestors": list(self.flagged_ancestors),
            "display": self.display,
        }


def _points_from_entry(entry: dict, key: str) -> tuple[SeriesPoint, ...]:
    raw = entry["series"].get(key)
    if raw is None:
        return ()
    return tuple(SeriesPoint.from_dict(p) for p in raw)


def _scoped_bundle(entry: dict, objective_key: str) -> SeriesBundle:
    """A one-objective bundle whose 'all' series mirrors the objective itself,
    so scoped impact is the share within that objective's own attempts."""
    series: dict = {}
    for mode in (Mode.EXERCISE.value, Mode.TEST.value, MODE_ALL):
        pts = _points_from_entry(entry, f"{objective_key}|{mode}")
        series[(objective_key, mode)] = pts
        series[(None, mode)] = pts
    return SeriesBundle(
        unit_objectives=(objective_key,),
        series=series,
        interval_count=entry["scheme"]["count"],
    )


def _display_for(indicators: dict) -> dict:
    disp: dict = {}
    if indicators.get("mastery") is not None:
        disp["mastery_pct"] = fmt_pct(indicators["mastery"])
    if indicators.get("accuracy") is not None:
        disp["accuracy_pct"] = fmt_pct(indicators["accuracy"])
    if indicators.get("exercise_accuracy") is not None:
        disp["exercise_accuracy_pct"] = fmt_pct(indicators["exercise_accuracy"])
    if indicators.get("test_accuracy") is not None:
        disp["test_accuracy_pct"] = fmt_pct(indicators["test_accuracy"])
    if indicators.get("mean_duration") is not None:
        disp["mean_duration_s"] = fmt_num(indicators["mean_duration"], 1)
    if indicators.get("velocity") is not None:
        disp["velocity_pct_per_interval"] = fmt_pct(indicators["velocity"])
    if indicators.get("reward_score") is not None:
        disp["reward_score"] = fmt_num(indicators["reward_score"], 4)
    if indicators.get("error_rate") is not None:
        disp["error_rate_pct"] = fmt_pct(indicators["error_rate"])
    disp["attempts"] = str(indicators.get("attempts", 0))
    return disp


def diagnose(entry: dict, graph: ObjectiveGraph, config: EngineConfig) -> list[ObjectiveDiagnosis]:
    """One diagnosis per unit objective, from the cache entry alone.

    Raw records are never touched here; everything needed was precomputed by
    the aggregation pass.
    """
    if entry is None:
        raise CacheMissError("no cache entry for this student and unit; run `aggregate` first")

    miner = config.miner()
    unit = graph.unit(entry["unit_id"])
    indicators_by_obj: dict = entry["indicators"]
    ancestor_indicators: dict = entry.get("ancestor_indicators", {})
    cohort = entry.get("cohort", {})

    diagnoses: list[ObjectiveDiagnosis] = []
    for obj_id in unit.objectives:
        indicators = indicators_by_obj.get(obj_id, {"attempts": 0})
        label = graph.objectives[obj_id].label

        current_insights = tuple(mine_for_objective(_scoped_bundle(entry, obj_id), obj_id, miner))

        ancestor_ids = tuple(entry.get("ancestors", {}).get(obj_id, []))
        ancestor_findings = []
        for anc in ancestor_ids:
            anc_ind = ancestor_indicators.get(anc, indicators_by_obj.get(anc, {}))
            anc_insights = tuple(mine_for_objective(_scoped_bundle(entry, anc), anc, miner))
            ancestor_findings.append(
                AncestorFinding(
                    ancestor_id=anc,
                    label=graph.objectives[anc].label if graph.has_objective(anc) else anc,
                    mastery=anc_ind.get("mastery"),
                    insights=anc_insights,
                )
            )

        associated_findings = []
        for assoc in entry.get("associated_sets", {}).get(obj_id, []):
            key = "+".join(assoc["objectives"])
            points = _points_from_entry(entry, f"{key}|{MODE_ALL}")
            total = sum(p.count for p in points)
            correct = math.fsum(p.count * p.accuracy for p in points if p.count > 0)
            assoc_insights = tuple(mine_for_objective(_scoped_bundle(entry, key), key, miner))
            associated_findings.append(
                AssociatedFinding(
                    objectives=tuple(assoc["objectives"]),
                    attempts=assoc["attempts"],
                    accuracy=(correct / total) if total else None,
                    insights=assoc_insights,
                )
            )

        peer_deltas = {}
        overall = cohort.get(f"{obj_id}|{OVERALL}|{MODE_ALL}")
        if overall and indicators.get("accuracy") is not None:
            peer_deltas = {
                "accuracy_vs_peers": indicators["accuracy"] - overall["mean_accuracy"],
                "duration_vs_peers": (indicators["mean_duration"] - overall["mean_duration"])
                if indicators.get("mean_duration") is not None
                else None,
                "count_vs_peers": indicators["attempts"] - overall["mean_count"],
                "peer_mean_accuracy": overall["mean_accuracy"],
                "cohort_size": overall["size"],
            }

        mastery = indicators.get("mastery")
        velocity = indicators.get("velocity")
        def _anc_mastery(anc: str) -> float | None:
            return ancestor_indicators.get(anc, indicators_by_obj.get(anc, {})).get("mastery")

        flagged = tuple(
            anc
            for anc in ancestor_ids
            if _anc_mastery(anc) is not None and _anc_mastery(anc) < config.ancestor_threshold
        )
        needs_attention = bool(
            (mastery is not None and mastery < config.mastery_weak)
            or (velocity is not None and velocity < 0)
            or flagged
        )

        diagnoses.append(
            ObjectiveDiagnosis(
                objective_id=obj_id,
                label=label,
                indicators=indicators,
                insights=current_insights,
                ancestor_ids=ancestor_ids,
                ancestor_findings=tuple(ancestor_findings),
                associated_findings=tuple(associated_findings),
                peer_deltas=peer_deltas,
                needs_attention=needs_attention,
                flagged_ancestors=flagged,
                display=_display_for(indicators),
            )
        )
    return diagnoses
