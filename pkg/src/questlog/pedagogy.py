"""Deterministic teacher stage: diagnosis -> categorized, slot-filled feedback.

Category is a pure function of the mastery band and the attention flags:
mastery >= 0.85 reinforces (with an extension), [0.6, 0.85) praises the
strongest signal and sets one mission, below 0.6 remediates and names the
most likely cause. Prerequisite causes are phrased as "builds on";
associated-set causes stay correlational ("often appears alongside") because
co-occurrence is not evidence of a prerequisite gap.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .config import EngineConfig
from .fmt import fmt_pct
from .formative import ObjectiveDiagnosis


class FeedbackCategory(str, Enum):
    REMEDIATE = "remediate"
    MEDAL_AND_MISSION = "medal_and_mission"
    REINFORCE = "reinforce"
    NO_DATA = "no_data"


_CATEGORY_ORDER = {
    FeedbackCategory.REMEDIATE: 0,
    FeedbackCategory.MEDAL_AND_MISSION: 1,
    FeedbackCategory.REINFORCE: 2,
    FeedbackCategory.NO_DATA: 3,
}


@dataclass(frozen=True)
class FeedbackItem:
    objective_id: str
    label: str
    category: FeedbackCategory
    praise: str | None
    gap: str | None
    cause: dict | None  # {"kind": "ancestor"|"associated", ...}
    action: str
    tone: str
    provenance: dict

    def to_dict(self) -> dict:
        return {
            "objective_id": self.objective_id,
            "label": self.label,
            "category": self.category.value,
            "praise": self.praise,
            "gap": self.gap,
            "cause": self.cause,
            "action": self.action,
            "tone": self.tone,
            "provenance": self.provenance,
        }


def categorize(mastery: float | None, velocity: float | None, config: EngineConfig) -> FeedbackCategory:
    """Band rule; a clearly negative velocity demotes Reinforce one band."""
    if mastery is None:
        return FeedbackCategory.NO_DATA
    if mastery >= config.mastery_strong:
        if velocity is not None and velocity < config.velocity_demotion:
            return FeedbackCategory.MEDAL_AND_MISSION
        return FeedbackCategory.REINFORCE
    if mastery >= config.mastery_weak:
        return FeedbackCategory.MEDAL_AND_MISSION
    return FeedbackCategory.REMEDIATE


def _weakest_flagged_ancestor(diag: ObjectiveDiagnosis) -> dict | None:
    flagged = [f for f in diag.ancestor_findings if f.ancestor_id in diag.flagged_ancestors]
    if not flagged:
        return None
    weakest = min(flagged, key=lambda f: (f.mastery if f.mastery is not None else 1.0, f.ancestor_id))
    return {
        "kind": "ancestor",
        "objective_id": weakest.ancestor_id,
        "label": weakest.label,
        "mastery": weakest.mastery,
        "mastery_pct": fmt_pct(weakest.mastery) if weakest.mastery is not None else None,
    }


def _first_associated_cause(diag: ObjectiveDiagnosis) -> dict | None:
    for finding in diag.associated_findings:
        if finding.accuracy is not None and finding.accuracy < 0.6:
            return {
                "kind": "associated",
                "objective_ids": list(finding.objectives),
                "accuracy": finding.accuracy,
                "accuracy_pct": finding.to_dict()["accuracy_pct"],
            }
    return None


def _praise_for(diag: ObjectiveDiagnosis) -> str:
    ind = diag.indicators
    disp = diag.display
    if ind.get("velocity") is not None and ind["velocity"] > 0:
        return (
            f"your accuracy on {diag.label} is climbing about "
            f"{disp['velocity_pct_per_interval']} percentage points per interval"
        )
    delta = diag.peer_deltas.get("accuracy_vs_peers")
    if delta is not None and delta > 0:
        return f"you are running ahead of the peer average on {diag.label}"
    if ind.get("error_rate") is not None and ind["error_rate"] < 0.3:
        return f"most of your work on {diag.label} lands correctly"
    return f"you kept up steady practice on {diag.label}"


def build_item(diag: ObjectiveDiagnosis, config: EngineConfig) -> FeedbackItem:
    mastery = diag.indicators.get("mastery")
    velocity = diag.indicators.get("velocity")
    category = categorize(mastery, velocity, config)
    disp = diag.display
    provenance = {
        "mastery": mastery,
        "velocity": velocity,
        "flagged_ancestors": list(diag.flagged_ancestors),
        "needs_attention": diag.needs_attention,
        "error_rate": diag.indicators.get("error_rate"),
        "attempts": diag.indicators.get("attempts"),
    }

    if category is FeedbackCategory.NO_DATA:
        return FeedbackItem(
            objective_id=diag.objective_id,
            label=diag.label,
            category=category,
            praise=None,
            gap=f"no attempts recorded yet for {diag.label}",
            cause=None,
            action=f"start with a couple of easy problems on {diag.label} to get a first reading",
            tone="supportive",
            provenance=provenance,
        )

    if category is FeedbackCategory.REINFORCE:
        return FeedbackItem(
            objective_id=diag.objective_id,
            label=diag.label,
            category=category,
            praise=f"you have a solid grip on {diag.label}, with mastery at {disp['mastery_pct']}%",
            gap=None,
            cause=None,
            action=f"stretch further with hard-tier problems that involve {diag.label}",
            tone="supportive",
            provenance=provenance,
        )

    if category is FeedbackCategory.MEDAL_AND_MISSION:
        return FeedbackItem(
            objective_id=diag.objective_id,
            label=diag.label,
            category=category,
            praise=_praise_for(diag),
            gap=f"mastery on {diag.label} stands at {disp['mastery_pct']}%, not yet secure",
            cause=None,
            action=f"work one focused problem set on {diag.label} and review every miss",
            tone="supportive",
            provenance=provenance,
        )

    cause = _weakest_flagged_ancestor(diag) or _first_associated_cause(diag)
    if cause is None:
        action = f"rebuild {diag.label} from easy-tier problems upward"
    elif cause["kind"] == "ancestor":
        action = (
            f"revisit {cause['label']} ({cause['objective_id']}) first; "
            f"{diag.label} builds on it"
        )
    else:
        ids = ", ".join(cause["objective_ids"])
        action = (
            f"practice mixed questions that pair {ids}; "
            f"{diag.label} often appears alongside them"
        )
    return FeedbackItem(
        objective_id=diag.objective_id,
        label=diag.label,
        category=category,
        praise=None,
        gap=f"mastery on {diag.label} is at {disp['mastery_pct']}%",
        cause=cause,
        action=action,
        tone="supportive",
        provenance=provenance,
    )


def generate_feedback(diagnoses: list[ObjectiveDiagnosis], config: EngineConfig) -> list[FeedbackItem]:
    """One item per diagnosis, ordered remediate -> medal-and-mission -> reinforce."""
    items = [build_item(d, config) for d in diagnoses]
    order = {d.objective_id: i for i, d in enumerate(diagnoses)}
    return sorted(items, key=lambda item: (_CATEGORY_ORDER[item.category], order[item.objective_id]))
