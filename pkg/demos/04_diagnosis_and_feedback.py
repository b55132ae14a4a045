#!/usr/bin/env python3
"""From raw indicators to teacher feedback.

Reward scoring over the question bank, difficulty-weighted mastery, learning
velocity, the tri-level diagnosis (current / prerequisites / associated), and
the deterministic feedback rules on top.
"""

from questlog.cache import build_entry
from questlog.config import EngineConfig
from questlog.formative import DifficultyProfile, RewardConfig, diagnose, reward_score
from questlog.pedagogy import generate_feedback
from questlog.synth import STEVEN_ID, synthesize

graph, records, catalog = synthesize(seed=1729, cohort=25)
config = EngineConfig()

# reward score: how much challenge the question bank carries per objective
weights = RewardConfig.from_engine(config)
print("question-bank challenge (potential reward, weights 1/2/3):")
for obj in graph.unit("U7").objectives:
    profile = DifficultyProfile.from_catalog(catalog, obj)
    print(f"  {obj}: hard share {profile.hard:.4f} -> reward {reward_score(profile, weights):.4f}")

entry = build_entry(STEVEN_ID, "U7", records, graph, catalog, config)
diagnoses = diagnose(entry, graph, config)

print("\ntri-level diagnosis:")
for diag in diagnoses:
    ind = diag.indicators
    mastery = f"{ind['mastery']:.4f}" if ind["mastery"] is not None else "n/a"
    velocity = f"{ind['velocity']:+.4f}" if ind["velocity"] is not None else "n/a"
    print(f"  {diag.objective_id}: mastery={mastery} velocity={velocity}/interval "
          f"errors={ind['error_count']} attention={'YES' if diag.needs_attention else 'no'}")
    for finding in diag.ancestor_findings[:3]:
        flag = " (FLAGGED)" if finding.ancestor_id in diag.flagged_ancestors else ""
        print(f"      prerequisite {finding.ancestor_id}: mastery={finding.mastery}{flag}")
    for finding in diag.associated_findings:
        print(f"      associated {list(finding.objectives)}: accuracy={finding.accuracy} over {finding.attempts} attempts")

print("\nteacher feedback (remediate -> medal-and-mission -> reinforce):")
for item in generate_feedback(diagnoses, config):
    cause = f" cause={item.cause['kind']}:{item.cause.get('objective_id', item.cause.get('objective_ids'))}" if item.cause else ""
    print(f"  [{item.category.value}] {item.objective_id}{cause}")
    print(f"      action: {item.action}")
