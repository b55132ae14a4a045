from __future__ import annotations

import random

import numpy as np
import pytest

from questlog.aggregate import SeriesPoint
from questlog.formative import (
    DifficultyProfile,
    RewardConfig,
    actual_reward,
    learning_velocity,
    reward_score,
)
from questlog.model import CatalogEntry, Difficulty, QuestionCatalog

from helpers import make_record

W123 = RewardConfig(1.0, 2.0, 3.0)


def profile(easy, medium, hard, count=100):
    return DifficultyProfile(easy=easy, medium=medium, hard=hard, count=count)


def test_reward_score_all_easy():
    assert reward_score(profile(1.0, 0.0, 0.0), W123) == 1.0


def test_reward_score_direct_weighted_sum():
    assert reward_score(profile(0.5, 0.3, 0.2), W123) == pytest.approx(1.7, abs=1e-12)


def test_reward_score_hard_heavy_bank():
    # hard share 0.4902 with 0.3 medium and 0.2098 easy:
    # 1*0.2098 + 2*0.3 + 3*0.4902 = 2.2804
    got = reward_score(profile(0.2098, 0.3, 0.4902, count=5000), W123)
    assert got == pytest.approx(2.2804, abs=1e-9)


def test_reward_score_monotone_in_hard_share():
    rng = random.Random(8)
    for _ in range(200):
        e = rng.random()
        h = rng.random() * (1 - e)
        m = 1 - e - h
        base = reward_score(profile(e, m, h), W123)
        shift = min(e, rng.random() * e)
        shifted = reward_score(profile(e - shift, m, h + shift), W123)
        assert shifted >= base - 1e-12


def test_profile_from_catalog_counts():
    entries = [
        CatalogEntry(f"q{i}", frozenset({"A"}), Difficulty.HARD if i < 25 else Difficulty.EASY)
        for i in range(51)
    ]
    catalog = QuestionCatalog.from_entries(entries)
    prof = DifficultyProfile.from_catalog(catalog, "A")
    assert prof.count == 51
    assert prof.hard == pytest.approx(25 / 51, abs=1e-12)
    assert DifficultyProfile.from_catalog(catalog, "missing") is None


def test_profile_validates_proportions():
    with pytest.raises(ValueError):
        DifficultyProfile(easy=0.5, medium=0.5, hard=0.5, count=10)


def test_reward_config_rejects_decreasing_weights():
    with pytest.raises(ValueError):
        RewardConfig(3.0, 2.0, 1.0)


def test_actual_reward_all_correct_is_one():
    attempts = [
        make_record(question=f"q{i}", correct=True, difficulty=d)
        for i, d in enumerate([Difficulty.EASY, Difficulty.MEDIUM, Difficulty.HARD])
    ]
    assert actual_reward(attempts, W123) == 1.0
    assert actual_reward(attempts, RewardConfig(2.0, 5.0, 7.0)) == 1.0


def test_actual_reward_all_incorrect_is_zero():
    attempts = [make_record(question=f"q{i}", correct=False) for i in range(4)]
    assert actual_reward(attempts, W123) == 0.0


def test_actual_reward_mixed_easy_hit_hard_miss():
    attempts = [
        make_record(question="q1", correct=True, difficulty=Difficulty.EASY),
        make_record(question="q2", correct=False, difficulty=Difficulty.HARD),
    ]
    # (1*1 + 3*0) / (1 + 3) = 0.25
    assert actual_reward(attempts, W123) == 0.25


def test_actual_reward_none_without_attempts():
    assert actual_reward([], W123) is None


def test_actual_reward_equals_plain_accuracy_with_equal_weights():
    rng = random.Random(17)
    flat = RewardConfig(2.0, 2.0, 2.0)
    for _ in range(100):
        attempts = [
            make_record(
                question=f"q{i}",
                correct=rng.random() < 0.5,
                difficulty=rng.choice(list(Difficulty)),
            )
            for i in range(rng.randint(1, 20))
        ]
        plain = sum(a.correct for a in attempts) / len(attempts)
        assert actual_reward(attempts, flat) == pytest.approx(plain, abs=1e-12)


def point(count, accuracy, duration=60.0):
    if count == 0:
        return SeriesPoint(0, None, None)
    return SeriesPoint(count, duration, accuracy)


def test_velocity_flat_series_is_zero():
    assert learning_velocity((point(2, 0.5), point(3, 0.5))) == 0.0


def test_velocity_exact_line():
    series = (point(1, 0.2), point(1, 0.4), point(1, 0.6))
    assert learning_velocity(series) == pytest.approx(0.2, abs=1e-12)


def test_velocity_absent_under_two_points():
    assert learning_velocity((point(0, None), point(3, 0.7))) is None
    assert learning_velocity(()) is None


def test_velocity_skips_absent_intervals():
    series = (point(1, 0.2), point(0, None), point(1, 0.6))
    # present points are (0, 0.2) and (2, 0.6) -> slope 0.2
    assert learning_velocity(series) == pytest.approx(0.2, abs=1e-12)


def test_velocity_matches_normal_equations_oracle():
    rng = random.Random(23)
    for _ in range(50):
        accs = [rng.random() for _ in range(6)]
        series = tuple(point(1 + rng.randint(0, 3), a) for a in accs)
        xs = np.arange(6, dtype=float)
        ys = np.array(accs)
        design = np.vstack([xs, np.ones(6)]).T
        slope_oracle = np.linalg.lstsq(design, ys, rcond=None)[0][0]
        assert learning_velocity(series) == pytest.approx(slope_oracle, abs=1e-9)


def test_velocity_shift_invariance():
    accs = [0.1, 0.5, 0.3, 0.8]
    base = learning_velocity(tuple(point(1, a) for a in accs))
    shifted = learning_velocity(tuple(point(1, a + 0.125) for a in accs))
    assert shifted == pytest.approx(base, abs=1e-12)


# ---------------------------------------------------------------------------
# Tri-level diagnosis
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def steven_diagnoses():
    from questlog.cache import build_entry
    from questlog.config import EngineConfig
    from questlog.formative import diagnose
    from questlog.synth import STEVEN_ID, synthesize

    graph, records, catalog = synthesize(seed=1729, cohort=15)
    config = EngineConfig()
    entry = build_entry(STEVEN_ID, "U7", records, graph, catalog, config)
    return graph, diagnose(entry, graph, config)


def test_isolated_objective_has_empty_branches():
    from questlog.cache import build_entry
    from questlog.config import EngineConfig
    from questlog.formative import diagnose
    from questlog.model import LearningObjective, ObjectiveGraph, QuestionCatalog, Unit

    graph = ObjectiveGraph.build(
        [LearningObjective("X", "X", "U1")], [Unit("U1", "U1", ("X",))], []
    )
    records = [make_record(question=f"q{i}", objectives=("X",)) for i in range(4)]
    config = EngineConfig()
    entry = build_entry("s1", "U1", records, graph, QuestionCatalog.from_records(records), config)
    (diag,) = diagnose(entry, graph, config)
    assert diag.ancestor_findings == ()
    assert diag.associated_findings == ()


def test_steven_unit3_ancestors_surface_low_mastery(steven_diagnoses):
    _graph, diagnoses = steven_diagnoses
    s1205 = next(d for d in diagnoses if d.objective_id == "S1205")
    by_id = {f.ancestor_id: f for f in s1205.ancestor_findings}
    assert by_id["N1114"].mastery == 0.24
    assert by_id["N1115"].mastery == 0.25
    assert {"N1114", "N1115"} <= set(s1205.flagged_ancestors)
    # nearest-first: direct prerequisites come before their own prerequisites
    assert s1205.ancestor_ids[:2] == ("N1114", "N1115")


def test_diagnosis_findings_stay_within_tri_level_closure(steven_diagnoses):
    graph, diagnoses = steven_diagnoses
    from questlog.model import ancestors

    unit_objs = {d.objective_id for d in diagnoses}
    for diag in diagnoses:
        allowed = unit_objs | set(ancestors(graph, diag.objective_id))
        for finding in diag.associated_findings:
            allowed |= set(finding.objectives)
        assert set(diag.ancestor_ids) <= allowed
        for finding in diag.ancestor_findings:
            assert finding.ancestor_id in allowed
        for finding in diag.associated_findings:
            assert diag.objective_id in finding.objectives
