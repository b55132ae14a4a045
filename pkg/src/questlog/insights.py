"""Top-k insight mining over the per-objective performance series.

Five detectors run on every subspace of (mode, objective, measure); each
candidate gets significance in [0, 1], impact = the share of the student's
in-unit attempts the subspace covers, and score = significance * impact.
The top k by score survive.

Reproducibility contract (any re-implementation must match bit-for-bit):

* RNG is a 64-bit linear congruential generator,
  state' = (6364136223846793005 * state + 1442695040888963407) mod 2^64,
  seeded with one advance applied to the raw seed. Bounded draws use integer
  arithmetic on the top 53 bits: below(n) = ((state >> 11) * n) >> 53.
  Shuffles are Fisher-Yates from the top: for i = n-1 .. 1, swap a[i] with
  a[below(i+1)].
* Every candidate derives its own seed: base_seed XOR FNV-1a64 of
  "<kind>|<mode>|<objective>|<measure>", so evaluation order never matters.
* Sums that feed a comparison use exact compensated summation (math.fsum)
  except inside the change-point split scan, which uses Neumaier-compensated
  left-to-right prefix sums of y and y*y (see `neumaier_prefix`); every
  operation there has a fixed order, so identical inputs give identical
  statistics on any IEEE-754 double implementation.
* Permutation p-values are (1 + #{stat_perm >= stat_obs}) / (1 + permutations)
  with plain float >= on identically computed statistics.

Detector math:

* trend: Pearson r of values against interval index over present points;
  two-sided permutation test shuffles the value deviations and compares
  |sxy| (the denominator is permutation-invariant). significance = 1 - p;
  evidence carries the least-squares slope per interval.
* outlier: robust z = |x - median| / (1.4826 * MAD) at the max-z point;
  significance = 1 - erfc(z / sqrt(2)). When MAD is zero but some spread
  remains (over half the points identical), the scale falls back to
  1.2533 * mean absolute deviation; with no spread at all the detector
  abstains (that is low_variance territory).
* change_point: best split maximizing |mean(prefix) - mean(suffix)| divided
  by the pooled standard deviation sqrt((ssd1 + ssd2) / (n - 2)), where
  ssd1 = max(0, Q[s] - s*m1*m1) and ssd2 = max(0, (Q[n]-Q[s]) - (n-s)*m2*m2)
  over the Neumaier prefix sums P (of y) and Q (of y*y); the same permutation
  test runs on the max-split statistic, first split winning ties. A zero
  pooled deviation with unequal means counts as an infinite statistic.
* low_variance: cv = population std / mean (mean must be positive);
  significance = max(0, 1 - cv / 0.1).
* majority: market-share check over per-objective totals of a measure within
  one (mode, measure) slice; fires when the top share exceeds 0.5 with
  significance equal to that share. Only defined for all-objective subspaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from operator import mul
from typing import Optional

from .aggregate import SeriesPoint
from .errors import UnknownUnitError
from .model import MODE_ALL, MODE_FILTERS, ObjectiveGraph

KIND_TREND = "trend"
KIND_OUTLIER = "outlier"
KIND_CHANGE_POINT = "change_point"
KIND_LOW_VARIANCE = "low_variance"
KIND_MAJORITY = "majority"
ALL_KINDS = (KIND_CHANGE_POINT, KIND_LOW_VARIANCE, KIND_MAJORITY, KIND_OUTLIER, KIND_TREND)

MEASURE_COUNT = "count"
MEASURE_DURATION = "mean_duration"
MEASURE_ACCURACY = "accuracy"
MEASURES = (MEASURE_COUNT, MEASURE_DURATION, MEASURE_ACCURACY)

_MASK64 = (1 << 64) - 1


class Lcg:
    """Deterministic 64-bit LCG; constants are part of the wire contract."""

    MULTIPLIER = 6364136223846793005
    INCREMENT = 1442695040888963407

    def __init__(self, seed: int):
        self.state = seed & _MASK64
        self.next_u64()  # one burn-in advance so tiny seeds decorrelate

    def next_u64(self) -> int:
        self.state = (self.MULTIPLIER * self.state + self.INCREMENT) & _MASK64
        return self.state

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) via the top 53 bits, integer-exact."""
        return ((self.next_u64() >> 11) * n) >> 53

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


def fnv1a64(text: str) -> int:
    h = 14695981039346656037
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 1099511628211) & _MASK64
    return h


@dataclass(frozen=True)
class MinerConfig:
    floor: float = 0.8
    permutations: int = 1000
    seed: int = 1729
    top_k: int = 3


@dataclass(frozen=True)
class Subspace:
    """One slice of the data cube: mode filter, objective (None = all), measure."""

    mode: str
    objective: Optional[str]
    measure: str

    def key(self) -> str:
        return f"{self.mode}|{self.objective or MODE_ALL}|{self.measure}"

    def sort_key(self) -> tuple[str, str, str]:
        return (self.mode, self.objective or MODE_ALL, self.measure)


@dataclass(frozen=True)
class Insight:
    kind: str
    subspace: Subspace
    significance: float
    impact: float
    score: float
    evidence: dict
    snapshot: list  # the measure values the detector saw, for rendering

    @property
    def insight_id(self) -> str:
        return f"{self.kind}:{self.subspace.key()}"

    def to_dict(self) -> dict:
        return {
            "id": self.insight_id,
            "kind": self.kind,
            "subspace": {
                "mode": self.subspace.mode,
                "objective": self.subspace.objective,
                "measure": self.subspace.measure,
            },
            "significance": self.significance,
            "impact": self.impact,
            "score": self.score,
            "evidence": self.evidence,
            "snapshot": self.snapshot,
        }


@dataclass
class SeriesBundle:
    """The per-subject series a miner run reads: (objective | None, mode) -> points."""

    unit_objectives: tuple[str, ...]
    series: dict[tuple[Optional[str], str], tuple[SeriesPoint, ...]]
    interval_count: int = field(default=0)

    def points_for(self, objective: Optional[str], mode: str) -> tuple[SeriesPoint, ...]:
        return self.series.get((objective, mode), ())

    def total_attempts(self, objective: Optional[str], mode: str) -> int:
        return sum(p.count for p in self.points_for(objective, mode))


def measure_points(points: tuple[SeriesPoint, ...], measure: str) -> list[tuple[int, float]]:
    """(interval index, value) pairs; duration/accuracy only where attempts exist."""
    if measure == MEASURE_COUNT:
        return [(k, float(p.count)) for k, p in enumerate(points)]
    out = []
    for k, p in enumerate(points):
        if p.count > 0:
            val = p.mean_duration if measure == MEASURE_DURATION else p.accuracy
            out.append((k, float(val)))
    return out


# ---------------------------------------------------------------------------
# Detectors
# ---------------------------------------------------------------------------


def _median(values: list[float]) -> float:
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2 == 1:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def _perm_pvalue(stat_obs: float, perm_stats: list[float], permutations: int) -> float:
    count = sum(1 for s in perm_stats if s >= stat_obs)
    return (1 + count) / (1 + permutations)


def neumaier_prefix(values: list[float]) -> list[float]:
    """Prefix sums with Neumaier compensation, fixed left-to-right order.

    out[k] is the compensated sum of values[:k]; the running state keeps the
    naive sum and the compensation separately, so the operation sequence is
    fully pinned and reproducible.
    """
    total = 0.0
    comp = 0.0
    out = [0.0]
    for v in values:
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
        out.append(total + comp)
    return out


def detect_trend(points: list[tuple[int, float]], permutations: int, seed: int) -> Optional[tuple[float, dict]]:
    n = len(points)
    if n < 3:
        return None
    xs = [float(k) for k, _ in points]
    ys = [v for _, v in points]
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    xd = [x - mx for x in xs]
    yd = [y - my for y in ys]
    sxx = math.fsum(d * d for d in xd)
    syy = math.fsum(d * d for d in yd)
    if sxx == 0.0 or syy == 0.0:
        return None
    sxy = math.fsum(map(mul, xd, yd))
    r = sxy / math.sqrt(sxx * syy)
    slope = sxy / sxx

    stat_obs = abs(sxy)
    count = 0
    perm = list(yd)
    fsum = math.fsum
    # inlined LCG + Fisher-Yates; hot path
    state = Lcg(seed).state
    for _ in range(permutations):
        for i in range(n - 1, 0, -1):
            state = (6364136223846793005 * state + 1442695040888963407) & _MASK64
            j = ((state >> 11) * (i + 1)) >> 53
            perm[i], perm[j] = perm[j], perm[i]
        if abs(fsum(map(mul, xd, perm))) >= stat_obs:
            count += 1
    p = (1 + count) / (1 + permutations)
    evidence = {
        "slope": slope,
        "direction": "increasing" if slope > 0 else ("decreasing" if slope < 0 else "flat"),
        "r": r,
        "n_points": n,
    }
    return 1.0 - p, evidence


def detect_outlier(points: list[tuple[int, float]]) -> Optional[tuple[float, dict]]:
    n = len(points)
    if n < 3:
        return None
    ys = [v for _, v in points]
    med = _median(ys)
    absdev = [abs(y - med) for y in ys]
    mad = _median(absdev)
    if mad > 0.0:
        scale = 1.4826 * mad
    else:
        mean_ad = math.fsum(absdev) / n
        if mean_ad == 0.0:
            return None  # zero spread belongs to low_variance territory
        scale = 1.2533 * mean_ad
    best_i = 0
    best_z = absdev[0] / scale
    for i in range(1, n):
        z = absdev[i] / scale
        if z > best_z:
            best_z, best_i = z, i
    significance = 1.0 - math.erfc(best_z / math.sqrt(2.0))
    evidence = {
        "index": points[best_i][0],
        "value": points[best_i][1],
        "z": best_z,
        "median": med,
    }
    return significance, evidence


def _max_split_stat(ys: list[float]) -> tuple[float, int]:
    """Best change-point statistic over all splits; first split wins ties.

    Uses the documented Neumaier prefix sums of y and y*y; squared-deviation
    sums are computed as Q[s] - s*m*m (clamped at zero), which keeps every
    permutation evaluation O(n) with a pinned operation order.
    """
    n = len(ys)
    prefix = neumaier_prefix(ys)
    prefix_sq = neumaier_prefix([y * y for y in ys])
    total = prefix[n]
    total_sq = prefix_sq[n]
    denom = n - 2
    best = -1.0
    best_s = 1
    sqrt = math.sqrt
    inf = math.inf
    for s in range(1, n):
        n2 = n - s
        m1 = prefix[s] / s
        m2 = (total - prefix[s]) / n2
        ssd1 = prefix_sq[s] - s * m1 * m1
        if ssd1 < 0.0:
            ssd1 = 0.0
        ssd2 = (total_sq - prefix_sq[s]) - n2 * m2 * m2
        if ssd2 < 0.0:
            ssd2 = 0.0
        pooled = sqrt((ssd1 + ssd2) / denom)
        diff = m1 - m2
        if diff < 0.0:
            diff = -diff
        if pooled > 0.0:
            stat = diff / pooled
        else:
            stat = inf if diff > 0.0 else 0.0
        if stat > best:
            best, best_s = stat, s
    return best, best_s


def detect_change_point(points: list[tuple[int, float]], permutations: int, seed: int) -> Optional[tuple[float, dict]]:
    n = len(points)
    if n < 3:
        return None
    ys = [v for _, v in points]
    stat_obs, split = _max_split_stat(ys)
    if stat_obs <= 0.0:
        return None
    count = 0
    perm = list(ys)
    split_stat = _max_split_stat
    state = Lcg(seed).state
    for _ in range(permutations):
        for i in range(n - 1, 0, -1):
            state = (6364136223846793005 * state + 1442695040888963407) & _MASK64
            j = ((state >> 11) * (i + 1)) >> 53
            perm[i], perm[j] = perm[j], perm[i]
        if split_stat(perm)[0] >= stat_obs:
            count += 1
    p = (1 + count) / (1 + permutations)
    before = ys[:split]
    after = ys[split:]
    evidence = {
        "index": points[split][0],
        "before_mean": math.fsum(before) / len(before),
        "after_mean": math.fsum(after) / len(after),
        "n_points": n,
    }
    return 1.0 - p, evidence


def detect_low_variance(points: list[tuple[int, float]]) -> Optional[tuple[float, dict]]:
    n = len(points)
    if n < 2:
        return None
    ys = [v for _, v in points]
    mean = math.fsum(ys) / n
    if mean <= 0.0:
        return None
    std = math.sqrt(math.fsum((y - mean) ** 2 for y in ys) / n)
    cv = std / mean
    significance = max(0.0, 1.0 - cv / 0.1)
    if significance <= 0.0:
        return None
    return significance, {"cv": cv, "mean": mean, "n_points": n}


def majority_totals(bundle: SeriesBundle, mode: str, measure: str) -> dict[str, float]:
    """Per-objective totals of a measure; the basis for market-share checks."""
    totals: dict[str, float] = {}
    for obj in bundle.unit_objectives:
        pts = bundle.points_for(obj, mode)
        if measure == MEASURE_COUNT:
            total = float(sum(p.count for p in pts))
        elif measure == MEASURE_DURATION:
            total = math.fsum(p.count * p.mean_duration for p in pts if p.count > 0)
        else:
            total = math.fsum(p.count * p.accuracy for p in pts if p.count > 0)
        totals[obj] = total
    return totals


def detect_majority(totals: dict[str, float]) -> Optional[tuple[float, dict]]:
    if not totals:
        return None
    grand = math.fsum(totals[o] for o in sorted(totals))
    if grand <= 0.0:
        return None
    best_obj = min(totals, key=lambda o: (-totals[o], o))
    share = totals[best_obj] / grand
    if share <= 0.5:
        return None
    evidence = {"objective": best_obj, "share": share, "totals": dict(sorted(totals.items()))}
    return share, evidence


# ---------------------------------------------------------------------------
# Enumeration, scoring, ranking
# ---------------------------------------------------------------------------


def enumerate_subspaces(graph: ObjectiveGraph, unit_id: str) -> list[Subspace]:
    """Every (mode, objective-or-all, measure) combination, in a fixed order."""
    unit = graph.unit(unit_id)
    if unit is None:
        raise UnknownUnitError(f"unknown unit: {unit_id}")
    objectives: list[Optional[str]] = list(unit.objectives) + [None]
    return [
        Subspace(mode=mode, objective=obj, measure=measure)
        for mode in MODE_FILTERS
        for obj in objectives
        for measure in MEASURES
    ]


def subspaces_for_bundle(bundle: SeriesBundle, objective: Optional[str] = None) -> list[Subspace]:
    """Subspaces over a bundle; optionally restricted to one objective."""
    objectives: list[Optional[str]]
    if objective is not None:
        objectives = [objective]
    else:
        objectives = list(bundle.unit_objectives) + [None]
    return [
        Subspace(mode=mode, objective=obj, measure=measure)
        for mode in MODE_FILTERS
        for obj in objectives
        for measure in MEASURES
    ]


def candidate_seed(base_seed: int, kind: str, subspace: Subspace) -> int:
    return (base_seed ^ fnv1a64(f"{kind}|{subspace.key()}")) & _MASK64


# Detector results are pure functions of (kind, points, permutations, seed);
# tri-level diagnosis revisits the same series many times, so memoize.
_detector_memo: dict[tuple, Optional[tuple[float, dict]]] = {}
_MEMO_LIMIT = 50_000


def _run_detector(
    kind: str,
    points: list[tuple[int, float]],
    permutations: int,
    seed: int,
) -> Optional[tuple[float, dict]]:
    key = (kind, tuple(points), permutations, seed)
    if key in _detector_memo:
        return _detector_memo[key]
    if kind == KIND_TREND:
        result = detect_trend(points, permutations, seed)
    elif kind == KIND_OUTLIER:
        result = detect_outlier(points)
    elif kind == KIND_CHANGE_POINT:
        result = detect_change_point(points, permutations, seed)
    elif kind == KIND_LOW_VARIANCE:
        result = detect_low_variance(points)
    else:
        raise ValueError(f"unknown detector kind: {kind}")
    if len(_detector_memo) >= _MEMO_LIMIT:
        _detector_memo.clear()
    _detector_memo[key] = result
    return result


def detect(
    points: list[tuple[int, float]],
    kind: str,
    config: MinerConfig,
    subspace: Subspace,
) -> Optional[tuple[float, dict]]:
    """Run one time-series detector; None when it abstains."""
    seed = candidate_seed(config.seed, kind, subspace)
    return _run_detector(kind, points, config.permutations, seed)


def score_candidates(
    bundle: SeriesBundle,
    subspaces: list[Subspace],
    config: MinerConfig,
) -> list[Insight]:
    """Score every (subspace, kind) candidate whose significance clears the floor."""
    total = bundle.total_attempts(None, MODE_ALL)
    if total == 0:
        return []

    insights: list[Insight] = []
    for subspace in subspaces:
        pts = bundle.points_for(subspace.objective, subspace.mode)
        covered = sum(p.count for p in pts)
        impact = covered / total
        values = measure_points(pts, subspace.measure)

        for kind in (KIND_TREND, KIND_OUTLIER, KIND_CHANGE_POINT, KIND_LOW_VARIANCE):
            result = detect(values, kind, config, subspace)
            if result is None:
                continue
            significance, evidence = result
            if significance <= config.floor:
                continue
            insights.append(
                Insight(
                    kind=kind,
                    subspace=subspace,
                    significance=significance,
                    impact=impact,
                    score=significance * impact,
                    evidence=evidence,
                    snapshot=[[k, v] for k, v in values],
                )
            )

        if subspace.objective is None:
            totals = majority_totals(bundle, subspace.mode, subspace.measure)
            result = detect_majority(totals)
            if result is not None:
                significance, evidence = result
                if significance > config.floor:
                    insights.append(
                        Insight(
                            kind=KIND_MAJORITY,
                            subspace=subspace,
                            significance=significance,
                            impact=impact,
                            score=significance * impact,
                            evidence=evidence,
                            snapshot=[[o, t] for o, t in sorted(totals.items())],
                        )
                    )
    return insights


def rank_insights(insights: list[Insight]) -> list[Insight]:
    return sorted(insights, key=lambda i: (-i.score, i.kind, i.subspace.sort_key()))


def mine_top_k(bundle: SeriesBundle, config: MinerConfig, k: int | None = None) -> list[Insight]:
    """The ranked head of every scored candidate; fewer when few clear the floor."""
    k = config.top_k if k is None else k
    subspaces = subspaces_for_bundle(bundle)
    ranked = rank_insights(score_candidates(bundle, subspaces, config))
    return ranked[:k]


def mine_for_objective(bundle: SeriesBundle, objective: str, config: MinerConfig, k: int | None = None) -> list[Insight]:
    """Scoped mining for one objective (used by the tri-level diagnosis)."""
    k = config.top_k if k is None else k
    subspaces = subspaces_for_bundle(bundle, objective=objective)
    ranked = rank_insights(score_candidates(bundle, subspaces, config))
    return ranked[:k]
