#!/usr/bin/env python3
"""Per-objective time series and peer statistics.

Shows the three per-interval aggregates (attempt count, mean duration, mean
accuracy) for one student and one objective, then the cohort cells used for
peer comparison.
"""

from questlog.aggregate import IntervalScheme, SeriesSubject, build_cohort_stats, build_series
from questlog.synth import STEVEN_ID, synthesize

graph, records, catalog = synthesize(seed=1729, cohort=25)
steven = [r for r in records if r.student_id == STEVEN_ID]

scheme = IntervalScheme.covering(steven)
print(f"interval scheme: origin={scheme.origin:%Y-%m-%d}, width={scheme.width.days}d, K={scheme.count}\n")

# weekly series for S1102 practice: count N, mean duration, mean accuracy
series = build_series(steven, scheme, SeriesSubject(STEVEN_ID, ("S1102",), "exercise"))
print("S1102 practice, week by week:")
for k, p in enumerate(series.points):
    if p.count:
        print(f"  week {k:2d}: N={p.count:2d}  mean_duration={p.mean_duration:6.1f}s  accuracy={p.accuracy:.4f}")
print(f"overall: {series.total_count()} attempts, accuracy {series.overall_accuracy():.4f}")
print(f"mean time per question: {series.overall_mean_duration():.1f}s\n")

# the test-mode filter is a separate slice, never merged silently
test = build_series(steven, scheme, SeriesSubject(STEVEN_ID, ("S1205",), "test"))
print(f"S1205 test-mode accuracy: {test.overall_accuracy():.4f} over {test.total_count()} attempts\n")

# cohort cells: peer means over exactly the students active in each cell
stats = build_cohort_stats(records, scheme, graph)
for obj in ("S1102", "S1205"):
    cell = stats.get(obj, "overall", "all")
    print(
        f"{obj} peers: mean accuracy {cell.mean_accuracy:.3f}, "
        f"mean attempts {cell.mean_count:.1f}, cohort size {cell.size}"
    )
