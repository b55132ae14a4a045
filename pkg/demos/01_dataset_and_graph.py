#!/usr/bin/env python3
"""Walk through the synthetic dataset and the prerequisite graph.

Builds the bundled "steven" scenario in memory, checks the graph invariants,
and pokes at the two traversals everything else depends on: the ancestor
closure and the associated-set extraction.
"""

from questlog.model import ancestors, associated_set_counts, validate_graph
from questlog.synth import STEVEN_ID, synthesize

graph, records, catalog = synthesize(seed=1729, cohort=25)

print(f"{len(records)} attempt records, {len(catalog)} catalog questions")
print(f"{len(graph.objectives)} objectives across {len(graph.units)} units\n")

# the graph validates cleanly: acyclic, no dangling edges, every objective in one unit
violations = validate_graph(list(graph.objectives.values()), list(graph.units), sorted(graph.edges))
print("graph violations:", violations or "none")

for unit in graph.units:
    print(f"  {unit.id}  {unit.title}: {', '.join(unit.objectives)}")

# prerequisite closures, nearest first
print("\nancestor closures (nearest first):")
for obj in ("S1205", "S2106", "S1102"):
    print(f"  {obj} <- {ancestors(graph, obj)}")

# associated sets: co-tagged questions, minus anything already explained by
# prerequisites
steven = [r for r in records if r.student_id == STEVEN_ID]
print("\nassociated sets observed for S1205 (set, attempts):")
for tag_set, count in associated_set_counts(steven, graph, "S1205"):
    print(f"  {sorted(tag_set)} x{count}")
