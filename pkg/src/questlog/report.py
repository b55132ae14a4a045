"""Request-time report pipeline: cache entry in, finished document out.

This path reads the precomputed cache only; raw records are never scanned
here. The heavy aggregation lives in `cache.refresh_cache`, run offline.
"""

from __future__ import annotations

from datetime import datetime

from .cache import bundle_from_entry
from .config import EngineConfig
from .formative import diagnose
from .insights import mine_top_k
from .model import ObjectiveGraph
from .pedagogy import generate_feedback
from .story import RemoteLlmBackend, plan_stages, render_report


def generate_report(
    entry: dict,
    graph: ObjectiveGraph,
    config: EngineConfig,
    backend: RemoteLlmBackend | None = None,
    now: datetime | None = None,
) -> dict:
    diagnoses = diagnose(entry, graph, config)
    top = mine_top_k(bundle_from_entry(entry), config.miner())
    feedback = generate_feedback(diagnoses, config)
    plans = plan_stages(entry, graph, diagnoses, top, feedback, config)
    return render_report(plans, entry, config, backend=backend, now=now)
