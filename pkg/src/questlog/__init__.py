"""questlog: narrative learning reports from raw exercise and test logs."""

from .aggregate import (
    CohortStats,
    IntervalScheme,
    PerformanceSeries,
    SeriesPoint,
    SeriesSubject,
    build_cohort_stats,
    build_series,
)
from .config import EngineConfig, load_config
from .formative import (
    DifficultyProfile,
    ObjectiveDiagnosis,
    RewardConfig,
    actual_reward,
    diagnose,
    learning_velocity,
    reward_score,
)
from .insights import Insight, MinerConfig, SeriesBundle, Subspace, enumerate_subspaces, mine_top_k
from .model import (
    AttemptRecord,
    Difficulty,
    LearningObjective,
    Mode,
    ObjectiveGraph,
    QuestionCatalog,
    Unit,
    ancestors,
    associated_sets,
    validate_graph,
)

__version__ = "0.1.0"

__all__ = [
    "AttemptRecord",
    "CohortStats",
    "Difficulty",
    "DifficultyProfile",
    "EngineConfig",
    "Insight",
    "IntervalScheme",
    "LearningObjective",
    "MinerConfig",
    "Mode",
    "ObjectiveDiagnosis",
    "ObjectiveGraph",
    "PerformanceSeries",
    "QuestionCatalog",
    "RewardConfig",
    "SeriesBundle",
    "SeriesPoint",
    "SeriesSubject",
    "Subspace",
    "Unit",
    "actual_reward",
    "ancestors",
    "associated_sets",
    "build_cohort_stats",
    "build_series",
    "diagnose",
    "enumerate_subspaces",
    "learning_velocity",
    "load_config",
    "mine_top_k",
    "reward_score",
    "validate_graph",
    "__version__",
]
