"""Engine configuration with flags > environment > config file > defaults."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError
from .insights import MinerConfig

ENV_PREFIX = "QUESTLOG_"


@dataclass(frozen=True)
class EngineConfig:
    # interval scheme; origin/count default to values derived from the data
    interval_width_days: float = 7.0
    origin: str | None = None
    interval_count: int | None = None
    # reward weights for (easy, medium, hard)
    weight_easy: float = 1.0
    weight_medium: float = 2.0
    weight_hard: float = 3.0
    # mastery bands and attention thresholds
    mastery_strong: float = 0.85
    mastery_weak: float = 0.6
    ancestor_threshold: float = 0.6
    velocity_demotion: float = -0.05
    # insight mining
    insight_floor: float = 0.8
    top_k: int = 3
    permutations: int = 1000
    seed: int = 1729
    # narrative backend
    backend: str = "template"
    llm_endpoint: str | None = None
    # storage
    data_dir: str = "data"
    cache_dir: str = field(default="")
    cohort_scope: str = "all"

    def __post_init__(self):
        if not self.cache_dir:
            object.__setattr__(self, "cache_dir", str(Path(self.data_dir) / "cache"))

    def validate(self) -> "EngineConfig":
        if self.interval_width_days <= 0:
            raise ConfigError("interval_width_days must be positive")
        if self.interval_count is not None and self.interval_count < 1:
            raise ConfigError("interval_count must be at least 1")
        if not (0 < self.weight_easy <= self.weight_medium <= self.weight_hard):
            raise ConfigError("reward weights must be positive and non-decreasing easy<=medium<=hard")
        for name in ("mastery_strong", "mastery_weak", "ancestor_threshold", "insight_floor"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.top_k < 1:
            raise ConfigError("top_k must be at least 1")
        if self.permutations < 1:
            raise ConfigError("permutations must be at least 1")
        if self.backend not in ("template", "llm"):
            raise ConfigError("backend must be 'template' or 'llm'")
        return self

    def miner(self) -> MinerConfig:
        return MinerConfig(
            floor=self.insight_floor,
            permutations=self.permutations,
            seed=self.seed,
            top_k=self.top_k,
        )

    def weights(self) -> dict[str, float]:
        return {"easy": self.weight_easy, "medium": self.weight_medium, "hard": self.weight_hard}

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_FIELD_TYPES = {f.name: f.type for f in fields(EngineConfig)}


def _coerce(name: str, raw: str):
    if name in ("interval_count", "top_k", "permutations", "seed"):
        return int(raw)
    if name in (
        "interval_width_days", "weight_easy", "weight_medium", "weight_hard",
        "mastery_strong", "mastery_weak", "ancestor_threshold",
        "velocity_demotion", "insight_floor",
    ):
        return float(raw)
    return raw


def load_config(
    flags: dict | None = None,
    env: dict | None = None,
    config_file: str | Path | None = None,
) -> EngineConfig:
    """Merge the four sources; later (higher-precedence) layers win."""
    merged: dict = {}

    if config_file is not None:
        path = Path(config_file)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        for key, value in doc.items():
            if key not in _FIELD_TYPES:
                raise ConfigError(f"unknown config key: {key}")
            merged[key] = value

    env = dict(os.environ) if env is None else env
    for key in _FIELD_TYPES:
        env_key = ENV_PREFIX + key.upper()
        if env_key in env:
            try:
                merged[key] = _coerce(key, env[env_key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {env_key}: {exc}") from exc

    for key, value in (flags or {}).items():
        if value is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config flag: {key}")
        merged[key] = value

    try:
        config = EngineConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return config.validate()


def with_overrides(config: EngineConfig, **overrides) -> EngineConfig:
    return replace(config, **{k: v for k, v in overrides.items() if v is not None}).validate()
