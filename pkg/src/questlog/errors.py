"""Shared exception types, grouped by the exit code they map to in the CLI."""


class QuestlogError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 4


class ConfigError(QuestlogError):
    """Bad configuration: unknown keys, out-of-range thresholds, missing files."""

    exit_code = 2


class DataError(QuestlogError):
    """Malformed or inconsistent input data (graph, records, catalog)."""

    exit_code = 3


class UnknownObjectiveError(DataError):
    """An objective id was referenced that is not declared in the graph."""


class UnknownUnitError(DataError):
    """A unit id was referenced that is not declared in the graph."""


class CacheMissError(QuestlogError):
    """A cache entry was required but not found; run `aggregate` first."""

    exit_code = 3


class StorageError(QuestlogError):
    """Cache or report storage failed (I/O, permissions, partial write)."""

    exit_code = 4


class SelectionError(QuestlogError):
    """A QA selection referenced element ids missing from the report registry."""

    def __init__(self, bad_ids: list[str]):
        self.bad_ids = sorted(bad_ids)
        super().__init__(f"unknown chart element ids: {', '.join(self.bad_ids)}")
