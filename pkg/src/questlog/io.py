"""File formats and loading.

Graph file: one UTF-8 JSON document {units, objectives, edges}.
Records file: newline-delimited JSON, one attempt per line, ISO-8601 timestamps.
Catalog file: newline-delimited JSON, one question per line.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .errors import DataError
from .model import (
    AttemptRecord,
    CatalogEntry,
    Difficulty,
    ObjectiveGraph,
    QuestionCatalog,
)


def load_graph(path: str | Path) -> ObjectiveGraph:
    path = Path(path)
    if not path.exists():
        raise DataError(f"graph file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"graph file is not valid JSON: {exc}") from exc
    return ObjectiveGraph.from_dict(doc)


def save_graph(graph: ObjectiveGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(graph.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_records(path: str | Path) -> list[AttemptRecord]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"records file not found: {path}")
    records = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            records.append(AttemptRecord.from_dict(doc))
    return records


def save_records(records: list[AttemptRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")


def load_catalog(path: str | Path) -> QuestionCatalog:
    path = Path(path)
    if not path.exists():
        raise DataError(f"catalog file not found: {path}")
    entries = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                entries.append(
                    CatalogEntry(
                        question_id=str(doc["question_id"]),
                        objectives=frozenset(str(o) for o in doc["objectives"]),
                        difficulty=Difficulty(doc["difficulty"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: invalid catalog entry: {exc}") from exc
    return QuestionCatalog.from_entries(entries)


def save_catalog(catalog: QuestionCatalog, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for qid in sorted(catalog.entries):
            e = catalog.entries[qid]
            fh.write(
                json.dumps(
                    {
                        "question_id": e.question_id,
                        "objectives": sorted(e.objectives),
                        "difficulty": e.difficulty.value,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


class FileRecordStore:
    """Raw-record access with an instrumented read counter.

    Request-time paths (report rendering, Q&A) must never touch raw records;
    tests assert `read_count` stays at zero across those calls.
    """

    def __init__(self, records_path: str | Path):
        self.records_path = Path(records_path)
        self.read_count = 0

    def load(self) -> list[AttemptRecord]:
        self.read_count += 1
        return load_records(self.records_path)

    def fingerprint(self) -> str:
        # hashing is not a "read" in the raw-scan sense; it never parses records
        return file_sha256(self.records_path)
