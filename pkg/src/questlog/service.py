"""HTTP API over the cache: report generation, retrieval, and Q&A.

Request-time endpoints read the metrics cache and stored documents only;
the attached record store exists solely so tests can assert that its read
counter stays at zero while requests are served.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .cache import load_entry
from .config import EngineConfig
from .errors import CacheMissError, QuestlogError, SelectionError
from .io import FileRecordStore
from .model import ObjectiveGraph
from .qa import QARequest, answer
from .report import generate_report
from .story import RemoteLlmBackend, document_json


class ReportRequest(BaseModel):
    student: str = Field(min_length=1)
    unit: str = Field(min_length=1)
    backend: str = "template"


class QaBody(BaseModel):
    selection: list[str] = Field(min_length=1)
    question: str = Field(min_length=1)


def _report_id(doc: dict) -> str:
    digest = hashlib.sha256(document_json(doc, exclude_timestamp=True).encode()).hexdigest()
    return f"r-{digest[:12]}"


def create_app(
    graph: ObjectiveGraph,
    config: EngineConfig,
    record_store: FileRecordStore | None = None,
    frontend_dir: str | Path | None = None,
    llm_transport=None,
) -> FastAPI:
    app = FastAPI(title="questlog", version="0.1.0")
    app.state.graph = graph
    app.state.config = config
    app.state.record_store = record_store
    app.state.reports = {}  # report_id -> (doc, entry)

    reports_dir = Path(config.cache_dir) / "reports"

    def _backend(name: str) -> RemoteLlmBackend | None:
        if name != "llm":
            return None
        if llm_transport is not None:
            return RemoteLlmBackend(transport=llm_transport)
        if config.llm_endpoint:
            return RemoteLlmBackend(endpoint=config.llm_endpoint)
        return None  # no endpoint configured: stay on the template path

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/reports")
    def create_report(body: ReportRequest):
        entry = load_entry(config.cache_dir, body.student, body.unit)
        if entry is None:
            raise HTTPException(
                status_code=404,
                detail=f"no cache entry for student={body.student} unit={body.unit}; run `questlog aggregate` first",
            )
        try:
            doc = generate_report(entry, graph, config, backend=_backend(body.backend))
        except CacheMissError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except QuestlogError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        report_id = _report_id(doc)
        app.state.reports[report_id] = (doc, entry)
        reports_dir.mkdir(parents=True, exist_ok=True)
        wrapper = {"doc": doc, "student_id": body.student, "unit_id": body.unit}
        (reports_dir / f"{report_id}.json").write_text(json.dumps(wrapper, sort_keys=True), encoding="utf-8")
        return {"report_id": report_id}

    def _get_report(report_id: str) -> tuple[dict, dict]:
        hit = app.state.reports.get(report_id)
        if hit is not None:
            return hit
        # survive a restart: stored documents re-pair with their cache entry
        path = reports_dir / f"{report_id}.json"
        if path.exists():
            wrapper = json.loads(path.read_text(encoding="utf-8"))
            entry = load_entry(config.cache_dir, wrapper["student_id"], wrapper["unit_id"])
            if entry is not None:
                pair = (wrapper["doc"], entry)
                app.state.reports[report_id] = pair
                return pair
        raise HTTPException(status_code=404, detail=f"unknown report id: {report_id}")

    @app.get("/reports/{report_id}")
    def get_report(report_id: str):
        doc, _entry = _get_report(report_id)
        return doc

    @app.post("/reports/{report_id}/qa")
    def post_qa(report_id: str, body: QaBody):
        doc, entry = _get_report(report_id)
        request = QARequest(report_id=report_id, selection=tuple(body.selection), question=body.question)
        try:
            response = answer(doc, request, entry, graph, config, backend=_backend(config.backend))
        except SelectionError as exc:
            raise HTTPException(status_code=422, detail={"message": str(exc), "bad_ids": exc.bad_ids}) from exc
        except QuestlogError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return response.to_dict()

    if frontend_dir is not None and Path(frontend_dir).exists():
        static_dir = Path(frontend_dir)

        @app.get("/")
        def index():
            return FileResponse(static_dir / "index.html")

        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
