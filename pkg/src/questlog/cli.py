"""Command-line entry point.

Subcommands: synth, ingest, aggregate, mine, diagnose, report, serve.
Configuration precedence: flags > QUESTLOG_* environment > --config file >
defaults. Exit codes: 0 ok, 2 config error, 3 data error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
from pathlib import Path

from . import __version__
from .cache import inputs_fingerprint, load_entry, bundle_from_entry, refresh_cache
from .config import EngineConfig, load_config
from .errors import CacheMissError, ConfigError, DataError, QuestlogError
from .formative import diagnose
from .insights import mine_top_k
from .io import (
    FileRecordStore,
    load_catalog,
    load_graph,
    load_records,
    save_records,
)
from .model import QuestionCatalog, validate_graph
from .report import generate_report
from .story import RemoteLlmBackend, structure_check
from .synth import write_dataset


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--data-dir", dest="data_dir")
    parser.add_argument("--cache-dir", dest="cache_dir")
    parser.add_argument("--interval-width-days", dest="interval_width_days", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--k", dest="top_k", type=int)
    parser.add_argument("--floor", dest="insight_floor", type=float)
    parser.add_argument("--permutations", type=int)
    parser.add_argument("--backend", choices=["template", "llm"])
    parser.add_argument("--llm-endpoint", dest="llm_endpoint")


def _config_from(args: argparse.Namespace) -> EngineConfig:
    flag_keys = (
        "data_dir",
        "cache_dir",
        "interval_width_days",
        "seed",
        "top_k",
        "insight_floor",
        "permutations",
        "backend",
        "llm_endpoint",
    )
    flags = {k: getattr(args, k, None) for k in flag_keys}
    return load_config(flags=flags, config_file=getattr(args, "config", None))


def _data_paths(args: argparse.Namespace, config: EngineConfig) -> dict[str, Path]:
    base = Path(config.data_dir)
    return {
        "graph": Path(args.graph) if getattr(args, "graph", None) else base / "graph.json",
        "records": Path(args.records) if getattr(args, "records", None) else base / "records.ndjson",
        "catalog": Path(args.catalog) if getattr(args, "catalog", None) else base / "catalog.ndjson",
    }


def _load_inputs(paths: dict[str, Path]):
    graph = load_graph(paths["graph"])
    records = load_records(paths["records"])
    if paths["catalog"].exists():
        catalog = load_catalog(paths["catalog"])
    else:
        catalog = QuestionCatalog.from_records(records)
    return graph, records, catalog


def cmd_synth(args: argparse.Namespace) -> int:
    config = _config_from(args)
    out_dir = args.out or config.data_dir
    paths = write_dataset(
        out_dir,
        seed=args.seed if args.seed is not None else config.seed,
        cohort=args.cohort,
        scenario=args.scenario,
        n_objectives=args.objectives,
    )
    print(json.dumps({name: str(p) for name, p in paths.items()}, indent=2))
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    config = _config_from(args)
    paths = _data_paths(args, config)
    graph = load_graph(paths["graph"])
    graph_doc = json.loads(paths["graph"].read_text(encoding="utf-8"))
    from .model import LearningObjective, Unit

    objectives = [LearningObjective(o["id"], o.get("label", o["id"]), o["unit_id"]) for o in graph_doc["objectives"]]
    units = [Unit(u["id"], u.get("title", u["id"]), tuple(u["objectives"])) for u in graph_doc["units"]]
    edges = [(e[0], e[1]) for e in graph_doc.get("edges", [])]
    violations = validate_graph(objectives, units, edges)
    if violations:
        for v in violations:
            print(f"graph violation [{v.kind}]: {v.detail}", file=sys.stderr)
        raise DataError(f"graph failed validation with {len(violations)} violation(s)")

    records = load_records(paths["records"])
    unknown = sorted({o for r in records for o in r.objectives if not graph.has_objective(o)})
    if unknown:
        raise DataError(f"records reference objectives missing from the graph: {', '.join(unknown)}")
    if paths["catalog"].exists():
        catalog = load_catalog(paths["catalog"])
        problems = catalog.check_consistency(records)
        if problems:
            for p in problems[:20]:
                print(f"catalog inconsistency: {p}", file=sys.stderr)
            raise DataError(f"{len(problems)} record/catalog inconsistencies")
    if args.out:
        save_records(sorted(records, key=lambda r: (r.timestamp.isoformat(), r.student_id, r.question_id)), args.out)
    students = {r.student_id for r in records}
    print(json.dumps({"records": len(records), "students": len(students), "graph_ok": True}))
    return 0


def cmd_aggregate(args: argparse.Namespace) -> int:
    config = _config_from(args)
    paths = _data_paths(args, config)
    graph, records, catalog = _load_inputs(paths)
    fingerprint = inputs_fingerprint(records, graph, catalog, config)
    units = [args.unit] if args.unit else [u.id for u in graph.units]
    students = [args.student] if args.student else sorted({r.student_id for r in records})
    written = []
    for student in students:
        for unit in units:
            _entry, path = refresh_cache(
                student, unit, records, graph, catalog, config, fingerprint=fingerprint
            )
            written.append(str(path))
    print(json.dumps({"entries": len(written), "cache_dir": config.cache_dir}))
    return 0


def _require_entry(config: EngineConfig, student: str, unit: str) -> dict:
    entry = load_entry(config.cache_dir, student, unit)
    if entry is None:
        raise CacheMissError(
            f"no cache entry for student={student} unit={unit}; run `questlog aggregate` first"
        )
    return entry


def cmd_mine(args: argparse.Namespace) -> int:
    config = _config_from(args)
    entry = _require_entry(config, args.student, args.unit)
    insights = mine_top_k(bundle_from_entry(entry), config.miner(), k=args.top_k or config.top_k)
    print(json.dumps([i.to_dict() for i in insights], indent=2, sort_keys=True))
    return 0


def cmd_diagnose(args: argparse.Namespace) -> int:
    config = _config_from(args)
    paths = _data_paths(args, config)
    graph = load_graph(paths["graph"])
    entry = _require_entry(config, args.student, args.unit)
    result = diagnose(entry, graph, config)
    print(json.dumps([d.to_dict() for d in result], indent=2, sort_keys=True))
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    config = _config_from(args)
    paths = _data_paths(args, config)
    graph = load_graph(paths["graph"])
    entry = _require_entry(config, args.student, args.unit)
    backend = None
    backend_name = args.backend or config.backend
    if backend_name == "llm":
        endpoint = config.llm_endpoint
        if not endpoint:
            raise ConfigError("backend 'llm' requires --llm-endpoint or QUESTLOG_LLM_ENDPOINT")
        backend = RemoteLlmBackend(endpoint=endpoint)
    doc = generate_report(entry, graph, config, backend=backend)
    problems = structure_check(doc)
    if problems:
        raise QuestlogError(f"generated document failed structure checks: {problems}")
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(json.dumps({"report": args.out, "stages": len(doc["stages"])}))
    else:
        print(text)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    config = _config_from(args)
    paths = _data_paths(args, config)
    graph = load_graph(paths["graph"])

    cache_dir = Path(config.cache_dir)
    if not cache_dir.exists():
        raise DataError(f"cache directory not found: {cache_dir}; run `questlog aggregate` first")
    index = cache_dir / "index.json"
    if not index.exists():
        raise DataError(f"cache index not found in {cache_dir}; run `questlog aggregate` first")

    # claim the port up front so a conflict is a clean runtime error (exit 4)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind((args.host, args.port))
    except OSError as exc:
        raise QuestlogError(f"cannot bind {args.host}:{args.port}: {exc}") from exc
    finally:
        probe.close()

    from .service import create_app

    store = FileRecordStore(paths["records"]) if paths["records"].exists() else None
    frontend = Path(args.frontend) if args.frontend else Path("frontend/dist")
    app = create_app(graph, config, record_store=store, frontend_dir=frontend if frontend.exists() else None)

    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="questlog", description=__doc__)
    parser.add_argument("--version", action="version", version=f"questlog {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    _add_config_flags(p)
    p.add_argument("--out", help="output directory (default: data dir)")
    p.add_argument("--cohort", type=int, default=200)
    p.add_argument("--scenario", choices=["steven", "baseline"], default="steven")
    p.add_argument("--objectives", type=int, default=10, help="objective count (baseline scenario)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="validate and normalize input files")
    _add_config_flags(p)
    p.add_argument("--graph")
    p.add_argument("--records")
    p.add_argument("--catalog")
    p.add_argument("--out", help="write normalized records here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("aggregate", help="build the metrics cache")
    _add_config_flags(p)
    p.add_argument("--graph")
    p.add_argument("--records")
    p.add_argument("--catalog")
    p.add_argument("--student", help="one student (default: every student)")
    p.add_argument("--unit", help="one unit (default: every unit)")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("mine", help="print the top-k insights for (student, unit)")
    _add_config_flags(p)
    p.add_argument("--student", required=True)
    p.add_argument("--unit", required=True)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("diagnose", help="print the tri-level diagnosis for (student, unit)")
    _add_config_flags(p)
    p.add_argument("--graph")
    p.add_argument("--records")
    p.add_argument("--catalog")
    p.add_argument("--student", required=True)
    p.add_argument("--unit", required=True)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("report", help="generate a report document")
    _add_config_flags(p)
    p.add_argument("--graph")
    p.add_argument("--records")
    p.add_argument("--catalog")
    p.add_argument("--student", required=True)
    p.add_argument("--unit", required=True)
    p.add_argument("--out", help="write the document here instead of stdout")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="serve the HTTP API (and the UI if built)")
    _add_config_flags(p)
    p.add_argument("--graph")
    p.add_argument("--records")
    p.add_argument("--catalog")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8400)
    p.add_argument("--frontend", help="static UI directory (default: frontend/dist)")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except QuestlogError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
