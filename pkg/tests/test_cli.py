from __future__ import annotations

import json
import os
from pathlib import Path

import pytest

from questlog.cli import main
from questlog.config import EngineConfig, load_config
from questlog.errors import ConfigError


@pytest.fixture()
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run(args) -> int:
    return main(args)


def test_synth_is_deterministic_per_seed(workdir):
    assert run(["synth", "--out", "a", "--cohort", "10", "--seed", "42"]) == 0
    assert run(["synth", "--out", "b", "--cohort", "10", "--seed", "42"]) == 0
    assert run(["synth", "--out", "c", "--cohort", "10", "--seed", "43"]) == 0
    for name in ("graph.json", "records.ndjson", "catalog.ndjson"):
        assert (workdir / "a" / name).read_bytes() == (workdir / "b" / name).read_bytes()
    assert (workdir / "a" / "records.ndjson").read_bytes() != (workdir / "c" / "records.ndjson").read_bytes()


def test_full_pipeline_exit_codes(workdir, capsys):
    assert run(["synth", "--out", "data", "--cohort", "8", "--seed", "5"]) == 0
    assert run(["ingest"]) == 0
    assert run(["aggregate", "--student", "steven", "--unit", "U7"]) == 0
    capsys.readouterr()  # drop earlier command output
    assert run(["mine", "--student", "steven", "--unit", "U7"]) == 0
    insights = json.loads(capsys.readouterr().out)
    assert isinstance(insights, list)
    assert 0 < len(insights) <= 3
    assert run(["diagnose", "--student", "steven", "--unit", "U7"]) == 0
    assert run(["report", "--student", "steven", "--unit", "U7", "--out", "report.json"]) == 0
    doc = json.loads((workdir / "report.json").read_text())
    assert len(doc["stages"]) == 12


def test_missing_graph_is_data_error_exit_3(workdir):
    assert run(["ingest"]) == 3


def test_missing_cache_is_exit_3(workdir):
    assert run(["synth", "--out", "data", "--cohort", "6", "--seed", "5"]) == 0
    assert run(["mine", "--student", "steven", "--unit", "U7"]) == 3


def test_bad_config_file_is_exit_2(workdir):
    (workdir / "bad.json").write_text('{"unknown_key": 1}')
    assert run(["synth", "--config", "bad.json", "--out", "x"]) == 2


def test_serve_without_cache_is_exit_3(workdir):
    assert run(["synth", "--out", "data", "--cohort", "6", "--seed", "5"]) == 0
    assert run(["serve", "--port", "8499"]) == 3


def test_serve_port_in_use_is_exit_4(workdir):
    import socket

    assert run(["synth", "--out", "data", "--cohort", "6", "--seed", "5"]) == 0
    assert run(["aggregate", "--student", "steven", "--unit", "U7"]) == 0
    blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    blocker.bind(("127.0.0.1", 0))
    blocker.listen(1)
    port = blocker.getsockname()[1]
    try:
        assert run(["serve", "--port", str(port)]) == 4
    finally:
        blocker.close()


def test_llm_backend_without_endpoint_is_exit_2(workdir):
    assert run(["synth", "--out", "data", "--cohort", "6", "--seed", "5"]) == 0
    assert run(["aggregate", "--student", "steven", "--unit", "U7"]) == 0
    assert run(["report", "--student", "steven", "--unit", "U7", "--backend", "llm"]) == 2


# ---------------------------------------------------------------------------
# Config precedence
# ---------------------------------------------------------------------------


def test_defaults_hold_without_sources():
    config = load_config(flags={}, env={})
    assert config == EngineConfig()


def test_file_overrides_defaults(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"top_k": 5, "interval_width_days": 3.5}))
    config = load_config(flags={}, env={}, config_file=path)
    assert config.top_k == 5
    assert config.interval_width_days == 3.5


def test_env_overrides_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"top_k": 5}))
    config = load_config(flags={}, env={"QUESTLOG_TOP_K": "7"}, config_file=path)
    assert config.top_k == 7


def test_flags_override_env_and_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"top_k": 5}))
    config = load_config(flags={"top_k": 9}, env={"QUESTLOG_TOP_K": "7"}, config_file=path)
    assert config.top_k == 9


def test_unknown_config_key_rejected(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"nope": 1}))
    with pytest.raises(ConfigError):
        load_config(flags={}, env={}, config_file=path)


def test_out_of_range_threshold_rejected():
    with pytest.raises(ConfigError):
        load_config(flags={"insight_floor": 1.5}, env={})
    with pytest.raises(ConfigError):
        load_config(flags={"top_k": 0}, env={})
