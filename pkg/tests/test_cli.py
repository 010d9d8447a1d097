from __future__ import annotations

import json
from pathlib import Path

from evokit.cli import main
from evokit.mcp_stub import StubMcpServer
from helpers import FIXTURES

MIN = str(FIXTURES / "configs/min.yaml")


def test_validate_ok(capsys) -> None:
    assert main(["validate", "--config", MIN]) == 0
    assert "ok: min" in capsys.readouterr().out


def test_validate_bad_ref_names_ghost(capsys) -> None:
    assert main(["validate", "--config", str(FIXTURES / "configs/bad-ref.yaml")]) == 2
    assert "ghost" in capsys.readouterr().err


def test_list_playgrounds(capsys) -> None:
    assert main(["list", "playgrounds"]) == 0
    names = capsys.readouterr().out.splitlines()
    for expected in (
        "sequential_handoff",
        "parallel_explore",
        "solve_critique_rewrite_select",
        "planner_executor",
        "draft_and_improve",
        "single_agent_research",
    ):
        assert expected in names


def test_list_tools(capsys) -> None:
    assert main(["list", "tools"]) == 0
    names = capsys.readouterr().out.splitlines()
    assert "exec" in names
    assert "load_skill" in names


def test_list_skills_requires_config(capsys) -> None:
    assert main(["list", "skills"]) == 1


def test_usage_errors(capsys) -> None:
    assert main([]) == 1
    assert main(["run"]) == 1  # missing --config
    assert main(["mystery"]) == 1


def test_run_then_replay_roundtrip(tmp_path, capsys, monkeypatch) -> None:
    monkeypatch.delenv("EVO_HOME", raising=False)
    assert main(["run", "--config", MIN, "--out", str(tmp_path), "--seed", "42"]) == 0
    record_path = capsys.readouterr().out.strip()
    record = json.loads(Path(record_path).read_text())
    assert record["status"] == "ok"
    assert record["config_snapshot"]["experiment"]["seed"] == 42

    trajectory = record["trajectory_path"]
    assert main(["replay", "--trajectory", trajectory]) == 0
    out = capsys.readouterr().out
    assert "complete: true" in out

    lines = Path(trajectory).read_text().splitlines()
    Path(trajectory).write_text("\n".join(lines[:2]) + "\n", encoding="utf-8")
    assert main(["replay", "--trajectory", trajectory]) == 3


def test_replay_missing_file() -> None:
    assert main(["replay", "--trajectory", "/nonexistent/t.jsonl"]) == 3


def test_run_error_status_exits_3(tmp_path, capsys, monkeypatch) -> None:
    monkeypatch.delenv("EVO_HOME", raising=False)
    text = (FIXTURES / "configs/min.yaml").read_text(encoding="utf-8")
    text = text.replace("name: sequential_handoff", "name: not_a_playground")
    text = text.replace("../scripts", str(FIXTURES / "scripts"))
    bad = tmp_path / "bad.yaml"
    bad.write_text(text, encoding="utf-8")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 3


def test_mcp_probe_lists_stub_tools(capsys) -> None:
    with StubMcpServer() as server:
        assert main(["mcp-probe", "--endpoint", server.url]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("add\t")
    assert "lookup" in out


def test_mcp_probe_unreachable() -> None:
    assert main(["mcp-probe", "--endpoint", "http://127.0.0.1:9/"]) == 3
