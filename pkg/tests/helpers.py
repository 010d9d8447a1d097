"""Shared test utilities: script writing and service assembly."""

from __future__ import annotations

import json
from pathlib import Path

from evokit.engine import RunServices
from evokit.gateway import LlmGateway, ModelProfile
from evokit.tools import ToolRegistry, install_builtin_tools

FIXTURES = Path(__file__).parent / "fixtures"


def write_script(directory: Path, name: str, entries: list[dict]) -> Path:
    path = directory / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(entries), encoding="utf-8")
    return path


def scripted_gateway(tmp_path: Path, **scripts: list[dict]) -> LlmGateway:
    """A gateway with one scripted profile per keyword argument."""
    gateway = LlmGateway()
    for name, entries in scripts.items():
        path = write_script(tmp_path / "scripts", f"{name}.script", entries)
        gateway.register_profile(
            ModelProfile(
                name=name, provider="scripted", model="scripted-v1", script_path=str(path)
            )
        )
    return gateway


def make_services(
    tmp_path: Path,
    gateway: LlmGateway,
    recorder=None,
    builtin=("exec", "file_read", "file_write"),
    fetcher=None,
    skills=None,
    cache=None,
    deadline=None,
) -> RunServices:
    registry = ToolRegistry()
    workspace = tmp_path / "workspace"
    workspace.mkdir(exist_ok=True)
    install_builtin_tools(registry, workspace, names=list(builtin), fetcher=fetcher)
    return RunServices(
        gateway=gateway,
        tools=registry,
        skills=skills,
        recorder=recorder,
        cache=cache,
        deadline=deadline,
    )
