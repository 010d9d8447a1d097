"""Single-experiment lifecycle: build services, run the playground, record everything.

Creates the run directory, snapshots the resolved config into the trajectory's
run_start event, wires the gateway/tool/skill/cache services, enforces the
wall-clock limit through a cooperative deadline checked at turn and round
boundaries, and guarantees that run_end is always written — faults become
status=error in the record, never an unrecorded abort.
"""

from __future__ import annotations

import json
import logging
import os
import random
import secrets
import time
from dataclasses import dataclass
from pathlib import Path

from ..engine import RunServices
from ..gateway import LlmGateway
from ..mcp import McpClient, McpEndpoint, register_mcp_tools
from ..playgrounds import (
    AgentSlot,
    CognitiveCache,
    PlaygroundRegistry,
    PlaygroundResult,
    run_playground,
)
from ..context import ContextBudget
from ..engine import AgentSpec
from ..skills import discover, skill_tool
from ..tools import LocalCorpusFetcher, ToolRegistry, install_builtin_tools
from .config import ExperimentConfig
from .recorder import TrajectoryRecorder

logger = logging.getLogger(__name__)

RECORD_FILENAME = "record.json"
TRAJECTORY_FILENAME = "trajectory.jsonl"


@dataclass
class ExperimentRecord:
    run_id: str
    status: str
    wall_seconds: float
    config_snapshot: dict
    trajectory_path: str
    record_path: str
    run_dir: str
    result: PlaygroundResult | None = None


def _new_run_id(name: str) -> str:
    stamp = time.strftime("%Y%m%d-%H%M%S")
    return f"{name}-{stamp}-{secrets.token_hex(3)}"


def build_slots(config: ExperimentConfig) -> list[AgentSlot]:
    """Fresh AgentSpec per slot: nothing mutable is shared between slots."""
    slots = []
    for sc in config.playground.slots:
        spec = AgentSpec(
            name=sc.slot_name,
            system_prompt=sc.system_prompt,
            llm_profile=sc.llm_profile,
            tool_names=tuple(sc.tools),
            max_turns=sc.max_turns,
            critique_every=sc.critique_every,
            budget=ContextBudget(
                max_tokens=sc.budget.max_tokens,
                compress_at=sc.budget.compress_at,
                strategy=sc.budget.strategy,
            ),
            final_marker=sc.final_marker,
        )
        slots.append(AgentSlot(slot_name=sc.slot_name, role=sc.role, spec=spec))
    return slots


def cache_root_for(config: ExperimentConfig) -> Path:
    """EVO_HOME wins; otherwise the cache sits beside the runs it feeds."""
    env = os.environ.get("EVO_HOME")
    if env:
        return Path(env)
    return Path(config.experiment.output_dir) / "cache"


def run_experiment(
    config: ExperimentConfig,
    registry: PlaygroundRegistry | None = None,
) -> ExperimentRecord:
    run_id = _new_run_id(config.experiment.name)
    run_dir = Path(config.experiment.output_dir) / run_id
    workspace = run_dir / "workspace"
    workspace.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()

    recorder = TrajectoryRecorder(run_dir / TRAJECTORY_FILENAME, run_id)
    snapshot = config.to_dict()
    recorder.record("run_start", {"config_snapshot": snapshot})

    result: PlaygroundResult | None = None
    deadline = started + config.experiment.max_wall_seconds
    try:
        services = _build_services(config, recorder, workspace, run_id, deadline)
        slots = build_slots(config)
        result = run_playground(
            config.playground.name,
            config.experiment.task,
            config.playground.params,
            slots,
            services,
            registry=registry,
        )
        status = "timeout" if time.monotonic() >= deadline else result.status
    except Exception as exc:  # noqa: BLE001 — faults must land in the trajectory
        logger.exception("experiment %s failed", run_id)
        recorder.record("error", {"error": str(exc), "phase": "experiment"})
        status = "error"

    wall_seconds = time.monotonic() - started
    recorder.record(
        "run_end",
        {
            "status": status,
            "usage_totals": recorder.usage_totals().as_dict(),
            "final_answer": result.final_answer if result else None,
            "rounds_used": result.rounds_used if result else 0,
        },
    )
    recorder.close()

    record = ExperimentRecord(
        run_id=run_id,
        status=status,
        wall_seconds=wall_seconds,
        config_snapshot=snapshot,
        trajectory_path=str(run_dir / TRAJECTORY_FILENAME),
        record_path=str(run_dir / RECORD_FILENAME),
        run_dir=str(run_dir),
        result=result,
    )
    _write_record(record)
    return record


def _build_services(
    config: ExperimentConfig,
    recorder: TrajectoryRecorder,
    workspace: Path,
    run_id: str,
    deadline: float,
) -> RunServices:
    gateway = LlmGateway()
    for profile in config.profiles:
        gateway.register_profile(profile)

    fetcher = LocalCorpusFetcher(config.tools.corpus) if config.tools.corpus else None
    tools = ToolRegistry()
    install_builtin_tools(tools, workspace, names=config.tools.builtin, fetcher=fetcher)

    skills = None
    if config.skills.paths:
        skills = discover(config.skills.paths)
        tools.register_tool(*skill_tool(skills))

    for server in config.tools.mcp:
        client = McpClient(
            McpEndpoint(alias=server.alias, endpoint=server.endpoint, transport=server.transport)
        )
        registered = register_mcp_tools(tools, client)
        logger.info("mcp %s: registered %s", server.alias, registered)

    cache = CognitiveCache(cache_root_for(config), run_id)
    return RunServices(
        gateway=gateway,
        tools=tools,
        skills=skills,
        recorder=recorder,
        cache=cache,
        deadline=deadline,
        rng=random.Random(config.experiment.seed),
    )


def _write_record(record: ExperimentRecord) -> None:
    result = record.result
    payload = {
        "run_id": record.run_id,
        "status": record.status,
        "wall_seconds": record.wall_seconds,
        "trajectory_path": record.trajectory_path,
        "config_snapshot": record.config_snapshot,
        "result": None,
    }
    if result is not None:
        payload["result"] = {
            "final_answer": result.final_answer,
            "status": result.status,
            "rounds_used": result.rounds_used,
            "per_slot_outcomes": {
                name: {
                    "status": outcome.status,
                    "final_answer": outcome.final_answer,
                    "turns": outcome.turns,
                    "usage": outcome.usage.as_dict(),
                }
                for name, outcome in sorted(result.per_slot_outcomes.items())
            },
        }
    Path(record.record_path).write_text(
        json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
