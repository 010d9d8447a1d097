"""Planner-executor research loop, capped at ten rounds by default.

Each round the planner sees the task plus all accumulated findings and emits
either a search plan or a final answer. The executor carries out the plan
with its retrieval tools and returns findings; executor failures become
findings themselves and the loop continues.
"""

from __future__ import annotations

from dataclasses import replace

from ..engine import RunServices
from .base import (
    AgentSlot,
    InvalidParams,
    PlaygroundDefinition,
    PlaygroundResult,
    run_slot,
    single_slot,
)

DEFAULT_MAX_ROUNDS = 10


def planner_executor(
    task: str, params: dict, slots: list[AgentSlot], services: RunServices
) -> PlaygroundResult:
    planner = single_slot(slots, "planner")
    executor = single_slot(slots, "executor")
    max_rounds = params.get("max_rounds", DEFAULT_MAX_ROUNDS)
    if max_rounds < 1:
        raise InvalidParams("max_rounds must be >= 1")

    # The planner emits exactly one message per round; its spec is copied so
    # the configured slot is never mutated.
    planner_slot = AgentSlot(
        planner.slot_name, planner.role, replace(planner.spec, max_turns=1)
    )

    outcomes = {}
    findings: list[str] = []
    for round_index in range(1, max_rounds + 1):
        if services.out_of_time():
            return PlaygroundResult(
                "\n".join(findings), "partial", outcomes, rounds_used=round_index - 1
            )
        planner_task = task
        if findings:
            numbered = "\n".join(f"{i + 1}. {f}" for i, f in enumerate(findings))
            planner_task = f"{task}\n\nFindings so far:\n{numbered}"
        planner_state = run_slot(planner_slot, planner_task, services)
        outcomes[planner.slot_name] = planner_state.outcome
        if planner_state.outcome.status == "answered":
            return PlaygroundResult(
                planner_state.outcome.final_answer or "",
                "ok",
                outcomes,
                rounds_used=round_index,
            )
        if planner_state.outcome.status == "error":
            return PlaygroundResult(
                "\n".join(findings), "failed", outcomes, rounds_used=round_index
            )
        plan = planner_state.last_assistant_content

        executor_state = run_slot(executor, f"{task}\n\nSearch plan:\n{plan}", services)
        outcomes[executor.slot_name] = executor_state.outcome
        if executor_state.outcome.status == "answered":
            findings.append(executor_state.outcome.final_answer or "")
        else:
            findings.append(f"failed: {executor_state.outcome.status}")

    return PlaygroundResult(
        "\n".join(findings), "partial", outcomes, rounds_used=max_rounds
    )


DEFINITION = PlaygroundDefinition(
    name="planner_executor",
    workflow=planner_executor,
    params_schema={"max_rounds": int},
    slot_roles=("planner", "executor"),
)
