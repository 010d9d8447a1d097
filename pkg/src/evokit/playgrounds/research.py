"""Single-agent research loop: one agent, a retrieval tool pack, critique cycles.

A thin wrapper over the agent engine. Literature retrieval, reflection, and
refinement all come from the engine itself: tools fetch sources, the critique
cadence forces reflection, and the context manager sustains long horizons.
"""

from __future__ import annotations

from dataclasses import replace

from ..engine import ConfigError, RunServices
from ..prompts import RESEARCH_PROMPT
from .base import AgentSlot, PlaygroundDefinition, PlaygroundResult, single_slot, run_slot


def single_agent_research(
    task: str, params: dict, slots: list[AgentSlot], services: RunServices
) -> PlaygroundResult:
    researcher = single_slot(slots, "researcher")
    tool_pack = params.get("tool_pack")
    if not tool_pack:
        raise ConfigError("single_agent_research needs a non-empty tool_pack")

    spec = replace(
        researcher.spec,
        tool_names=tuple(tool_pack),
        system_prompt=researcher.spec.system_prompt or RESEARCH_PROMPT,
    )
    state = run_slot(AgentSlot(researcher.slot_name, researcher.role, spec), task, services)
    outcome = state.outcome
    outcomes = {researcher.slot_name: outcome}
    if outcome.status == "answered":
        return PlaygroundResult(
            outcome.final_answer or "", "ok", outcomes, rounds_used=outcome.turns
        )
    if outcome.status == "error":
        return PlaygroundResult("", "failed", outcomes, rounds_used=outcome.turns)
    return PlaygroundResult(
        state.last_assistant_content, "partial", outcomes, rounds_used=outcome.turns
    )


DEFINITION = PlaygroundDefinition(
    name="single_agent_research",
    workflow=single_agent_research,
    params_schema={"tool_pack": list},
    slot_roles=("researcher",),
)
