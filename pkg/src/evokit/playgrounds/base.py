"""Shared vocabulary for multi-agent playgrounds.

A playground is a named workflow over agent slots. Slots are declarative:
each binds a role to its own AgentSpec (model profile, tools, prompt, loop
limits), and nothing mutable is shared between them. Workflow functions
receive the task, validated params, the configured slots, and the run
services, and return a PlaygroundResult.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from typing import Callable, Mapping

from ..engine import AgentOutcome, AgentRun, AgentSpec, RunServices
from ..errors import EvokitError

RESULT_STATUSES = ("ok", "partial", "failed")


class DuplicatePlayground(EvokitError):
    pass


class PlaygroundNotFound(EvokitError):
    pass


class SlotConfigError(EvokitError):
    pass


class InvalidParams(EvokitError):
    pass


@dataclass
class AgentSlot:
    slot_name: str
    role: str
    spec: AgentSpec


@dataclass(frozen=True)
class PlaygroundResult:
    final_answer: str
    status: str
    per_slot_outcomes: dict[str, AgentOutcome] = field(default_factory=dict)
    rounds_used: int = 0

    def __post_init__(self) -> None:
        if self.status not in RESULT_STATUSES:
            raise ValueError(f"unknown result status: {self.status!r}")
        if self.status == "ok" and not self.final_answer:
            raise ValueError("ok results must carry a non-empty final answer")


WorkflowFn = Callable[[str, dict, list[AgentSlot], RunServices], PlaygroundResult]


@dataclass(frozen=True)
class PlaygroundDefinition:
    name: str
    workflow: WorkflowFn
    params_schema: dict[str, type] = field(default_factory=dict)
    slot_roles: tuple[str, ...] = ()


class PlaygroundRegistry:
    """Name-keyed workflow registry populated by the startup hook."""

    def __init__(self) -> None:
        self._definitions: dict[str, PlaygroundDefinition] = {}
        self._lock = threading.Lock()

    def register(self, definition: PlaygroundDefinition) -> None:
        with self._lock:
            if definition.name in self._definitions:
                raise DuplicatePlayground(f"playground already registered: {definition.name}")
            self._definitions[definition.name] = definition

    def get(self, name: str) -> PlaygroundDefinition:
        definition = self._definitions.get(name)
        if definition is None:
            raise PlaygroundNotFound(f"no such playground: {name}")
        return definition

    def names(self) -> list[str]:
        return sorted(self._definitions)


def validate_params(definition: PlaygroundDefinition, params: Mapping) -> dict:
    """Reject unknown or mis-typed params; missing ones fall to workflow defaults."""
    unknown = set(params) - set(definition.params_schema)
    if unknown:
        raise InvalidParams(f"{definition.name}: unknown params {sorted(unknown)}")
    for key, expected in definition.params_schema.items():
        if key not in params:
            continue
        value = params[key]
        ok = isinstance(value, expected) and not (
            expected in (int, float) and isinstance(value, bool)
        )
        if expected is float and isinstance(value, int) and not isinstance(value, bool):
            ok = True
        if not ok:
            raise InvalidParams(
                f"{definition.name}: param {key!r} must be {expected.__name__}"
            )
    return dict(params)


# -- helpers used by the built-in workflows -----------------------------------


def run_slot(
    slot: AgentSlot,
    task: str,
    services: RunServices,
    pinned_notes: tuple[str, ...] = (),
) -> AgentRun:
    """Run one slot's agent to termination, tagging its trajectory events."""
    state = AgentRun.start(
        task, slot.spec, services, slot=slot.slot_name, pinned_notes=pinned_notes
    )
    state.run_to_end()
    return state


def slots_by_role(slots: list[AgentSlot], role: str) -> list[AgentSlot]:
    return sorted((s for s in slots if s.role == role), key=lambda s: s.slot_name)


def single_slot(slots: list[AgentSlot], role: str) -> AgentSlot:
    found = slots_by_role(slots, role)
    if len(found) != 1:
        raise SlotConfigError(f"expected exactly one {role!r} slot, found {len(found)}")
    return found[0]


def answer_or_note(state: AgentRun) -> str:
    outcome = state.outcome
    assert outcome is not None
    if outcome.status == "answered":
        return outcome.final_answer or ""
    return f"failed: {outcome.status}"


def parse_score(content: str) -> float:
    """Parse the first line-start ``SCORE: <real>``; anything else is -inf."""
    match = re.search(r"^SCORE:(.*)$", content, re.MULTILINE)
    if match is None:
        return float("-inf")
    try:
        value = float(match.group(1).strip())
    except ValueError:
        return float("-inf")
    if value != value or value in (float("inf"), float("-inf")):
        return float("-inf")
    return value


def select_best(scores: Mapping[str, float]) -> str | None:
    """Argmax over slot scores; ties break to the lowest slot name.

    Returns None when the map is empty or every candidate scored -inf, in
    which case the caller keeps its current solution.
    """
    if not scores:
        return None
    best = max(scores.values())
    if best == float("-inf"):
        return None
    return min(name for name, score in scores.items() if score == best)
