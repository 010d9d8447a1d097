"""The self-evolving agent core.

Each turn renders the context under its budget, asks the model for the next
move, executes any tool calls sequentially, self-critiques on a fixed cadence,
and compresses history when the budget demands it. Termination is explicit: a
final-marker answer, the turn limit, an exhausted budget, a deadline, or a
recorded error. Every turn, tool call, observation, critique, and compression
is emitted to the trajectory recorder, so no fault ever vanishes silently.
"""

from __future__ import annotations

import random
import re
import time
from dataclasses import dataclass, field
from typing import Any, Protocol, Sequence

from .context import ContextBudget, ContextEntry, ContextManager, PinnedOverflow
from .errors import EvokitError
from .gateway import (
    ChatMessage,
    ChatResponse,
    LlmGateway,
    ProviderError,
    TokenUsage,
)
from .prompts import CRITIQUE_PROMPT, DEFAULT_FINAL_MARKER
from .skills import SkillIndex, discover, render_metadata
from .tools import Action, InvokeLimits, Observation, ToolRegistry

OUTCOME_STATUSES = ("answered", "max_turns", "budget_exhausted", "timeout", "error")


class ConfigError(EvokitError):
    pass


class SteppedAfterTermination(EvokitError):
    pass


class RecorderLike(Protocol):
    def record(
        self,
        kind: str,
        payload: dict[str, Any],
        *,
        slot: str | None = None,
        agent: str | None = None,
        turn: int | None = None,
        usage: TokenUsage | None = None,
    ) -> int: ...


@dataclass
class AgentSpec:
    """Declarative definition of one agent role."""

    name: str
    system_prompt: str
    llm_profile: str
    tool_names: tuple[str, ...] = ()
    skill_roots: tuple[str, ...] = ()
    max_turns: int = 8
    critique_every: int = 1
    budget: ContextBudget = field(default_factory=lambda: ContextBudget(max_tokens=8192))
    final_marker: str = DEFAULT_FINAL_MARKER

    def __post_init__(self) -> None:
        if self.max_turns < 1:
            raise ConfigError(f"{self.name}: max_turns must be >= 1")
        if self.critique_every < 1:
            raise ConfigError(f"{self.name}: critique_every must be >= 1")
        self.tool_names = tuple(self.tool_names)
        self.skill_roots = tuple(self.skill_roots)


@dataclass(frozen=True)
class TurnRecord:
    turn: int
    response: ChatResponse
    actions: tuple[Action, ...]
    observations: tuple[Observation, ...]
    critique: str | None = None


@dataclass(frozen=True)
class AgentOutcome:
    status: str
    final_answer: str | None
    turns: int
    usage: TokenUsage

    def __post_init__(self) -> None:
        if self.status not in OUTCOME_STATUSES:
            raise ValueError(f"unknown outcome status: {self.status!r}")
        if (self.status == "answered") != (self.final_answer is not None):
            raise ValueError("answered outcomes carry a final answer, others do not")


@dataclass
class RunServices:
    """Shared capabilities handed to every agent and playground."""

    gateway: LlmGateway
    tools: ToolRegistry
    skills: SkillIndex | None = None
    recorder: RecorderLike | None = None
    cache: Any | None = None
    deadline: float | None = None
    rng: random.Random | None = None
    limits: InvokeLimits = field(default_factory=InvokeLimits)

    def out_of_time(self) -> bool:
        return self.deadline is not None and time.monotonic() >= self.deadline


@dataclass(frozen=True)
class TerminationDecision:
    kind: str  # continue | answered | max_turns
    answer: str | None = None


def parse_final(content: str, marker: str = DEFAULT_FINAL_MARKER) -> str | None:
    """Extract the answer announced by a line starting with the marker.

    The marker must sit at the start of a line; mid-line occurrences do not
    terminate the loop. Everything after the marker (to the end of the
    content) is the answer, trimmed.
    """
    match = re.search(rf"^{re.escape(marker)}", content, re.MULTILINE)
    if match is None:
        return None
    return content[match.end() :].strip()


def check_termination(state: "AgentRun", spec: AgentSpec) -> TerminationDecision:
    answer = parse_final(state.last_assistant_content, spec.final_marker)
    if answer is not None:
        return TerminationDecision("answered", answer)
    if state.turn >= spec.max_turns:
        return TerminationDecision("max_turns")
    return TerminationDecision("continue")


class AgentRun:
    """In-progress agent state; run() is exactly iterated step()."""

    def __init__(self, spec: AgentSpec, services: RunServices, slot: str | None = None):
        self.spec = spec
        self.services = services
        self.slot = slot
        self.context = ContextManager()
        self.turn = 0
        self.records: list[TurnRecord] = []
        self.outcome: AgentOutcome | None = None
        self._usage = TokenUsage()
        self._completed_turns = 0
        self._last_content = ""

    @classmethod
    def start(
        cls,
        task: str,
        spec: AgentSpec,
        services: RunServices,
        slot: str | None = None,
        pinned_notes: Sequence[str] = (),
    ) -> "AgentRun":
        """Validate references and seed the pinned context, before any turn."""
        if not services.gateway.has_profile(spec.llm_profile):
            raise ConfigError(f"{spec.name}: unknown llm profile {spec.llm_profile!r}")
        missing = [t for t in spec.tool_names if services.tools.get(t) is None]
        if missing:
            raise ConfigError(f"{spec.name}: unknown tools {missing}")
        skills = services.skills
        if spec.skill_roots:
            try:
                skills = discover(spec.skill_roots)
            except (EvokitError, OSError) as exc:
                raise ConfigError(f"{spec.name}: cannot load skills ({exc})") from exc

        run = cls(spec, services, slot=slot)
        run.context.append(
            ContextEntry(ChatMessage("system", spec.system_prompt), kind="system", pinned=True)
        )
        metadata = render_metadata(skills) if skills else ""
        if metadata:
            run.context.append(
                ContextEntry(ChatMessage("system", metadata), kind="system", pinned=True)
            )
        for note in pinned_notes:
            run.context.append(
                ContextEntry(ChatMessage("user", note), kind="task", pinned=True)
            )
        run.context.append(ContextEntry(ChatMessage("user", task), kind="task", pinned=True))
        return run

    # -- trajectory plumbing ------------------------------------------------

    def _record(
        self,
        kind: str,
        payload: dict[str, Any],
        usage: TokenUsage | None = None,
        turn: int | None = None,
    ) -> None:
        recorder = self.services.recorder
        if recorder is not None:
            recorder.record(
                kind, payload, slot=self.slot, agent=self.spec.name, turn=turn, usage=usage
            )

    @property
    def last_assistant_content(self) -> str:
        return self._last_content

    def _finish(self, status: str, answer: str | None = None) -> AgentOutcome:
        self.outcome = AgentOutcome(status, answer, self._completed_turns, self._usage)
        return self.outcome

    def _complete(self, phase: str) -> ChatResponse | None:
        """One model call with a single retry; both failures end the run."""
        messages = self.context.render(self.spec.budget)
        descriptors = [self.services.tools.get(t) for t in sorted(self.spec.tool_names)]
        for attempt in (1, 2):
            try:
                response = self.services.gateway.complete(
                    self.spec.llm_profile, messages, [d for d in descriptors if d]
                )
                self._usage = self._usage + response.usage
                return response
            except ProviderError as exc:
                if attempt == 2:
                    self._record(
                        "error", {"error": str(exc), "phase": phase}, turn=self.turn
                    )
                    return None
        return None

    def _invoke_limits(self) -> InvokeLimits:
        base = self.services.limits
        if self.services.deadline is None:
            return base
        remaining_ms = int((self.services.deadline - time.monotonic()) * 1000)
        return InvokeLimits(
            timeout_ms=max(1, min(base.timeout_ms, remaining_ms)),
            output_cap_chars=base.output_cap_chars,
        )

    # -- the loop ------------------------------------------------------------

    def step(self) -> "AgentRun":
        """Advance exactly one turn."""
        if self.outcome is not None:
            raise SteppedAfterTermination(f"{self.spec.name}: agent already terminated")
        self.turn += 1
        if self.services.out_of_time():
            self._finish("timeout")
            return self
        try:
            self._step_body()
        except PinnedOverflow:
            self._finish("budget_exhausted")
        except EvokitError as exc:
            self._record("error", {"error": str(exc), "phase": "turn"}, turn=self.turn)
            self._finish("error")
        return self

    def _step_body(self) -> None:
        response = self._complete("turn")
        if response is None:
            self._finish("error")
            return

        self._last_content = response.content
        self.context.append(
            ContextEntry(
                ChatMessage("assistant", response.content, tool_calls=response.tool_calls)
            )
        )
        self._record(
            "turn",
            {
                "content": response.content,
                "finish": response.finish,
                "tool_calls": [
                    {"id": a.id, "tool": a.tool, "arguments": a.arguments}
                    for a in response.tool_calls
                ],
            },
            usage=response.usage,
            turn=self.turn,
        )
        self._completed_turns += 1

        observations = self._run_actions(response.tool_calls)
        decision = check_termination(self, self.spec)
        critique = None
        if decision.kind == "continue":
            if self.turn % self.spec.critique_every == 0:
                critique = self._critique()
                if critique is None and self.outcome is not None:
                    return
            self._compress()
            if self.outcome is not None:
                return

        self.records.append(
            TurnRecord(self.turn, response, response.tool_calls, observations, critique)
        )
        if decision.kind == "answered":
            self._finish("answered", decision.answer)
        elif decision.kind == "max_turns":
            self._finish("max_turns")

    def _run_actions(self, actions: tuple[Action, ...]) -> tuple[Observation, ...]:
        observations = []
        for action in actions:
            # Recorded before execution so a crash mid-tool leaves an
            # unpaired action in the trajectory instead of silence.
            self._record(
                "tool_call",
                {"id": action.id, "tool": action.tool, "arguments": action.arguments},
                turn=self.turn,
            )
            execution, observation = self.services.tools.invoke(action, self._invoke_limits())
            self._record(
                "observation",
                {
                    "action_id": action.id,
                    "status": execution.status,
                    "duration_ms": execution.duration_ms,
                    "content": observation.content,
                    "truncated": observation.truncated,
                    "is_error": observation.is_error,
                },
                turn=self.turn,
            )
            self.context.append(
                ContextEntry(
                    ChatMessage("tool", observation.content, tool_call_id=action.id)
                )
            )
            observations.append(observation)
        return tuple(observations)

    def _critique(self) -> str | None:
        """Engine-injected reflection; the reply lands as a critique entry."""
        self.context.append(ContextEntry(ChatMessage("user", CRITIQUE_PROMPT)))
        response = self._complete("critique")
        if response is None:
            self._finish("error")
            return None
        self.context.append(
            ContextEntry(ChatMessage("assistant", response.content), kind="critique")
        )
        self._record("critique", {"content": response.content}, usage=response.usage, turn=self.turn)
        return response.content

    def _compress(self) -> None:
        budget = self.spec.budget
        for attempt in (1, 2):
            try:
                event = self.context.maybe_compress(
                    budget, self.services.gateway, self.spec.llm_profile
                )
                break
            except ProviderError as exc:
                if attempt == 2:
                    self._record(
                        "error", {"error": str(exc), "phase": "compression"}, turn=self.turn
                    )
                    self._finish("error")
                    return
        if event is None:
            return
        if event.usage is not None:
            self._usage = self._usage + event.usage
        self._record(
            "compression",
            {
                "strategy": event.strategy,
                "replaced_count": event.replaced_count,
                "summary_tokens": event.summary_tokens,
                "before_tokens": event.before_tokens,
                "after_tokens": event.after_tokens,
                "profile": self.spec.llm_profile if event.strategy == "summarize" else None,
            },
            usage=event.usage,
            turn=self.turn,
        )

    def run_to_end(self) -> AgentOutcome:
        while self.outcome is None:
            self.step()
        return self.outcome


def run(
    task: str,
    spec: AgentSpec,
    services: RunServices,
    slot: str | None = None,
    pinned_notes: Sequence[str] = (),
) -> AgentOutcome:
    """Run an agent to termination. Equivalent to iterated step()."""
    return AgentRun.start(task, spec, services, slot=slot, pinned_notes=pinned_notes).run_to_end()
