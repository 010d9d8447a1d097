"""Four-phase refinement pipeline: solve, critique, rewrite, select.

Solvers draft candidates in parallel. Each round, the critic reviews every
candidate and the rewriter revises it under that critique; a critic verdict
of NO ISSUES skips the rewrite for that candidate. After the last round the
selector picks exactly one candidate by number, returned verbatim.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from ..engine import RunServices
from .base import (
    AgentSlot,
    InvalidParams,
    PlaygroundDefinition,
    PlaygroundResult,
    answer_or_note,
    run_slot,
    single_slot,
    slots_by_role,
)

NO_ISSUES = "NO ISSUES"


def solve_critique_rewrite_select(
    task: str, params: dict, slots: list[AgentSlot], services: RunServices
) -> PlaygroundResult:
    solvers = slots_by_role(slots, "solver")
    critic = single_slot(slots, "critic")
    rewriter = single_slot(slots, "rewriter")
    selector = single_slot(slots, "selector")

    n_rounds = params.get("n_rounds", 1)
    n_solvers = params.get("n_solvers", len(solvers))
    if n_rounds < 1:
        raise InvalidParams("n_rounds must be >= 1")
    if n_solvers < 1 or n_solvers > len(solvers):
        raise InvalidParams(f"n_solvers must be in 1..{len(solvers)}")
    solvers = solvers[:n_solvers]

    outcomes = {}
    degraded = False
    with ThreadPoolExecutor(max_workers=len(solvers)) as pool:
        futures = [(s, pool.submit(run_slot, s, task, services)) for s in solvers]
        candidates = []
        for slot, future in futures:
            state = future.result()
            outcomes[slot.slot_name] = state.outcome
            degraded = degraded or state.outcome.status != "answered"
            candidates.append(answer_or_note(state))

    for _ in range(n_rounds):
        for index, candidate in enumerate(candidates):
            critic_task = f"{task}\n\nCandidate solution:\n{candidate}"
            critic_state = run_slot(critic, critic_task, services)
            outcomes[critic.slot_name] = critic_state.outcome
            critique = answer_or_note(critic_state)
            if critique.strip() == NO_ISSUES:
                continue
            rewrite_task = (
                f"{task}\n\nCandidate solution:\n{candidate}\n\nCritique:\n{critique}"
            )
            rewrite_state = run_slot(rewriter, rewrite_task, services)
            outcomes[rewriter.slot_name] = rewrite_state.outcome
            if rewrite_state.outcome.status == "answered":
                candidates[index] = rewrite_state.outcome.final_answer or ""
            else:
                degraded = True

    numbered = "\n".join(f"{i + 1}. {c}" for i, c in enumerate(candidates))
    select_task = (
        f"{task}\n\nPick the best candidate and answer with its number only.\n{numbered}"
    )
    select_state = run_slot(selector, select_task, services)
    outcomes[selector.slot_name] = select_state.outcome
    choice = _parse_choice(select_state.outcome.final_answer, len(candidates))
    if choice is None:
        return PlaygroundResult("", "failed", outcomes, rounds_used=n_rounds)
    status = "partial" if degraded else "ok"
    return PlaygroundResult(candidates[choice - 1], status, outcomes, rounds_used=n_rounds)


def _parse_choice(answer: str | None, count: int) -> int | None:
    """First integer in the selector's answer, if it names a candidate."""
    if answer is None:
        return None
    digits = ""
    for char in answer:
        if char.isdigit():
            digits += char
        elif digits:
            break
    if not digits:
        return None
    choice = int(digits)
    return choice if 1 <= choice <= count else None


DEFINITION = PlaygroundDefinition(
    name="solve_critique_rewrite_select",
    workflow=solve_critique_rewrite_select,
    params_schema={"n_solvers": int, "n_rounds": int},
    slot_roles=("solver", "critic", "rewriter", "selector"),
)
