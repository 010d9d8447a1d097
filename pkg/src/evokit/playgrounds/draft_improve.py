"""Draft-and-improve loop with the hierarchical cognitive cache.

Phase 1 prefetches wisdom promoted by earlier runs into the drafter's pinned
context. Phase 2 drafts solution v0. Each improvement round (twenty by
default) runs the improver branches in parallel, scores every proposal with
the evaluator's ``SCORE: <real>`` line, adopts the argmax (ties break to the
lowest slot name), and promotes the round's findings to the cache. At the end
the run's wisdom is promoted to the cross-run store for the next run to
prefetch.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

from ..engine import RunServices
from .base import (
    AgentSlot,
    InvalidParams,
    PlaygroundDefinition,
    PlaygroundResult,
    parse_score,
    run_slot,
    select_best,
    single_slot,
    slots_by_role,
)

DEFAULT_MAX_ROUNDS = 20


def draft_and_improve(
    task: str, params: dict, slots: list[AgentSlot], services: RunServices
) -> PlaygroundResult:
    drafter = single_slot(slots, "drafter")
    improvers = slots_by_role(slots, "improver")
    evaluator = single_slot(slots, "evaluator")
    max_rounds = params.get("max_rounds", DEFAULT_MAX_ROUNDS)
    branches = params.get("branches", len(improvers))
    if max_rounds < 1:
        raise InvalidParams("max_rounds must be >= 1")
    if branches < 1 or branches > len(improvers):
        raise InvalidParams(f"branches must be in 1..{len(improvers)}")
    improvers = improvers[:branches]
    evaluator_slot = AgentSlot(
        evaluator.slot_name, evaluator.role, replace(evaluator.spec, max_turns=1)
    )

    def emit(payload: dict) -> None:
        if services.recorder is not None:
            services.recorder.record("promotion", payload)

    wisdom = services.cache.prefetch(task) if services.cache else []
    emit({"tier": "prefetch", "count": len(wisdom), "items": wisdom})
    notes = ()
    if wisdom:
        notes = ("Wisdom from previous runs:\n" + "\n---\n".join(wisdom),)

    draft_state = run_slot(drafter, task, services, pinned_notes=notes)
    outcomes = {drafter.slot_name: draft_state.outcome}
    if draft_state.outcome.status == "error":
        return PlaygroundResult("", "failed", outcomes, rounds_used=0)
    solution = draft_state.outcome.final_answer or draft_state.last_assistant_content

    status = "ok"
    rounds_used = 0
    for round_index in range(1, max_rounds + 1):
        if services.out_of_time():
            status = "partial"
            break
        improve_task = f"{task}\n\nCurrent solution:\n{solution}\n\nPropose an improved version."
        with ThreadPoolExecutor(max_workers=len(improvers)) as pool:
            futures = [
                (slot, pool.submit(run_slot, slot, improve_task, services))
                for slot in improvers
            ]
            proposals = {}
            for slot, future in futures:
                state = future.result()
                outcomes[slot.slot_name] = state.outcome
                if state.outcome.status == "answered":
                    proposals[slot.slot_name] = state.outcome.final_answer or ""

        scores = {slot.slot_name: float("-inf") for slot in improvers}
        evaluator_failed = False
        for name in sorted(proposals):
            evaluate_task = (
                f"{task}\n\nCandidate solution:\n{proposals[name]}\n\n"
                "Reply with a line 'SCORE: <number>'."
            )
            eval_state = run_slot(evaluator_slot, evaluate_task, services)
            outcomes[evaluator.slot_name] = eval_state.outcome
            if eval_state.outcome.status == "error":
                evaluator_failed = True
                break
            scores[name] = parse_score(eval_state.last_assistant_content)
        if evaluator_failed:
            status = "partial"
            break

        adopted = select_best(scores)
        if adopted is not None:
            solution = proposals[adopted]
        rounds_used = round_index
        findings = (
            f"round {round_index}: adopted={adopted or 'none'} "
            f"scores={[(n, scores[n]) for n in sorted(scores)]}\n{solution}"
        )
        if services.cache:
            services.cache.promote_round(round_index, findings)
        emit({"tier": "round", "round": round_index, "findings": findings})

    if services.cache:
        services.cache.promote_run(solution)
    emit({"tier": "run", "wisdom": solution})
    if not solution:
        status = "failed"
    return PlaygroundResult(solution, status, outcomes, rounds_used=rounds_used)


DEFINITION = PlaygroundDefinition(
    name="draft_and_improve",
    workflow=draft_and_improve,
    params_schema={"max_rounds": int, "branches": int},
    slot_roles=("drafter", "improver", "evaluator"),
)
