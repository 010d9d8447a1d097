from __future__ import annotations

import pytest

from evokit.context import (
    CompressionEvent,
    ContextBudget,
    ContextEntry,
    ContextManager,
    InvariantViolation,
    PinnedOverflow,
)
from evokit.gateway import ChatMessage, LlmGateway, ModelProfile, ProviderError
from helpers import scripted_gateway


def _entry(content: str, *, pinned: bool = False, kind: str = "dialogue", role: str = "user") -> ContextEntry:
    return ContextEntry(ChatMessage(role, content), kind=kind, pinned=pinned)


def _manager_with(entries: list[ContextEntry]) -> ContextManager:
    manager = ContextManager()
    for entry in entries:
        manager.append(entry)
    return manager


# -- append and usage ------------------------------------------------------------


def test_append_preserves_order_and_totals() -> None:
    manager = _manager_with([_entry("aaaa"), _entry("bbbb"), _entry("cccc")])
    assert [e.message.content for e in manager.entries()] == ["aaaa", "bbbb", "cccc"]
    assert manager.usage() == {"total_tokens": 3, "entry_count": 3, "compression_count": 0}


def test_system_entries_must_be_pinned() -> None:
    with pytest.raises(InvariantViolation):
        ContextEntry(ChatMessage("system", "prompt"), kind="system", pinned=False)
    with pytest.raises(InvariantViolation):
        ContextEntry(ChatMessage("user", "task"), kind="task", pinned=False)


def test_tokens_match_estimator() -> None:
    entry = _entry("abcdefgh")
    assert entry.tokens == 2


def test_fresh_context_usage() -> None:
    assert ContextManager().usage() == {
        "total_tokens": 0,
        "entry_count": 0,
        "compression_count": 0,
    }


# -- render -----------------------------------------------------------------------


def test_render_returns_everything_when_it_fits() -> None:
    manager = _manager_with(
        [_entry("sys prompt", pinned=True, kind="system", role="system"), _entry("hello")]
    )
    messages = manager.render(ContextBudget(max_tokens=100))
    assert [m.content for m in messages] == ["sys prompt", "hello"]


def test_render_drops_exactly_two_oldest_unpinned() -> None:
    # 6-entry fixture: 1 pinned (2 tokens) + unpinned tokens [3, 3, 2, 2, 2].
    pinned = _entry("x" * 8, pinned=True, kind="system", role="system")
    unpinned = [
        _entry("a" * 12),
        _entry("b" * 12),
        _entry("c" * 8),
        _entry("d" * 8),
        _entry("e" * 8),
    ]
    manager = _manager_with([pinned, *unpinned])
    budget = ContextBudget(max_tokens=9)

    # Independent oracle: brute force over unpinned suffix lengths.
    def brute_force_keep() -> list[str]:
        pinned_cost = pinned.tokens
        best: list[ContextEntry] = []
        for k in range(len(unpinned) + 1):
            suffix = unpinned[len(unpinned) - k :]
            if pinned_cost + sum(e.tokens for e in suffix) <= budget.max_tokens:
                best = suffix
        return [pinned.message.content] + [e.message.content for e in best]

    rendered = [m.content for m in manager.render(budget)]
    assert rendered == brute_force_keep()
    assert rendered == ["x" * 8, "c" * 8, "d" * 8, "e" * 8]


def test_render_pinned_overflow() -> None:
    manager = _manager_with([_entry("x" * 40, pinned=True, kind="system", role="system")])
    with pytest.raises(PinnedOverflow):
        manager.render(ContextBudget(max_tokens=5))


def test_render_never_exceeds_budget_fuzz() -> None:
    import random

    rng = random.Random(99)
    for _ in range(200):
        manager = ContextManager()
        manager.append(_entry("sys", pinned=True, kind="system", role="system"))
        for _ in range(rng.randrange(0, 20)):
            manager.append(_entry("w" * rng.randrange(1, 40)))
        budget = ContextBudget(max_tokens=rng.randrange(5, 50))
        messages = manager.render(budget)
        total = sum((len(m.content) + 3) // 4 for m in messages)
        assert total <= budget.max_tokens


# -- compression -------------------------------------------------------------------


def _ten_dialogue_manager() -> ContextManager:
    manager = ContextManager()
    manager.append(_entry("sys!", pinned=True, kind="system", role="system"))
    for i in range(10):
        manager.append(_entry(f"turn {i:02d}"))  # 7 chars -> 2 tokens each
    return manager


def test_below_threshold_is_identity(tmp_path) -> None:
    gateway = scripted_gateway(tmp_path, summarizer=[{"content": "SUMMARY-1"}])
    manager = _ten_dialogue_manager()
    before = manager.entries()
    event = manager.maybe_compress(
        ContextBudget(max_tokens=1000, compress_at=0.9), gateway, "summarizer"
    )
    assert event is None
    assert manager.entries() == before


def test_summarize_replaces_oldest_half(tmp_path) -> None:
    gateway = scripted_gateway(tmp_path, summarizer=[{"content": "SUMMARY-1"}])
    manager = _ten_dialogue_manager()
    before_tokens = manager.total_tokens
    event = manager.maybe_compress(
        ContextBudget(max_tokens=25, compress_at=0.8), gateway, "summarizer"
    )
    assert isinstance(event, CompressionEvent)
    assert event.replaced_count == 5
    assert event.before_tokens == before_tokens
    assert event.after_tokens < event.before_tokens
    summaries = [e for e in manager.entries() if e.kind == "summary"]
    assert len(summaries) == 1
    assert summaries[0].message.content == "SUMMARY-1"
    assert not summaries[0].pinned
    # The recent half survives verbatim, in order, after the summary.
    contents = [e.message.content for e in manager.entries()]
    assert contents == ["sys!", "SUMMARY-1"] + [f"turn {i:02d}" for i in range(5, 10)]
    assert manager.usage()["compression_count"] == 1


def test_sliding_window_drops_span_without_model(tmp_path) -> None:
    manager = _ten_dialogue_manager()
    event = manager.maybe_compress(
        ContextBudget(max_tokens=25, compress_at=0.8, strategy="sliding_window")
    )
    assert event is not None
    assert event.replaced_count == 5
    assert event.summary_tokens == 0
    assert event.usage is None
    assert event.after_tokens < event.before_tokens
    assert [e.message.content for e in manager.entries()] == ["sys!"] + [
        f"turn {i:02d}" for i in range(5, 10)
    ]


def test_provider_error_leaves_history_unchanged() -> None:
    gateway = LlmGateway()
    gateway.register_profile(
        ModelProfile("dead", "http-openai-compatible", "m", base_url="http://127.0.0.1:9")
    )
    manager = _ten_dialogue_manager()
    before = manager.entries()
    with pytest.raises(ProviderError):
        manager.maybe_compress(ContextBudget(max_tokens=25, compress_at=0.8), gateway, "dead")
    assert manager.entries() == before
    assert manager.usage()["compression_count"] == 0


def test_span_extends_over_tool_pair(tmp_path) -> None:
    from evokit.tools import Action

    gateway = scripted_gateway(tmp_path, summarizer=[{"content": "S"}])
    manager = ContextManager()
    manager.append(_entry("sys!", pinned=True, kind="system", role="system"))
    # Three 2-token turns, then an action/observation pair right at the
    # half-way boundary: the span must swallow the whole pair.
    manager.append(_entry("turn aa"))
    manager.append(_entry("turn bb"))
    manager.append(
        ContextEntry(
            ChatMessage("assistant", "turn cc", tool_calls=(Action("c1", "exec", {}),))
        )
    )
    manager.append(ContextEntry(ChatMessage("tool", "tool out", tool_call_id="c1")))
    manager.append(_entry("turn dd"))
    manager.append(_entry("turn ee"))
    event = manager.maybe_compress(
        ContextBudget(max_tokens=16, compress_at=0.5), gateway, "summarizer"
    )
    assert event is not None
    # Half of 12 unpinned tokens is covered by the first three turns, but the
    # boundary extends through the tool observation.
    assert event.replaced_count == 4
    roles = [e.message.role for e in manager.entries()]
    assert "tool" not in roles


def test_pinned_survive_every_compression(tmp_path) -> None:
    gateway = scripted_gateway(tmp_path, summarizer=[{"content": "S"}])
    manager = _ten_dialogue_manager()
    manager.maybe_compress(ContextBudget(max_tokens=25, compress_at=0.5), gateway, "summarizer")
    rendered = manager.render(ContextBudget(max_tokens=25))
    assert rendered[0].content == "sys!"
