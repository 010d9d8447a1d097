"""Thread-safe append-only trajectory recorder.

One JSON object per line, keys always serialized in the fixed order
``seq, ts, run_id, slot, agent, kind, turn, payload, usage``. Sequence
numbers are assigned and the line written under one lock, so concurrent
producers can never tear a line or leave a gap, and file order always equals
sequence order. The recorder also accumulates token usage as events pass
through, which is what the run_end totals are built from.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..errors import EvokitError
from ..gateway import TokenUsage

EVENT_KINDS = (
    "run_start",
    "turn",
    "tool_call",
    "observation",
    "critique",
    "compression",
    "promotion",
    "run_end",
    "error",
)

KEY_ORDER = ("seq", "ts", "run_id", "slot", "agent", "kind", "turn", "payload", "usage")


class RecorderClosed(EvokitError):
    pass


@dataclass(frozen=True)
class TrajectoryEvent:
    seq: int
    ts: float
    run_id: str
    slot: str | None
    agent: str | None
    kind: str
    turn: int | None
    payload: dict[str, Any]
    usage: TokenUsage | None


class TrajectoryRecorder:
    def __init__(self, path: str | Path, run_id: str):
        self.path = Path(path)
        self.run_id = run_id
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = self.path.open("a", encoding="utf-8")
        self._lock = threading.Lock()
        self._seq = 0
        self._closed = False
        self._usage = TokenUsage()

    def record(
        self,
        kind: str,
        payload: dict[str, Any],
        *,
        slot: str | None = None,
        agent: str | None = None,
        turn: int | None = None,
        usage: TokenUsage | None = None,
    ) -> int:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind: {kind!r}")
        with self._lock:
            if self._closed:
                raise RecorderClosed("trajectory recorder is closed")
            self._seq += 1
            event = {
                "seq": self._seq,
                "ts": time.time(),
                "run_id": self.run_id,
                "slot": slot,
                "agent": agent,
                "kind": kind,
                "turn": turn,
                "payload": payload,
                "usage": usage.as_dict() if usage else None,
            }
            self._handle.write(json.dumps(event, ensure_ascii=False) + "\n")
            self._handle.flush()
            if usage is not None:
                self._usage = self._usage + usage
            return self._seq

    def usage_totals(self) -> TokenUsage:
        with self._lock:
            return self._usage

    @property
    def closed(self) -> bool:
        return self._closed

    def close(self) -> None:
        with self._lock:
            if not self._closed:
                self._closed = True
                self._handle.close()

    def __enter__(self) -> "TrajectoryRecorder":
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self.close()
