"""Provider-agnostic chat model access.

Two provider kinds are supported: ``scripted`` (a deterministic offline
backend driven by JSON script files, used by every test) and
``http-openai-compatible`` (the de-facto chat-completions wire shape).
Profiles are registered once up front and then looked up by name, so an
agent swaps backends by changing one string.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import requests

from .errors import EvokitError
from .tools import Action, ToolDescriptor, descriptor_wire_form

ROLES = ("system", "user", "assistant", "tool")
PROVIDERS = ("scripted", "http-openai-compatible")
FINISH_REASONS = ("stop", "tool_call", "length")


class DuplicateProfile(EvokitError):
    pass


class InvalidProfile(EvokitError):
    pass


class ProfileNotFound(EvokitError):
    pass


class ScriptParseError(EvokitError):
    pass


class ProviderError(EvokitError):
    """Transport or HTTP failure from a model provider."""

    def __init__(self, message: str, status: int | None = None, body: str | None = None):
        detail = message
        if status is not None:
            detail += f" (status {status})"
        if body:
            detail += f": {body[:200]}"
        super().__init__(detail)
        self.status = status
        self.body = body


def estimate_tokens(text: str) -> int:
    """Deterministic token estimate: ceil(len(text) / 4).

    Not a real tokenizer, but monotone, dependency-free, and good enough for
    budget enforcement; the context manager only needs relative sizes.
    """
    return (len(text) + 3) // 4


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __post_init__(self) -> None:
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be non-negative")

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(
            self.prompt_tokens + other.prompt_tokens,
            self.completion_tokens + other.completion_tokens,
        )

    def as_dict(self) -> dict[str, int]:
        return {
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
        }


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str
    tool_calls: tuple[Action, ...] = ()
    tool_call_id: str | None = None

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown role: {self.role!r}")
        if self.role == "tool" and not self.tool_call_id:
            raise ValueError("tool messages must carry a tool_call_id")
        if self.role != "assistant" and self.tool_calls:
            raise ValueError("only assistant messages may carry tool calls")


@dataclass(frozen=True)
class ChatResponse:
    content: str
    tool_calls: tuple[Action, ...] = ()
    usage: TokenUsage = TokenUsage()
    finish: str = "stop"

    def __post_init__(self) -> None:
        if self.finish not in FINISH_REASONS:
            raise ValueError(f"unknown finish reason: {self.finish!r}")
        if (self.finish == "tool_call") != bool(self.tool_calls):
            raise ValueError("finish=tool_call iff tool_calls is non-empty")


@dataclass(frozen=True)
class ModelProfile:
    name: str
    provider: str
    model: str
    base_url: str | None = None
    api_key_env: str | None = None
    temperature: float = 0.0
    max_output_tokens: int = 1024
    script_path: str | None = None

    def validate(self) -> None:
        if not self.name:
            raise InvalidProfile("profile name must be non-empty")
        if self.provider not in PROVIDERS:
            raise InvalidProfile(f"{self.name}: unknown provider {self.provider!r}")
        if not 0.0 <= self.temperature <= 2.0:
            raise InvalidProfile(f"{self.name}: temperature must be in [0, 2]")
        if self.max_output_tokens <= 0:
            raise InvalidProfile(f"{self.name}: max_output_tokens must be positive")
        if self.provider == "scripted" and not self.script_path:
            raise InvalidProfile(f"{self.name}: scripted profiles need a script_path")
        if self.provider == "http-openai-compatible" and not self.base_url:
            raise InvalidProfile(f"{self.name}: http profiles need a base_url")


@dataclass(frozen=True)
class ScriptEntry:
    content: str
    tool_calls: tuple[tuple[str, dict[str, Any]], ...] = ()
    match: re.Pattern[str] | None = None


@dataclass(frozen=True)
class Script:
    """Ordered canned responses for the scripted provider.

    The playback position is derived from the conversation itself (the number
    of assistant messages already present), never from hidden state, so
    identical message lists always replay identically and concurrent
    conversations cannot interleave each other's scripts. When the entries
    run out the last one repeats, leaving loop termination to the engine.
    """

    entries: tuple[ScriptEntry, ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ScriptParseError("a script needs at least one entry")


def parse_script(text: str, source: str = "<script>") -> Script:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScriptParseError(f"{source}: invalid JSON ({exc})") from exc
    if not isinstance(data, list) or not data:
        raise ScriptParseError(f"{source}: expected a non-empty JSON array")
    entries = []
    for i, raw in enumerate(data):
        if not isinstance(raw, dict):
            raise ScriptParseError(f"{source}: entry {i} is not an object")
        unknown = set(raw) - {"match", "content", "tool_calls"}
        if unknown:
            raise ScriptParseError(f"{source}: entry {i} has unknown keys {sorted(unknown)}")
        content = raw.get("content", "")
        if not isinstance(content, str):
            raise ScriptParseError(f"{source}: entry {i} content must be a string")
        pattern = None
        if raw.get("match") is not None:
            try:
                pattern = re.compile(raw["match"])
            except (re.error, TypeError) as exc:
                raise ScriptParseError(f"{source}: entry {i} bad match regex ({exc})") from exc
        calls = []
        for call in raw.get("tool_calls", []) or []:
            if not isinstance(call, dict) or "name" not in call:
                raise ScriptParseError(f"{source}: entry {i} tool_calls need a name")
            args = call.get("arguments", {})
            if not isinstance(args, dict):
                raise ScriptParseError(f"{source}: entry {i} arguments must be an object")
            calls.append((str(call["name"]), args))
        entries.append(ScriptEntry(content, tuple(calls), pattern))
    return Script(tuple(entries))


def load_script(path: str | Path) -> Script:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScriptParseError(f"{path}: cannot read script ({exc})") from exc
    return parse_script(text, source=str(path))


def _last_non_assistant(messages: Sequence[ChatMessage]) -> str:
    for message in reversed(messages):
        if message.role != "assistant":
            return message.content
    return ""


def scripted_step(script: Script, messages: Sequence[ChatMessage]) -> ChatResponse:
    """Produce the next canned response for this conversation.

    Scans forward from the derived position for the first entry whose match
    regex (if any) hits the last non-assistant message; entries without a
    match always hit. Falls back to the final entry when nothing matches.
    The placeholder ``{{last}}`` in entry content is replaced with the last
    non-assistant message, which is how echo scripts are written.
    """
    target = _last_non_assistant(messages)
    position = min(
        sum(1 for m in messages if m.role == "assistant"), len(script.entries) - 1
    )
    selected = None
    for entry in script.entries[position:]:
        if entry.match is None or entry.match.search(target):
            selected = entry
            break
    if selected is None:
        selected = script.entries[-1]

    content = selected.content.replace("{{last}}", target)
    actions = tuple(
        Action(id=f"call-{position}-{k}", tool=name, arguments=dict(args))
        for k, (name, args) in enumerate(selected.tool_calls)
    )
    prompt = sum(estimate_tokens(m.content) for m in messages)
    completion = estimate_tokens(content) + sum(
        estimate_tokens(json.dumps(a.arguments, sort_keys=True)) for a in actions
    )
    return ChatResponse(
        content=content,
        tool_calls=actions,
        usage=TokenUsage(prompt, completion),
        finish="tool_call" if actions else "stop",
    )


class LlmGateway:
    """Profile registry plus a uniform complete() across providers."""

    def __init__(self, session: requests.Session | None = None, http_timeout: float = 30.0):
        self._profiles: dict[str, ModelProfile] = {}
        self._scripts: dict[str, Script] = {}
        self._lock = threading.Lock()
        self._session = session or requests.Session()
        self._http_timeout = http_timeout

    def register_profile(self, profile: ModelProfile) -> None:
        profile.validate()
        script = load_script(profile.script_path) if profile.provider == "scripted" else None
        with self._lock:
            if profile.name in self._profiles:
                raise DuplicateProfile(f"profile already registered: {profile.name}")
            self._profiles[profile.name] = profile
            if script is not None:
                self._scripts[profile.name] = script

    def has_profile(self, name: str) -> bool:
        return name in self._profiles

    def list_profiles(self) -> list[str]:
        return sorted(self._profiles)

    def complete(
        self,
        profile_name: str,
        messages: Sequence[ChatMessage],
        tools: Sequence[ToolDescriptor] = (),
    ) -> ChatResponse:
        profile = self._profiles.get(profile_name)
        if profile is None:
            raise ProfileNotFound(f"no such profile: {profile_name}")
        if not messages:
            raise ValueError("messages must be non-empty")
        if messages[0].role not in ("system", "user"):
            raise ValueError("conversations must open with a system or user message")
        if profile.provider == "scripted":
            return scripted_step(self._scripts[profile_name], messages)
        return self._http_complete(profile, messages, tools)

    def _http_complete(
        self,
        profile: ModelProfile,
        messages: Sequence[ChatMessage],
        tools: Sequence[ToolDescriptor],
    ) -> ChatResponse:
        headers = {"Content-Type": "application/json"}
        if profile.api_key_env:
            key = os.environ.get(profile.api_key_env)
            if not key:
                raise ProviderError(
                    f"api key env var {profile.api_key_env} is not set"
                )
            headers["Authorization"] = f"Bearer {key}"

        body: dict[str, Any] = {
            "model": profile.model,
            "messages": [_wire_message(m) for m in messages],
            "temperature": profile.temperature,
            "max_tokens": profile.max_output_tokens,
        }
        if tools:
            body["tools"] = [descriptor_wire_form(d) for d in tools]

        url = profile.base_url.rstrip("/") + "/chat/completions"
        try:
            response = self._session.post(
                url, json=body, headers=headers, timeout=self._http_timeout
            )
        except requests.RequestException as exc:
            raise ProviderError(f"transport failure: {exc}") from exc
        if response.status_code != 200:
            raise ProviderError("provider returned an error", response.status_code, response.text)
        try:
            payload = response.json()
            message = payload["choices"][0]["message"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed provider response: {exc}") from exc

        actions = []
        for k, call in enumerate(message.get("tool_calls") or []):
            fn = call.get("function", {})
            try:
                arguments = json.loads(fn.get("arguments") or "{}")
            except json.JSONDecodeError as exc:
                raise ProviderError(f"malformed tool call arguments: {exc}") from exc
            actions.append(
                Action(id=call.get("id") or f"call-http-{k}", tool=fn.get("name", ""), arguments=arguments)
            )

        finish_reason = payload["choices"][0].get("finish_reason", "stop")
        if actions:
            finish = "tool_call"
        elif finish_reason == "length":
            finish = "length"
        else:
            finish = "stop"

        usage = payload.get("usage") or {}
        content = message.get("content") or ""
        return ChatResponse(
            content=content,
            tool_calls=tuple(actions),
            usage=TokenUsage(
                int(usage.get("prompt_tokens", 0)),
                int(usage.get("completion_tokens", 0)),
            ),
            finish=finish,
        )


def _wire_message(message: ChatMessage) -> dict[str, Any]:
    wire: dict[str, Any] = {"role": message.role, "content": message.content}
    if message.tool_calls:
        wire["tool_calls"] = [
            {
                "id": a.id,
                "type": "function",
                "function": {"name": a.tool, "arguments": json.dumps(a.arguments, sort_keys=True)},
            }
            for a in message.tool_calls
        ]
    if message.tool_call_id:
        wire["tool_call_id"] = message.tool_call_id
    return wire
