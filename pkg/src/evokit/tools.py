"""Tool registry and executor built around the action/execution/observation cycle.

Every invocation returns an ``(Execution, Observation)`` pair. Failures never
escape as exceptions: unknown tools, handler errors, and timeouts all
materialize inside the pair so an agent loop can observe them and keep going.
"""

from __future__ import annotations

import subprocess
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .errors import EvokitError

ToolHandler = Callable[[dict[str, Any]], str]

TRUNCATION_MARKER = "…[truncated]"
DEFAULT_OUTPUT_CAP = 16_384
DEFAULT_TIMEOUT_MS = 30_000

TOOL_SOURCES = ("builtin", "mcp", "skill")

# Catalog of tools install_builtin_tools() can provide ("load_skill" is added
# separately by the skill system).
BUILTIN_TOOL_NAMES = (
    "exec",
    "file_read",
    "file_write",
    "pdf_extract",
    "web_fetch",
    "web_search",
)

# Hard ceiling for exec subprocesses so an abandoned invocation thread cannot
# leave a child running forever after the registry-level timeout fires.
_EXEC_HARD_TIMEOUT_S = 600


class DuplicateTool(EvokitError):
    pass


class InvalidDescriptor(EvokitError):
    pass


@dataclass(frozen=True)
class ToolDescriptor:
    """Registry entry describing one callable tool."""

    name: str
    description: str
    parameters: dict[str, Any]
    source: str = "builtin"

    def __post_init__(self) -> None:
        if not self.name or not self.name.strip():
            raise InvalidDescriptor("tool name must be non-empty")
        if self.source not in TOOL_SOURCES:
            raise InvalidDescriptor(f"unknown tool source: {self.source!r}")
        if not isinstance(self.parameters, dict):
            raise InvalidDescriptor(f"{self.name}: parameters must be an object")
        props = self.parameters.get("properties", {})
        if not isinstance(props, dict):
            raise InvalidDescriptor(f"{self.name}: properties must be an object")
        required = self.parameters.get("required", [])
        if not isinstance(required, list) or any(r not in props for r in required):
            raise InvalidDescriptor(
                f"{self.name}: required entries must name declared properties"
            )


@dataclass(frozen=True)
class Action:
    """One tool invocation requested by a model response.

    Ids are unique within the conversation that produced them; trajectory
    events additionally carry slot and agent tags, so pairing checks key on
    (slot, agent, id).
    """

    id: str
    tool: str
    arguments: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Execution:
    action_id: str
    started_at: float
    duration_ms: int
    status: str  # ok | failed | timeout


@dataclass(frozen=True)
class Observation:
    action_id: str
    content: str
    truncated: bool = False
    is_error: bool = False


@dataclass(frozen=True)
class InvokeLimits:
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    output_cap_chars: int = DEFAULT_OUTPUT_CAP


def truncate_output(content: str, cap: int) -> tuple[str, bool]:
    """Cap tool output, appending a visible marker when anything was cut."""
    if len(content) <= cap:
        return content, False
    return content[:cap] + TRUNCATION_MARKER, True


def descriptor_wire_form(descriptor: ToolDescriptor) -> dict[str, Any]:
    """Provider wire shape for one descriptor (chat-completions style)."""
    return {
        "type": "function",
        "function": {
            "name": descriptor.name,
            "description": descriptor.description,
            "parameters": descriptor.parameters,
        },
    }


class ToolRegistry:
    """Name-keyed registry of descriptors plus their handlers.

    Registration happens during single-threaded setup; invoke() is read-only
    with respect to the registry and safe to call concurrently.
    """

    def __init__(self) -> None:
        self._tools: dict[str, tuple[ToolDescriptor, ToolHandler]] = {}
        self._lock = threading.Lock()

    def register_tool(self, descriptor: ToolDescriptor, handler: ToolHandler) -> None:
        with self._lock:
            if descriptor.name in self._tools:
                raise DuplicateTool(f"tool already registered: {descriptor.name}")
            self._tools[descriptor.name] = (descriptor, handler)

    def names(self) -> list[str]:
        return sorted(self._tools)

    def get(self, name: str) -> ToolDescriptor | None:
        entry = self._tools.get(name)
        return entry[0] if entry else None

    def descriptors(self) -> list[ToolDescriptor]:
        return [self._tools[name][0] for name in self.names()]

    def invoke(
        self, action: Action, limits: InvokeLimits = InvokeLimits()
    ) -> tuple[Execution, Observation]:
        """Run one action and always return a well-formed pair."""
        started_at = time.time()
        t0 = time.monotonic()
        entry = self._tools.get(action.tool)
        if entry is None:
            return self._finish(
                action, started_at, t0, "failed", f"unknown tool: {action.tool}", limits
            )

        status, content = _call_with_timeout(entry[1], action.arguments, limits.timeout_ms)
        return self._finish(action, started_at, t0, status, content, limits)

    @staticmethod
    def _finish(
        action: Action,
        started_at: float,
        t0: float,
        status: str,
        content: str,
        limits: InvokeLimits,
    ) -> tuple[Execution, Observation]:
        duration_ms = int((time.monotonic() - t0) * 1000)
        text, truncated = truncate_output(content, limits.output_cap_chars)
        execution = Execution(action.id, started_at, duration_ms, status)
        observation = Observation(action.id, text, truncated, status != "ok")
        return execution, observation


def _call_with_timeout(
    handler: ToolHandler, arguments: dict[str, Any], timeout_ms: int
) -> tuple[str, str]:
    """Run a handler on its own thread so a stalled tool cannot stall the loop."""
    box: dict[str, Any] = {}

    def target() -> None:
        try:
            box["value"] = handler(arguments)
        except BaseException as exc:  # noqa: BLE001 — materialized in the pair
            box["error"] = exc

    worker = threading.Thread(target=target, daemon=True)
    worker.start()
    worker.join(max(timeout_ms, 1) / 1000.0)
    if worker.is_alive():
        return "timeout", f"tool timed out after {timeout_ms} ms"
    if "error" in box:
        return "failed", f"tool error: {box['error']}"
    value = box.get("value", "")
    return "ok", value if isinstance(value, str) else str(value)


def render_tool_schemas(registry: ToolRegistry) -> list[dict[str, Any]]:
    """All registered tools in wire form, order-stable by name."""
    return [descriptor_wire_form(d) for d in registry.descriptors()]


class ToolExecutionError(EvokitError):
    pass


class FetchError(EvokitError):
    pass


class LocalCorpusFetcher:
    """Offline stand-in for web retrieval, backed by a fixture directory.

    URLs map to files by stripping the scheme and flattening the remainder:
    ``https://example.org/a/b.txt`` reads ``example.org_a_b.txt``. Searches
    read ``search-<flattened query>.txt``. Missing files raise, which the tool
    layer converts into error observations — the offline analogue of a 404.
    """

    def __init__(self, root: Path | str):
        self.root = Path(root)

    @staticmethod
    def _flatten(text: str) -> str:
        return "".join(c if c.isalnum() or c in "._-" else "_" for c in text)

    def fetch(self, url: str) -> str:
        remainder = url.split("://", 1)[-1]
        path = self.root / self._flatten(remainder)
        if not path.is_file():
            raise FetchError(f"404 not found: {url}")
        return path.read_text(encoding="utf-8")

    def search(self, query: str) -> str:
        path = self.root / f"search-{self._flatten(query)}.txt"
        if not path.is_file():
            raise FetchError(f"no results for query: {query}")
        return path.read_text(encoding="utf-8")

    def __call__(self, url: str) -> str:
        return self.fetch(url)


def _no_backend(_: str) -> str:
    raise FetchError(
        "no retrieval backend configured; point tools.corpus at a fixture directory"
    )


def _confined(workspace: Path, raw: Any) -> Path:
    rel = str(raw)
    root = workspace.resolve()
    candidate = (root / rel).resolve()
    if Path(rel).is_absolute() or not candidate.is_relative_to(root):
        raise ToolExecutionError(f"path escapes the run workspace: {rel}")
    return candidate


def builtin_tool_set(
    workspace: Path,
    fetcher: Callable[[str], str] | None = None,
    searcher: Callable[[str], str] | None = None,
) -> list[tuple[ToolDescriptor, ToolHandler]]:
    """Descriptors and handlers for the built-in tools.

    File tools are confined to ``workspace``; exec runs a shell command in it
    with a hard timeout; web_fetch/web_search/pdf_extract delegate to the
    supplied fetcher (a LocalCorpusFetcher in offline runs).
    """
    workspace = Path(workspace)
    fetch = fetcher or _no_backend
    search = searcher or (fetcher.search if isinstance(fetcher, LocalCorpusFetcher) else _no_backend)

    def file_read(args: dict[str, Any]) -> str:
        return _confined(workspace, args["path"]).read_text(encoding="utf-8")

    def file_write(args: dict[str, Any]) -> str:
        path = _confined(workspace, args["path"])
        path.parent.mkdir(parents=True, exist_ok=True)
        content = str(args.get("content", ""))
        path.write_text(content, encoding="utf-8")
        return f"wrote {len(content)} chars to {args['path']}"

    def run_command(args: dict[str, Any]) -> str:
        proc = subprocess.run(
            str(args["cmd"]),
            shell=True,
            cwd=workspace,
            capture_output=True,
            text=True,
            timeout=_EXEC_HARD_TIMEOUT_S,
        )
        output = proc.stdout + (proc.stderr if proc.stderr else "")
        if proc.returncode != 0:
            raise ToolExecutionError(f"command exited with {proc.returncode}: {output.strip()}")
        return output

    def web_fetch(args: dict[str, Any]) -> str:
        return fetch(str(args["url"]))

    def web_search(args: dict[str, Any]) -> str:
        return search(str(args["query"]))

    def pdf_extract(args: dict[str, Any]) -> str:
        # Stubbed as text passthrough over the same retrieval backend.
        return fetch(str(args["url"]))

    def schema(props: dict[str, str], required: list[str]) -> dict[str, Any]:
        return {
            "type": "object",
            "properties": {k: {"type": "string", "description": v} for k, v in props.items()},
            "required": required,
        }

    return [
        (
            ToolDescriptor(
                "exec",
                "Run a shell command inside the run workspace and return its output.",
                schema({"cmd": "shell command line"}, ["cmd"]),
            ),
            run_command,
        ),
        (
            ToolDescriptor(
                "file_read",
                "Read a text file from the run workspace.",
                schema({"path": "workspace-relative path"}, ["path"]),
            ),
            file_read,
        ),
        (
            ToolDescriptor(
                "file_write",
                "Write a text file inside the run workspace.",
                schema(
                    {"path": "workspace-relative path", "content": "text to write"},
                    ["path"],
                ),
            ),
            file_write,
        ),
        (
            ToolDescriptor(
                "pdf_extract",
                "Extract the text of a PDF document (stub: text passthrough).",
                schema({"url": "document location"}, ["url"]),
            ),
            pdf_extract,
        ),
        (
            ToolDescriptor(
                "web_fetch",
                "Fetch a URL and return its text content.",
                schema({"url": "location to fetch"}, ["url"]),
            ),
            web_fetch,
        ),
        (
            ToolDescriptor(
                "web_search",
                "Search for documents and return a result listing.",
                schema({"query": "search query"}, ["query"]),
            ),
            web_search,
        ),
    ]


def install_builtin_tools(
    registry: ToolRegistry,
    workspace: Path,
    names: list[str] | None = None,
    fetcher: Callable[[str], str] | None = None,
) -> None:
    wanted = set(BUILTIN_TOOL_NAMES if names is None else names)
    unknown = wanted - set(BUILTIN_TOOL_NAMES)
    if unknown:
        raise InvalidDescriptor(f"unknown builtin tools: {sorted(unknown)}")
    for descriptor, handler in builtin_tool_set(workspace, fetcher):
        if descriptor.name in wanted:
            registry.register_tool(descriptor, handler)
