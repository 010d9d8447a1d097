"""Model Context Protocol adapter.

Speaks JSON-RPC 2.0 (methods ``tools/list`` and ``tools/call``) over HTTP or
a one-shot stdio subprocess, and converts remote tools into native registry
entries. Remote failures during a call are materialized as failed
observations, mirroring the local tool executor.
"""

from __future__ import annotations

import json
import subprocess
import threading
import time
from dataclasses import dataclass
from typing import Any

import requests

from .errors import EvokitError
from .tools import (
    Action,
    Execution,
    InvokeLimits,
    Observation,
    ToolDescriptor,
    ToolRegistry,
    truncate_output,
)

MCP_TRANSPORTS = ("http", "stdio")


class McpTransportError(EvokitError):
    pass


class McpProtocolError(EvokitError):
    pass


class McpToolError(EvokitError):
    """JSON-RPC error returned by the remote server for a tool call."""


@dataclass(frozen=True)
class McpEndpoint:
    alias: str
    endpoint: str
    transport: str = "http"

    def __post_init__(self) -> None:
        if self.transport not in MCP_TRANSPORTS:
            raise McpProtocolError(f"unknown MCP transport: {self.transport!r}")


class McpClient:
    def __init__(
        self,
        endpoint: McpEndpoint,
        session: requests.Session | None = None,
        timeout: float = 10.0,
    ):
        self.endpoint = endpoint
        self._session = session or requests.Session()
        self._timeout = timeout
        self._next_id = 0
        self._lock = threading.Lock()

    def _request_id(self) -> int:
        with self._lock:
            self._next_id += 1
            return self._next_id

    def _rpc(self, method: str, params: dict[str, Any]) -> Any:
        request = {
            "jsonrpc": "2.0",
            "id": self._request_id(),
            "method": method,
            "params": params,
        }
        if self.endpoint.transport == "http":
            raw = self._rpc_http(request)
        else:
            raw = self._rpc_stdio(request)
        if not isinstance(raw, dict):
            raise McpProtocolError(f"{method}: response is not a JSON object")
        if raw.get("error") is not None:
            error = raw["error"]
            raise McpToolError(f"{error.get('code')}: {error.get('message')}")
        return raw.get("result")

    def _rpc_http(self, request: dict[str, Any]) -> Any:
        try:
            response = self._session.post(
                self.endpoint.endpoint, json=request, timeout=self._timeout
            )
        except requests.RequestException as exc:
            raise McpTransportError(f"{self.endpoint.alias}: {exc}") from exc
        if response.status_code != 200:
            raise McpTransportError(
                f"{self.endpoint.alias}: HTTP {response.status_code}"
            )
        try:
            return response.json()
        except ValueError as exc:
            raise McpProtocolError(f"{self.endpoint.alias}: invalid JSON ({exc})") from exc

    def _rpc_stdio(self, request: dict[str, Any]) -> Any:
        # One-shot line-delimited exchange: spawn, write one request line,
        # read one response line. Good enough for batch tooling servers.
        try:
            proc = subprocess.run(
                self.endpoint.endpoint,
                shell=True,
                input=json.dumps(request) + "\n",
                capture_output=True,
                text=True,
                timeout=self._timeout,
            )
        except (OSError, subprocess.SubprocessError) as exc:
            raise McpTransportError(f"{self.endpoint.alias}: {exc}") from exc
        line = proc.stdout.strip().splitlines()
        if not line:
            raise McpTransportError(f"{self.endpoint.alias}: no response on stdout")
        try:
            return json.loads(line[0])
        except json.JSONDecodeError as exc:
            raise McpProtocolError(f"{self.endpoint.alias}: invalid JSON ({exc})") from exc

    def list_tools(self) -> list[ToolDescriptor]:
        result = self._rpc("tools/list", {})
        if not isinstance(result, dict) or not isinstance(result.get("tools"), list):
            raise McpProtocolError(f"{self.endpoint.alias}: malformed tools/list result")
        descriptors = []
        for raw in result["tools"]:
            if not isinstance(raw, dict) or not raw.get("name"):
                raise McpProtocolError(f"{self.endpoint.alias}: malformed tool entry")
            descriptors.append(
                ToolDescriptor(
                    name=raw["name"],
                    description=raw.get("description", ""),
                    parameters=raw.get("inputSchema") or {"type": "object", "properties": {}},
                    source="mcp",
                )
            )
        return descriptors

    def call_tool(self, name: str, arguments: dict[str, Any]) -> str:
        result = self._rpc("tools/call", {"name": name, "arguments": arguments})
        if not isinstance(result, dict) or not isinstance(result.get("content"), list):
            raise McpProtocolError(f"{self.endpoint.alias}: malformed tools/call result")
        parts = [
            item.get("text", "")
            for item in result["content"]
            if isinstance(item, dict) and item.get("type") == "text"
        ]
        return "\n".join(parts)


def mcp_list(endpoint: McpEndpoint, session: requests.Session | None = None) -> list[ToolDescriptor]:
    return McpClient(endpoint, session=session).list_tools()


def mcp_invoke(
    client: McpClient, action: Action, limits: InvokeLimits = InvokeLimits()
) -> tuple[Execution, Observation]:
    """Call a remote tool, materializing any failure in the returned pair."""
    started_at = time.time()
    t0 = time.monotonic()
    try:
        content = client.call_tool(action.tool, action.arguments)
        status = "ok"
    except EvokitError as exc:
        content = str(exc)
        status = "failed"
    duration_ms = int((time.monotonic() - t0) * 1000)
    text, truncated = truncate_output(content, limits.output_cap_chars)
    return (
        Execution(action.id, started_at, duration_ms, status),
        Observation(action.id, text, truncated, status != "ok"),
    )


def register_mcp_tools(registry: ToolRegistry, client: McpClient) -> list[str]:
    """List the endpoint's tools and register each as a native tool.

    A remote name that collides with an already-registered tool is prefixed
    with the endpoint alias (``stub.exec``). Returns the registered names.
    """
    registered = []
    for descriptor in sorted(client.list_tools(), key=lambda d: d.name):
        remote_name = descriptor.name
        local_name = remote_name
        if registry.get(local_name) is not None:
            local_name = f"{client.endpoint.alias}.{remote_name}"

        def handler(arguments: dict[str, Any], _remote: str = remote_name) -> str:
            return client.call_tool(_remote, arguments)

        registry.register_tool(
            ToolDescriptor(
                name=local_name,
                description=descriptor.description,
                parameters=descriptor.parameters,
                source="mcp",
            ),
            handler,
        )
        registered.append(local_name)
    return registered
