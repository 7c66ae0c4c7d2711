"""Chat-completion transports and structured-output extraction.

Requests and responses use the ubiquitous chat-completions JSON shape:
request ``{"model", "messages", "tools"?}``, response
``{"choices": [{"message": {"role", "content", "tool_calls"?}}]}``.

Four implementations: HTTP (live endpoint, token taken from an environment
variable whose *name* is configured — the value never reaches logs or
disk), fixture-directory mock (request hash -> canned response), scripted
(in-memory queue, for tests), and a recording wrapper that materializes
fixtures from any inner transport.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Optional, Protocol

import httpx


class TransportError(Exception):
    pass


class NoJsonFound(ValueError):
    pass


class SchemaMismatch(ValueError):
    def __init__(self, missing, extra=()):
        self.missing = tuple(missing)
        self.extra = tuple(extra)
        parts = []
        if self.missing:
            parts.append("missing fields: " + ", ".join(self.missing))
        if self.extra:
            parts.append("unexpected fields: " + ", ".join(self.extra))
        super().__init__("; ".join(parts) or "schema mismatch")


class ChatTransport(Protocol):
    def complete(self, request: dict) -> dict: ...


def request_fingerprint(request: dict) -> str:
    """Stable hash of (model, messages, tools); keys fixture files."""
    canonical = json.dumps(
        {
            "model": request.get("model"),
            "messages": request.get("messages", []),
            "tools": request.get("tools", []),
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


class HttpTransport:
    """POSTs to ``{base_url}/chat/completions`` with bearer auth."""

    def __init__(
        self,
        base_url: str,
        model: str,
        token_env: str = "FLUIDC_LLM_TOKEN",
        temperature: Optional[float] = None,
        timeout: float = 60.0,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.token_env = token_env
        self.temperature = temperature
        self.timeout = timeout

    def complete(self, request: dict) -> dict:
        body = dict(request)
        body.setdefault("model", self.model)
        if self.temperature is not None:
            body.setdefault("temperature", self.temperature)
        token = os.environ.get(self.token_env)
        headers = {}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        try:
            response = httpx.post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers=headers,
                timeout=self.timeout,
            )
        except httpx.HTTPError as exc:
            raise TransportError(f"transport failure: {exc.__class__.__name__}") from exc
        if response.status_code != 200:
            raise TransportError(f"endpoint returned HTTP {response.status_code}")
        return response.json()


class MockTransport:
    """Replays fixtures from a directory of ``<request-hash>.json`` files."""

    def __init__(self, fixture_dir: str | Path):
        self.fixture_dir = Path(fixture_dir)

    def complete(self, request: dict) -> dict:
        key = request_fingerprint(request)
        path = self.fixture_dir / f"{key}.json"
        if not path.exists():
            last_user = next(
                (
                    m.get("content", "")[:80]
                    for m in reversed(request.get("messages", []))
                    if m.get("role") == "user"
                ),
                "",
            )
            raise TransportError(
                f"no fixture {key}.json for request (last user message: {last_user!r})"
            )
        return json.loads(path.read_text("utf-8"))


class ScriptedTransport:
    """Returns queued responses in order; records requests for assertions."""

    def __init__(self, responses: list[dict]):
        self.responses = list(responses)
        self.requests: list[dict] = []

    def complete(self, request: dict) -> dict:
        self.requests.append(json.loads(json.dumps(request)))
        if not self.responses:
            raise TransportError("scripted transport exhausted")
        return self.responses.pop(0)


class RecordingTransport:
    """Delegates to an inner transport and writes fixture files."""

    def __init__(self, inner: ChatTransport, fixture_dir: str | Path):
        self.inner = inner
        self.fixture_dir = Path(fixture_dir)
        self.fixture_dir.mkdir(parents=True, exist_ok=True)
        self.calls = 0

    def complete(self, request: dict) -> dict:
        response = self.inner.complete(request)
        key = request_fingerprint(request)
        path = self.fixture_dir / f"{key}.json"
        path.write_text(json.dumps(response, indent=2, ensure_ascii=False), "utf-8")
        self.calls += 1
        return response


class CountingTransport:
    """Delegates and tallies requests by agent tag (set via request extras)."""

    def __init__(self, inner: ChatTransport):
        self.inner = inner
        self.requests: list[dict] = []

    def complete(self, request: dict) -> dict:
        self.requests.append(request)
        return self.inner.complete(request)


def text_response(content: str) -> dict:
    return {"choices": [{"message": {"role": "assistant", "content": content}}]}


def tool_call_response(calls: list[tuple[str, dict]], content: str = "") -> dict:
    return {
        "choices": [
            {
                "message": {
                    "role": "assistant",
                    "content": content,
                    "tool_calls": [
                        {
                            "id": f"call_{i}",
                            "type": "function",
                            "function": {"name": name, "arguments": json.dumps(args)},
                        }
                        for i, (name, args) in enumerate(calls)
                    ],
                }
            }
        ]
    }


def response_message(response: dict) -> dict:
    try:
        return response["choices"][0]["message"]
    except (KeyError, IndexError, TypeError) as exc:
        raise TransportError(f"malformed transport response: {exc}") from exc


def extract_json(text: str, required: Optional[tuple[str, ...]] = None) -> dict:
    """First balanced top-level JSON object in ``text``.

    Tolerates surrounding prose and code fences.  ``required`` lists field
    names that must be present (SchemaMismatch otherwise).
    """
    if text is None:
        raise NoJsonFound("empty model output")
    start = text.find("{")
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, len(text)):
            ch = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
                continue
            if ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    candidate = text[start : i + 1]
                    try:
                        value = json.loads(candidate)
                    except json.JSONDecodeError:
                        break  # try the next opening brace
                    if not isinstance(value, dict):
                        break
                    if required:
                        missing = [f for f in required if f not in value]
                        if missing:
                            raise SchemaMismatch(missing)
                    return value
        start = text.find("{", start + 1)
    raise NoJsonFound("no balanced JSON object in model output")
