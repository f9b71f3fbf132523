"""Chat adapters: live endpoint, scripted fixture, and strict record/replay.

All three expose the same surface — ``send(history) -> assistant message`` —
so the session engine never knows whether it is talking to a real model, a
canned conversation, or a recording being verified message-by-message.

Transcript files are line-delimited JSON, UTF-8: the first line is metadata,
each following line is one ``{"role": ..., "content": ...}`` message.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import requests

from .errors import GatewayError, NetworkError, RateLimited, ReplayDivergence, ScriptExhausted

ENV_BASE_URL = "LOOPPILOT_LLM_BASE_URL"
ENV_API_KEY = "LOOPPILOT_LLM_API_KEY"

ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.role in ("user", "assistant") and not self.content:
            raise ValueError(f"{self.role} message must have content")

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class Transcript:
    messages: tuple[ChatMessage, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        validate_history(list(self.messages))


def validate_history(messages: list[ChatMessage]) -> None:
    """At most one system message at position 0; then strict user/assistant turns."""
    expected = "user"
    for i, msg in enumerate(messages):
        if msg.role == "system":
            if i != 0:
                raise ValueError("system message only allowed at position 0")
            continue
        if msg.role != expected:
            raise ValueError(f"message {i}: expected {expected}, got {msg.role}")
        expected = "assistant" if expected == "user" else "user"


def history_digest(messages: list[ChatMessage]) -> str:
    blob = json.dumps([m.to_dict() for m in messages], sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class LiveAdapter:
    """POSTs the conversation to a chat-completions endpoint."""

    kind = "live"

    def __init__(
        self,
        base_url: str,
        api_key: str = "",
        model: str = "default",
        temperature: float = 0.0,
        retries: int = 3,
        backoff_s: float = 0.5,
        timeout_s: float = 60.0,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.temperature = temperature
        self.retries = retries
        self.backoff_s = backoff_s
        self.timeout_s = timeout_s

    @classmethod
    def from_env(cls, **kwargs) -> "LiveAdapter":
        base_url = os.environ.get(ENV_BASE_URL)
        if not base_url:
            raise GatewayError(f"{ENV_BASE_URL} is not set")
        return cls(base_url, api_key=os.environ.get(ENV_API_KEY, ""), **kwargs)

    def send(self, history: list[ChatMessage]) -> ChatMessage:
        _check_outgoing(history)
        url = f"{self.base_url}/v1/chat/completions"
        body = {
            "model": self.model,
            "messages": [m.to_dict() for m in history],
            "temperature": self.temperature,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for attempt in range(self.retries):
            try:
                resp = requests.post(url, json=body, headers=headers, timeout=self.timeout_s)
            except requests.RequestException as exc:
                last_error = exc
                time.sleep(self.backoff_s * (2 ** attempt))
                continue
            if resp.status_code == 429:
                raise RateLimited("endpoint rate limited the request")
            if resp.status_code >= 500:
                last_error = NetworkError(f"server error {resp.status_code}")
                time.sleep(self.backoff_s * (2 ** attempt))
                continue
            if resp.status_code != 200:
                raise GatewayError(f"endpoint returned {resp.status_code}: {resp.text[:200]}")
            try:
                content = resp.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, ValueError) as exc:
                raise GatewayError(f"malformed completion body: {exc}")
            return ChatMessage("assistant", content)
        raise NetworkError(f"request failed after {self.retries} attempts: {last_error}")


class ScriptedAdapter:
    """Replays assistant turns from a fixture transcript, by turn index."""

    kind = "scripted"

    def __init__(self, transcript: Transcript):
        self.transcript = transcript
        self._replies = [m for m in transcript.messages if m.role == "assistant"]
        self._cursor = 0

    @classmethod
    def from_path(cls, path: str | Path) -> "ScriptedAdapter":
        return cls(load_transcript(path))

    @classmethod
    def from_replies(cls, replies: list[str]) -> "ScriptedAdapter":
        msgs = []
        for r in replies:
            msgs.append(ChatMessage("user", "-"))
            msgs.append(ChatMessage("assistant", r))
        return cls(Transcript(tuple(msgs), {"adapter": "scripted"}))

    def user_turns(self) -> list[str]:
        return [m.content for m in self.transcript.messages if m.role == "user"]

    def send(self, history: list[ChatMessage]) -> ChatMessage:
        _check_outgoing(history)
        if self._cursor >= len(self._replies):
            raise ScriptExhausted(f"script has only {len(self._replies)} assistant turn(s)")
        reply = self._replies[self._cursor]
        self._cursor += 1
        return reply


class ReplayAdapter:
    """Strict replay: the outgoing history must match the recording exactly."""

    kind = "replay"

    def __init__(self, transcript: Transcript):
        self.transcript = transcript

    @classmethod
    def from_path(cls, path: str | Path) -> "ReplayAdapter":
        return cls(load_transcript(path))

    def user_turns(self) -> list[str]:
        return [m.content for m in self.transcript.messages if m.role == "user"]

    def send(self, history: list[ChatMessage]) -> ChatMessage:
        _check_outgoing(history)
        recorded = self.transcript.messages
        for i, msg in enumerate(history):
            if i >= len(recorded):
                raise ReplayDivergence(i, "history is longer than the recording")
            if (recorded[i].role, recorded[i].content) != (msg.role, msg.content):
                raise ReplayDivergence(i)
        if len(history) >= len(recorded):
            raise ScriptExhausted("recording has no reply beyond this point")
        reply = recorded[len(history)]
        if reply.role != "assistant":
            raise ReplayDivergence(len(history), "recording does not continue with an assistant turn")
        return reply


def _check_outgoing(history: list[ChatMessage]) -> None:
    if not history or history[-1].role != "user":
        raise GatewayError("history must end with a user message")
    validate_history(history)


# --- transcript files ---

def record_transcript(
    path: str | Path,
    messages: list[ChatMessage],
    metadata: dict | None = None,
) -> Transcript:
    """Write a transcript file; line 1 metadata, one message per line after."""
    if not any(m.role == "assistant" for m in messages):
        raise GatewayError("nothing to record: session has no exchanges")
    meta = dict(metadata or {})
    meta.setdefault("created_at", datetime.now(timezone.utc).isoformat())
    meta.setdefault("adapter", "live")
    transcript = Transcript(tuple(messages), meta)
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(meta, ensure_ascii=False) + "\n")
        for m in messages:
            fh.write(json.dumps(m.to_dict(), ensure_ascii=False) + "\n")
    return transcript


def load_transcript(path: str | Path) -> Transcript:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise GatewayError(f"transcript {path} is empty")
    try:
        meta = json.loads(lines[0])
        messages = tuple(
            ChatMessage(**json.loads(line)) for line in lines[1:] if line.strip()
        )
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise GatewayError(f"malformed transcript {path}: {exc}")
    return Transcript(messages, meta)


def make_adapter(spec: dict, base_dir: str | Path = "."):
    """Build an adapter from a scenario's llm block."""
    kind = spec.get("adapter", "scripted")
    if kind == "live":
        extra = {}
        if "model" in spec:
            extra["model"] = spec["model"]
        if "temperature" in spec:
            extra["temperature"] = spec["temperature"]
        if spec.get("base_url"):
            return LiveAdapter(spec["base_url"], api_key=spec.get("api_key", ""), **extra)
        return LiveAdapter.from_env(**extra)
    path = spec.get("path")
    if not path:
        raise GatewayError(f"{kind} adapter requires a transcript path")
    full = Path(base_dir) / path
    if kind == "scripted":
        return ScriptedAdapter.from_path(full)
    if kind == "replay":
        return ReplayAdapter.from_path(full)
    raise GatewayError(f"unknown adapter kind {kind!r}")
