"""HTTP + event-stream server backing the browser console.

Endpoints:
  GET  /sessions                      list open sessions
  POST /sessions {scenario}           create a session from a path or bundled name
  POST /sessions/{id}/message {text}  apply a user turn
  POST /sessions/{id}/approval {verdict, reason?}
  GET  /sessions/{id}/events?offset=N server-sent events, replayable from any offset
  GET  /store?category=...            prompt store listing
  POST /store {category,title,dialogue,tags}
  POST /store/{id}/vote {direction, voter}

Every UiEvent carries a per-session monotonically increasing ``seq`` so a
client can reconnect at an offset with no gaps and no duplicates.
"""

from __future__ import annotations

import asyncio
import json
import threading
from dataclasses import dataclass, field

from fastapi import FastAPI
from fastapi.responses import JSONResponse, StreamingResponse

from .errors import (
    GatewayError,
    LoopPilotError,
    NothingPending,
    ScenarioError,
    VetoedByValidator,
)
from .gateway import ChatMessage
from .promptstore import PromptStore
from .scenario import load_scenario
from .session import Event, Session

UI_EVENT_TYPES = (
    "turn_added",
    "code_proposed",
    "approval_required",
    "execution_update",
    "world_state",
    "report",
    "store_changed",
)


@dataclass
class ManagedSession:
    id: str
    session: Session
    ui_events: list[dict] = field(default_factory=list)
    seq: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)

    def push(self, event_type: str, payload: dict) -> None:
        with self.lock:
            self.seq += 1
            self.ui_events.append({
                "type": event_type,
                "session_id": self.id,
                "seq": self.seq,
                "payload": payload,
            })


class SessionManager:
    def __init__(self):
        self.sessions: dict[str, ManagedSession] = {}
        self._counter = 0
        self._lock = threading.Lock()

    def create(self, scenario_ref: str) -> ManagedSession:
        scenario = load_scenario(scenario_ref)
        session = Session.start(scenario)
        with self._lock:
            self._counter += 1
            sid = f"s{self._counter}"
        managed = ManagedSession(sid, session)
        session.event_observer = lambda event: self._on_session_event(managed, event)
        session.world.sample_observer = lambda snap: managed.push("world_state", snap)
        managed.push("world_state", session.world.snapshot())
        self.sessions[sid] = managed
        return managed

    def get(self, sid: str) -> ManagedSession | None:
        return self.sessions.get(sid)

    def broadcast(self, event_type: str, payload: dict) -> None:
        for managed in self.sessions.values():
            managed.push(event_type, payload)

    @staticmethod
    def _on_session_event(managed: ManagedSession, event: Event) -> None:
        kind, payload = event.kind, event.payload
        if kind == "turn_added":
            managed.push("turn_added", payload)
        elif kind == "code_proposed":
            managed.push("code_proposed", payload)
            managed.push("approval_required", {
                "source": payload.get("source", ""),
                "violations": payload.get("violations", []),
            })
        elif kind in ("approval_granted", "approval_rejected", "execution_started"):
            managed.push("execution_update", {"phase": kind, **payload})
        elif kind == "execution_finished":
            managed.push("execution_update", {"phase": kind, **payload})
            managed.push("report", payload.get("report", {}))
        # observation_sent is already visible as the next user turn


def create_app(manager: SessionManager | None = None, store_dir: str = "promptstore") -> FastAPI:
    manager = manager or SessionManager()
    app = FastAPI(title="looppilot console")
    app.state.manager = manager
    app.state.store_dir = store_dir

    def error_response(status: int, kind: str, detail: str, **extra):
        return JSONResponse({"error": {"kind": kind, "detail": detail, **extra}}, status_code=status)

    @app.get("/sessions")
    def list_sessions():
        return [
            {"id": m.id, "name": m.session.name, "mode": m.session.mode}
            for m in manager.sessions.values()
        ]

    @app.post("/sessions")
    def create_session(body: dict):
        ref = body.get("scenario", "")
        try:
            managed = manager.create(ref)
        except ScenarioError as exc:
            return error_response(400, "ScenarioError", str(exc))
        return {"id": managed.id, "name": managed.session.name, "mode": managed.session.mode}

    @app.post("/sessions/{sid}/message")
    def post_message(sid: str, body: dict):
        managed = manager.get(sid)
        if managed is None:
            return error_response(404, "UnknownSession", sid)
        text = body.get("text", "")
        if not text:
            return error_response(400, "BadRequest", "text required")
        try:
            reply = managed.session.user_message(text)
        except GatewayError as exc:
            return error_response(502, type(exc).__name__, str(exc))
        except LoopPilotError as exc:
            return error_response(409, type(exc).__name__, str(exc))
        return {"assistant": reply}

    @app.post("/sessions/{sid}/approval")
    def post_approval(sid: str, body: dict):
        managed = manager.get(sid)
        if managed is None:
            return error_response(404, "UnknownSession", sid)
        verdict = body.get("verdict")
        try:
            if verdict == "approve":
                report = managed.session.approve(actor=body.get("actor", "console"))
                return {"report": report.to_dict()}
            if verdict == "reject":
                draft = managed.session.reject(body.get("reason", "rejected"))
                return {"feedback_draft": draft}
            return error_response(400, "BadRequest", "verdict must be approve or reject")
        except NothingPending as exc:
            return error_response(409, "NothingPending", str(exc))
        except VetoedByValidator as exc:
            violations = [v.to_dict() for v in (managed.session.pending.violations if managed.session.pending else [])]
            return error_response(422, "VetoedByValidator", str(exc), violations=violations)

    @app.get("/sessions/{sid}/events")
    async def stream_events(sid: str, offset: int = 0):
        managed = manager.get(sid)
        if managed is None:
            return error_response(404, "UnknownSession", sid)

        async def gen():
            cursor = offset
            while True:
                events = managed.ui_events
                while cursor < len(events):
                    yield f"data: {json.dumps(events[cursor], ensure_ascii=False)}\n\n"
                    cursor += 1
                await asyncio.sleep(0.02)

        return StreamingResponse(gen(), media_type="text/event-stream")

    def _store() -> PromptStore:
        return PromptStore(app.state.store_dir)

    @app.get("/store")
    def store_list(category: str | None = None):
        entries = _store().list(category)
        return [
            {
                "id": e.id,
                "category": e.category,
                "title": e.title,
                "score": e.score,
                "tags": list(e.tags),
                "dialogue": [m.to_dict() for m in e.dialogue.messages],
            }
            for e in entries
        ]

    @app.post("/store")
    def store_add(body: dict):
        try:
            messages = [ChatMessage(**m) for m in body.get("dialogue", [])]
            entry_id = _store().add(
                body["category"], body.get("title", ""), messages, tags=body.get("tags", ()),
            )
        except (LoopPilotError, KeyError, TypeError, ValueError) as exc:
            return error_response(400, type(exc).__name__, str(exc))
        manager.broadcast("store_changed", {"id": entry_id})
        return {"id": entry_id}

    @app.post("/store/{entry_id}/vote")
    def store_vote(entry_id: str, body: dict):
        delta = 1 if body.get("direction") == "up" else -1
        try:
            score = _store().vote(entry_id, delta, body.get("voter", "anonymous"))
        except LoopPilotError as exc:
            return error_response(400, type(exc).__name__, str(exc))
        manager.broadcast("store_changed", {"id": entry_id, "score": score})
        return {"score": score}

    return app


def serve(host: str = "127.0.0.1", port: int = 8765, store_dir: str = "promptstore") -> None:
    """Run the console server; prints the bound port once listening."""
    import time

    import uvicorn

    app = create_app(store_dir=store_dir)
    config = uvicorn.Config(app, host=host, port=port, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    while not server.started:
        if not thread.is_alive():
            raise RuntimeError("server failed to start")
        time.sleep(0.01)
    bound = server.servers[0].sockets[0].getsockname()
    print(f"listening on http://{bound[0]}:{bound[1]}", flush=True)
    try:
        thread.join()
    except KeyboardInterrupt:  # pragma: no cover - interactive shutdown
        server.should_exit = True
        thread.join()
