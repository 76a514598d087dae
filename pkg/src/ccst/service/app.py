"""HTTP and WebSocket front for the session engine.

The engine itself is synchronous and single-threaded per session: a queue
and worker task per session feed it events in order, and its effects
(frames out, generations, timers) are carried out here.
"""

from __future__ import annotations

import asyncio
import json
import secrets
import time
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .. import gateway
from ..context import ROLES, load_template
from ..gateway import GenerationResult, LLMConfig, MockProvider
from .engine import LaunchRequest, ProblemSetError, SessionNotFound, TutoringEngine
from .eventlog import LogWriter
from .notify import DeliveryError, notify_caregiver

CLIENT_FRAME_TYPES = ("join", "attempt", "hint_request", "chat")


@dataclass
class ServiceSettings:
    template_id: int = 7
    template_dir: str | None = None
    rate_limit_secs: float = 30.0
    llm: LLMConfig = field(default_factory=LLMConfig)
    provider_mode: str = "live"  # "live" | "mock"
    notify_webhook: str | None = None
    log_path: Path = Path("ccst-events.jsonl")
    public_url: str = "http://localhost:8000"
    ui_dist: Path | None = None


class SessionHub:
    """Owns the queues, sockets, and effect tasks for all live sessions."""

    def __init__(
        self,
        engine: TutoringEngine,
        writer: LogWriter,
        generate_fn: Callable[[str], GenerationResult],
        clock: Callable[[], float] = time.time,
    ):
        self.engine = engine
        self.writer = writer
        self.generate_fn = generate_fn
        self.clock = clock
        self.queues: dict[str, asyncio.Queue] = {}
        self.workers: dict[str, asyncio.Task] = {}
        self.sockets: dict[str, dict[str, list[WebSocket]]] = {}
        self.tokens: dict[str, dict[str, str]] = {}
        self.side_tasks: set[asyncio.Task] = set()

    def create_session(self, problems: list[str], public_url: str) -> dict:
        state, out = self.engine.create_session(problems, at=self.clock())
        self.writer.append(out.records)
        tokens = {
            "student": secrets.token_urlsafe(8),
            "caregiver": secrets.token_urlsafe(8),
        }
        self.tokens[state.id] = tokens
        self.queues[state.id] = asyncio.Queue()
        self.sockets[state.id] = {"student": [], "caregiver": []}
        self.workers[state.id] = asyncio.get_running_loop().create_task(
            self._worker(state.id)
        )
        urls = {
            role: f"{public_url}/ui/?session={state.id}&role={role}&token={token}"
            for role, token in tokens.items()
        }
        return {
            "id": state.id,
            "problems": len(state.problems),
            "student_url": urls["student"],
            "caregiver_url": urls["caregiver"],
            "student_token": tokens["student"],
            "caregiver_token": tokens["caregiver"],
        }

    def authorized(self, session_id: str, role: str | None, token: str | None) -> bool:
        return (
            session_id in self.tokens
            and role in ROLES
            and secrets.compare_digest(self.tokens[session_id].get(role, ""), token or "")
        )

    def register(self, session_id: str, role: str, websocket: WebSocket) -> None:
        self.sockets[session_id][role].append(websocket)

    def unregister(self, session_id: str, role: str, websocket: WebSocket) -> None:
        try:
            self.sockets[session_id][role].remove(websocket)
        except (KeyError, ValueError):
            pass

    async def submit(self, session_id: str, frame: dict) -> None:
        await self.queues[session_id].put(frame)

    async def _worker(self, session_id: str) -> None:
        queue = self.queues[session_id]
        while True:
            frame = await queue.get()
            out = self.engine.process(session_id, frame, at=self.clock())
            self.writer.append(out.records)
            await self._dispatch(session_id, out.outbound)
            for launch in out.launches:
                self._spawn(self._run_launch(launch))
            for due in out.timers:
                self._spawn(self._run_timer(session_id, due))

    def _spawn(self, coro) -> None:
        task = asyncio.get_running_loop().create_task(coro)
        self.side_tasks.add(task)
        task.add_done_callback(self.side_tasks.discard)

    async def _dispatch(
        self, session_id: str, outbound: list[tuple[tuple[str, ...], dict]]
    ) -> None:
        conns = self.sockets.get(session_id, {})
        for targets, frame in outbound:
            text = json.dumps(frame, ensure_ascii=False)
            for role in targets:
                for websocket in list(conns.get(role, [])):
                    try:
                        await websocket.send_text(text)
                    except Exception:
                        pass  # dead socket; the disconnect handler cleans it up

    async def _run_launch(self, launch: LaunchRequest) -> None:
        try:
            result = await asyncio.to_thread(self.generate_fn, launch.prompt)
            payload = {
                "launch_id": launch.launch_id,
                "ok": True,
                "text": result.text,
                "latency_ms": result.latency_ms,
                "model": result.model_name,
            }
        except Exception as exc:
            payload = {
                "launch_id": launch.launch_id,
                "ok": False,
                "error": type(exc).__name__,
                "detail": str(exc)[:200],
            }
        await self.submit(launch.session_id, {"type": "gateway_result", "payload": payload})

    async def _run_timer(self, session_id: str, due: float) -> None:
        delay = due - self.clock()
        if delay > 0:
            await asyncio.sleep(delay)
        await self.submit(session_id, {"type": "timer_fired", "payload": {"due": due}})

    def shutdown(self) -> None:
        for task in self.workers.values():
            task.cancel()
        for task in list(self.side_tasks):
            task.cancel()
        self.writer.close()


def create_app(settings: ServiceSettings) -> FastAPI:
    template = load_template(settings.template_id, settings.template_dir)
    engine = TutoringEngine(template, rate_limit_secs=settings.rate_limit_secs)
    writer = LogWriter(Path(settings.log_path))
    if settings.provider_mode == "mock":
        generate_fn: Callable[[str], GenerationResult] = MockProvider().generate
    else:
        llm = gateway.config_from_env(settings.llm)

        def generate_fn(prompt: str) -> GenerationResult:
            return gateway.generate(prompt, llm)

    hub = SessionHub(engine, writer, generate_fn)
    boot_hooks: list[Callable[[], None]] = []

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        for hook in boot_hooks:
            hook()
        yield
        hub.shutdown()

    app = FastAPI(title="ccst", docs_url=None, redoc_url=None, lifespan=lifespan)
    app.state.hub = hub
    app.state.settings = settings
    app.state.boot_hooks = boot_hooks

    @app.post("/api/sessions")
    async def create_session(body: dict):
        problems = body.get("problems")
        if not isinstance(problems, list) or not all(isinstance(p, str) for p in problems):
            return JSONResponse(
                {"detail": "body must carry a 'problems' list of equation strings"},
                status_code=400,
            )
        try:
            info = hub.create_session(problems, settings.public_url)
        except ProblemSetError as exc:
            return JSONResponse({"detail": str(exc)}, status_code=400)
        return info

    @app.post("/api/sessions/{session_id}/notify")
    async def notify(session_id: str):
        try:
            hub.engine.get_session(session_id)
        except SessionNotFound:
            return JSONResponse({"detail": f"no session {session_id}"}, status_code=404)
        token = hub.tokens[session_id]["caregiver"]
        join_url = (
            f"{settings.public_url}/ui/?session={session_id}&role=caregiver&token={token}"
        )
        try:
            receipt = await asyncio.to_thread(
                notify_caregiver, join_url, settings.notify_webhook
            )
        except DeliveryError as exc:
            return JSONResponse({"detail": str(exc)}, status_code=502)
        return {
            "channel": receipt.channel,
            "target": receipt.target,
            "delivered_at": receipt.delivered_at,
        }

    @app.get("/api/health")
    async def health():
        return {"status": "ok", "sessions": len(hub.engine.sessions)}

    @app.get("/api/schema/wire")
    async def wire_schema():
        raw = (
            resources.files("ccst")
            .joinpath("schema", "wire_messages.schema.json")
            .read_text(encoding="utf-8")
        )
        return JSONResponse(json.loads(raw))

    @app.websocket("/ws/{session_id}")
    async def session_socket(websocket: WebSocket, session_id: str):
        role = websocket.query_params.get("role")
        token = websocket.query_params.get("token")
        if not hub.authorized(session_id, role, token):
            await websocket.close(code=4403)
            return
        await websocket.accept()
        hub.register(session_id, role, websocket)
        await hub.submit(session_id, {"type": "join", "payload": {}, "role": role})
        try:
            while True:
                raw = await websocket.receive_text()
                try:
                    data = json.loads(raw)
                    if not isinstance(data, dict):
                        raise ValueError("frame must be an object")
                    kind = str(data.get("type"))[:40]
                except (json.JSONDecodeError, ValueError):
                    kind = "malformed"
                    data = {}
                frame = {"type": kind, "payload": data.get("payload") or {}, "role": role}
                await hub.submit(session_id, frame)
        except WebSocketDisconnect:
            hub.unregister(session_id, role, websocket)

    if settings.ui_dist and Path(settings.ui_dist).is_dir():
        app.mount(
            "/ui", StaticFiles(directory=settings.ui_dist, html=True), name="ui"
        )

    return app
