"""Drive a TutoringEngine with a logical clock, no sockets or threads.

The harness plays the role the transport layer plays in production: it
feeds frames in, resolves generation launches through a provider
callable, keeps a pending-timer list, and collects every outbound
frame. Timestamps are plain floats supplied by the test.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from ccst.context import load_template
from ccst.gateway import GenerationResult, MockProvider
from ccst.service.engine import EngineOutput, LaunchRequest, TutoringEngine
from ccst.service.eventlog import EventRecord


@dataclass
class SessionHarness:
    problems: list[str]
    template_id: int = 7
    rate_limit_secs: float = 30.0
    generate: Callable[[str], GenerationResult] | None = None
    template_dir: str | None = None

    engine: TutoringEngine = field(init=False)
    session_id: str = field(init=False)
    records: list[EventRecord] = field(init=False, default_factory=list)
    outbox: list[tuple[tuple[str, ...], dict]] = field(init=False, default_factory=list)
    launches: list[LaunchRequest] = field(init=False, default_factory=list)
    pending_timers: list[float] = field(init=False, default_factory=list)
    now: float = field(init=False, default=0.0)

    def __post_init__(self) -> None:
        self.engine = TutoringEngine(
            load_template(self.template_id, self.template_dir),
            rate_limit_secs=self.rate_limit_secs,
        )
        if self.generate is None:
            self.generate = MockProvider().generate
        state, out = self.engine.create_session(self.problems, self.now)
        self.session_id = state.id
        self._absorb(out)

    @property
    def state(self):
        return self.engine.sessions[self.session_id]

    def _absorb(self, out: EngineOutput) -> None:
        self.records.extend(out.records)
        self.outbox.extend(out.outbound)
        self.pending_timers.extend(out.timers)
        for launch in out.launches:
            self.launches.append(launch)
            self._resolve(launch)

    def _resolve(self, launch: LaunchRequest) -> None:
        """Complete a launch the way the transport worker does."""
        try:
            result = self.generate(launch.prompt)
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
        self.submit("gateway_result", payload)

    def submit(self, type_: str, payload: dict, role: str | None = None,
               at: float | None = None) -> EngineOutput:
        if at is not None:
            self.now = at
        frame = {"session": self.session_id, "seq": 0, "type": type_, "payload": payload}
        if role is not None:
            frame["role"] = role
        out = self.engine.process(self.session_id, frame, self.now)
        self._absorb(out)
        return out

    def advance(self, to: float) -> None:
        """Move the clock forward, firing any timers that come due."""
        while True:
            due = [t for t in self.pending_timers if t <= to]
            if not due:
                break
            next_due = min(due)
            self.pending_timers = [t for t in self.pending_timers if t != next_due]
            self.now = max(self.now, next_due)
            self.submit("timer_fired", {"due": next_due})
        self.now = max(self.now, to)

    def frames(self, type_: str | None = None, to: str | None = None) -> list[dict]:
        found = []
        for targets, frame in self.outbox:
            if type_ is not None and frame["type"] != type_:
                continue
            if to is not None and to not in targets:
                continue
            found.append(frame)
        return found

    def join(self, role: str, at: float | None = None) -> EngineOutput:
        return self.submit("join", {}, role=role, at=at)

    def attempt(self, text: str, at: float | None = None) -> EngineOutput:
        return self.submit("attempt", {"text": text}, role="student", at=at)

    def chat(self, role: str, text: str, at: float | None = None) -> EngineOutput:
        return self.submit("chat", {"text": text}, role=role, at=at)

    def hint(self, level: int | None = None, at: float | None = None) -> EngineOutput:
        payload = {} if level is None else {"level": level}
        return self.submit("hint_request", payload, role="student", at=at)
