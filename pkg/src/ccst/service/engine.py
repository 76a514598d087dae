"""Session engine: pure state machine, no sockets, no clock, no HTTP.

Every call takes the current time as an argument and returns the frames to
deliver, the generation requests to launch, and the timers to arm. Gateway
completions and timer firings come back in as inbound events, so a session
log contains everything needed to replay it deterministically.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field

from ..context import (
    ChatMsg,
    ContextClass,
    ContextSnapshot,
    ParseError,
    PromptTemplate,
    ROLES,
    assemble,
    classify,
    fallback,
    parse_recommendations,
    to_payload,
)
from ..equations import (
    CanonEq,
    Equation,
    EquationError,
    SolutionClass,
    canonicalize,
    is_solved,
    parse_equation,
    render,
    solve,
)
from .. import planner
from .eventlog import EventRecord

DEFAULT_RATE_LIMIT_SECS = 30.0
SUGGESTION_COUNT = 3

# client-originated frame types; everything else arriving inbound is internal
CLIENT_TYPES = ("join", "attempt", "hint_request", "chat")


class SessionNotFound(KeyError):
    pass


class ProblemSetError(ValueError):
    pass


def validate_problems(problems: list[str]) -> list[Equation]:
    """Parse a problem set, rejecting anything without a unique solution."""
    if not problems:
        raise ProblemSetError("a problem set needs at least one equation")
    parsed: list[Equation] = []
    for index, text in enumerate(problems):
        try:
            eq = parse_equation(text)
        except EquationError as exc:
            raise ProblemSetError(f"problem {index + 1} ({text!r}): {exc}") from exc
        if solve(canonicalize(eq)).kind != SolutionClass.UNIQUE:
            raise ProblemSetError(
                f"problem {index + 1} ({text!r}) has no unique solution"
            )
        parsed.append(eq)
    return parsed


@dataclass(frozen=True)
class LaunchRequest:
    """An LLM generation the adapter should run and feed back as gateway_result."""

    launch_id: str
    session_id: str
    prompt: str
    context_class: ContextClass
    template_id: int


@dataclass
class EngineOutput:
    records: list[EventRecord] = field(default_factory=list)
    outbound: list[tuple[tuple[str, ...], dict]] = field(default_factory=list)
    launches: list[LaunchRequest] = field(default_factory=list)
    timers: list[float] = field(default_factory=list)


@dataclass
class SessionState:
    id: str
    problems: list[Equation]
    canon: CanonEq
    display: Equation
    index: int = 0
    steps_so_far: list[dict] = field(default_factory=list)
    chat_history: list[ChatMsg] = field(default_factory=list)
    last_accuracy: str = "none"
    used_hint_since_last_gen: bool = False
    hint_cursor: int = 0
    last_generation_at: float | None = None
    pending_refresh: bool = False
    timer_due: float | None = None
    last_snapshot_payload: str | None = None
    launch_counter: int = 0
    pending_launches: dict[str, ContextClass] = field(default_factory=dict)
    seq: int = 0
    caregiver_joined: bool = False
    completed: bool = False


class TutoringEngine:
    def __init__(
        self,
        template: PromptTemplate,
        rate_limit_secs: float = DEFAULT_RATE_LIMIT_SECS,
    ):
        self.template = template
        self.rate_limit_secs = rate_limit_secs
        self.sessions: dict[str, SessionState] = {}

    # --- session lifecycle ---------------------------------------------------

    def create_session(
        self, problems: list[str], at: float, session_id: str | None = None
    ) -> tuple[SessionState, EngineOutput]:
        parsed = validate_problems(problems)
        sid = session_id or uuid.uuid4().hex[:12]
        if sid in self.sessions:
            raise ProblemSetError(f"session id {sid} already exists")
        state = SessionState(
            id=sid,
            problems=parsed,
            canon=canonicalize(parsed[0]),
            display=parsed[0],
        )
        self.sessions[sid] = state
        out = EngineOutput()
        self._record_inbound(
            state,
            {
                "session": sid,
                "seq": state.seq,
                "type": "session_created",
                "payload": {
                    "problems": list(problems),
                    "template_id": self.template.id,
                    "rate_limit_secs": self.rate_limit_secs,
                },
            },
            at,
            out,
        )
        return state, out

    def get_session(self, session_id: str) -> SessionState:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise SessionNotFound(session_id) from None

    # --- event processing ----------------------------------------------------

    def process(self, session_id: str, frame: dict, at: float) -> EngineOutput:
        """Apply one inbound event. Returns frames to send and effects to run."""
        state = self.get_session(session_id)
        kind = frame.get("type")
        payload = frame.get("payload") or {}
        role = frame.get("role")
        out = EngineOutput()
        normalized = {
            "session": state.id,
            "seq": state.seq,
            "type": kind,
            "payload": payload,
        }
        if role is not None:
            normalized["role"] = role
        self._record_inbound(state, normalized, at, out)

        if kind == "join":
            self._on_join(state, role, at, out)
        elif kind == "attempt":
            self._on_attempt(state, role, payload, at, out)
        elif kind == "hint_request":
            self._on_hint_request(state, role, payload, at, out)
        elif kind == "chat":
            self._on_chat(state, role, payload, at, out)
        elif kind == "gateway_result":
            self._on_gateway_result(state, payload, at, out)
        elif kind == "timer_fired":
            self._on_timer_fired(state, payload, at, out)
        else:
            self._emit_error(state, role, "unknown_type", f"unknown frame type {kind!r}", at, out)
        return out

    # --- handlers --------------------------------------------------------------

    def _on_join(self, state: SessionState, role: str | None, at: float, out: EngineOutput) -> None:
        if role not in ROLES:
            self._emit_error(state, role, "bad_role", f"role must be one of {ROLES}", at, out)
            return
        if role == "caregiver":
            state.caregiver_joined = True
        self._emit(state, (role,), "state_sync", self._sync_payload(state), at, out)

    def _on_attempt(
        self, state: SessionState, role: str | None, payload: dict, at: float, out: EngineOutput
    ) -> None:
        if role != "student":
            self._emit_error(state, role, "wrong_role", "only the student submits steps", at, out)
            return
        text = payload.get("text")
        if not isinstance(text, str) or not text.strip():
            self._emit_error(state, role, "bad_request", "attempt needs a text field", at, out)
            return
        if state.completed:
            self._emit_error(state, role, "session_complete", "all problems are solved", at, out)
            return

        grade = planner.grade_attempt(state.canon, text, display=state.display)
        accuracy = grade.accuracy.value
        state.steps_so_far.append(
            {"text": text, "accuracy": accuracy, "feedback": grade.feedback}
        )
        self._emit(
            state,
            ("student", "caregiver"),
            "attempt_result",
            {
                "text": text,
                "accuracy": accuracy,
                "feedback": grade.feedback,
                "matched_rule": grade.matched_rule.kind.value if grade.matched_rule else None,
                "buggy_rule": grade.buggy_rule.kind.value if grade.buggy_rule else None,
            },
            at,
            out,
        )
        if accuracy == "correct":
            attempt_eq = parse_equation(text)
            state.display = attempt_eq
            state.canon = canonicalize(attempt_eq)
            if is_solved(state.display):
                self._advance_problem(state, at, out)
        state.last_accuracy = accuracy
        self._emit(
            state, ("caregiver",), "next_steps", {"steps": self._next_step_texts(state)}, at, out
        )
        self._maybe_generate(state, at, out)

    def _advance_problem(self, state: SessionState, at: float, out: EngineOutput) -> None:
        state.index += 1
        state.hint_cursor = 0
        if state.index < len(state.problems):
            state.display = state.problems[state.index]
            state.canon = canonicalize(state.display)
            new_question = render(state.display)
        else:
            state.completed = True
            new_question = None
        self._emit(
            state,
            ("student", "caregiver"),
            "problem_advanced",
            {"new_question": new_question, "index": state.index},
            at,
            out,
        )

    def _on_hint_request(
        self, state: SessionState, role: str | None, payload: dict, at: float, out: EngineOutput
    ) -> None:
        if role != "student":
            self._emit_error(state, role, "wrong_role", "only the student requests hints", at, out)
            return
        if state.completed or planner.is_solved_canon(state.canon):
            self._emit_error(state, role, "already_solved", "the equation is already solved", at, out)
            return
        level = payload.get("level")
        if level is None:
            level = min(state.hint_cursor + 1, 3)
        if level not in (1, 2, 3):
            self._emit_error(state, role, "bad_request", "hint level must be 1..3", at, out)
            return
        state.hint_cursor = level
        hint = planner.hint(state.canon, level, display=state.display)
        state.used_hint_since_last_gen = True
        self._emit(
            state,
            ("student", "caregiver"),
            "hint",
            {"level": hint.level, "text": hint.text},
            at,
            out,
        )
        self._maybe_generate(state, at, out)

    def _on_chat(
        self, state: SessionState, role: str | None, payload: dict, at: float, out: EngineOutput
    ) -> None:
        if role not in ROLES:
            self._emit_error(state, role, "bad_role", f"role must be one of {ROLES}", at, out)
            return
        text = payload.get("text")
        if not isinstance(text, str) or not text.strip():
            self._emit_error(state, role, "bad_request", "chat needs a text field", at, out)
            return
        text = text.strip()
        state.chat_history.append(ChatMsg(role, text, int(at * 1000)))
        other = "caregiver" if role == "student" else "student"
        self._emit(
            state, (other,), "chat", {"role": role, "text": text, "ts": int(at * 1000)}, at, out
        )
        self._maybe_generate(state, at, out)

    def _on_gateway_result(
        self, state: SessionState, payload: dict, at: float, out: EngineOutput
    ) -> None:
        launch_id = payload.get("launch_id")
        cls = state.pending_launches.pop(launch_id, None)
        if cls is None:
            return  # a completion for a launch this session never made
        items: list[dict]
        if payload.get("ok"):
            try:
                recs = parse_recommendations(payload.get("text", ""))
                generated_by = "llm"
            except ParseError:
                recs = fallback(cls)
                generated_by = "fallback"
        else:
            recs = fallback(cls)
            generated_by = "fallback"
        items = [{"tag": rec.tag, "body": rec.body} for rec in recs]
        self._emit(
            state,
            ("caregiver",),
            "recommendations",
            {"items": items, "generated_by": generated_by, "context_class": cls.value},
            at,
            out,
        )

    def _on_timer_fired(self, state: SessionState, payload: dict, at: float, out: EngineOutput) -> None:
        due = payload.get("due")
        if state.timer_due is None or due != state.timer_due:
            return  # stale timer from an earlier window
        state.timer_due = None
        if not state.pending_refresh or state.last_generation_at is None:
            return
        if at - state.last_generation_at < self.rate_limit_secs:
            state.timer_due = state.last_generation_at + self.rate_limit_secs
            out.timers.append(state.timer_due)
            return
        snapshot = self._make_snapshot(state)
        if to_payload(snapshot) == state.last_snapshot_payload:
            state.pending_refresh = False
            return
        self._launch(state, snapshot, at, out)

    # --- generation ------------------------------------------------------------

    def _maybe_generate(self, state: SessionState, at: float, out: EngineOutput) -> None:
        if (
            state.last_generation_at is None
            or at - state.last_generation_at >= self.rate_limit_secs
        ):
            self._launch(state, self._make_snapshot(state), at, out)
            return
        state.pending_refresh = True
        due = state.last_generation_at + self.rate_limit_secs
        if state.timer_due != due:
            state.timer_due = due
            out.timers.append(due)

    def _launch(
        self, state: SessionState, snapshot: ContextSnapshot, at: float, out: EngineOutput
    ) -> None:
        cls = classify(snapshot)
        prompt = assemble(self.template, snapshot)
        launch_id = f"{state.id}-g{state.launch_counter}"
        state.launch_counter += 1
        state.pending_launches[launch_id] = cls
        state.last_generation_at = at
        state.pending_refresh = False
        state.used_hint_since_last_gen = False
        state.last_snapshot_payload = to_payload(snapshot)
        out.launches.append(
            LaunchRequest(launch_id, state.id, prompt, cls, self.template.id)
        )

    def _make_snapshot(self, state: SessionState) -> ContextSnapshot:
        return ContextSnapshot(
            question=render(state.display),
            next_steps=tuple(self._next_step_texts(state)),
            used_hint=state.used_hint_since_last_gen,
            accuracy=state.last_accuracy,
            chat_history=tuple(state.chat_history),
        )

    def _next_step_texts(self, state: SessionState) -> list[str]:
        if state.completed or planner.is_solved_canon(state.canon):
            return []
        suggestions = planner.next_steps(state.canon, k=SUGGESTION_COUNT, display=state.display)
        return [s.text for s in suggestions]

    # --- frame plumbing ----------------------------------------------------------

    def _sync_payload(self, state: SessionState) -> dict:
        return {
            "question": None if state.completed else render(state.display),
            "index": state.index,
            "total": len(state.problems),
            "steps": list(state.steps_so_far),
            "chat": [
                {"role": m.role, "text": m.text, "ts": m.timestamp}
                for m in state.chat_history
            ],
            "last_accuracy": state.last_accuracy,
            "caregiver_joined": state.caregiver_joined,
            "completed": state.completed,
        }

    def _record_inbound(self, state: SessionState, frame: dict, at: float, out: EngineOutput) -> None:
        out.records.append(
            EventRecord(
                timestamp=at,
                session=state.id,
                sequence=state.seq,
                direction="inbound",
                frame=frame,
            )
        )
        state.seq += 1

    def _emit(
        self,
        state: SessionState,
        targets: tuple[str, ...],
        kind: str,
        payload: dict,
        at: float,
        out: EngineOutput,
    ) -> None:
        frame = {"session": state.id, "seq": state.seq, "type": kind, "payload": payload}
        out.records.append(
            EventRecord(
                timestamp=at,
                session=state.id,
                sequence=state.seq,
                direction="outbound",
                frame=frame,
                to=targets,
            )
        )
        state.seq += 1
        out.outbound.append((targets, frame))

    def _emit_error(
        self,
        state: SessionState,
        role: str | None,
        code: str,
        detail: str,
        at: float,
        out: EngineOutput,
    ) -> None:
        target = role if role in ROLES else "student"
        self._emit(state, (target,), "error", {"code": code, "detail": detail}, at, out)
