"""Deterministic replay: drive a fresh engine with a log's inbound events
and check that it reproduces the logged record stream byte for byte."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..context import load_template
from .engine import TutoringEngine
from .eventlog import EventRecord, LogCorrupt, read_records, record_to_json


@dataclass(frozen=True)
class Divergence:
    position: int  # index into the original record list
    expected: str  # original record, serialized
    actual: str | None  # replayed record, or None when the replay fell short


@dataclass(frozen=True)
class ReplayResult:
    identical: bool
    records_checked: int
    sessions: int
    divergence: Divergence | None = None


def replay(path: Path | str, template_dir: Path | str | None = None) -> ReplayResult:
    """Re-run a log and compare. Raises LogCorrupt on unusable input."""
    original = read_records(path)
    engines: dict[str, TutoringEngine] = {}
    replayed: list[EventRecord] = []
    for record in original:
        if record.direction != "inbound":
            continue
        frame = record.frame
        if frame.get("type") == "session_created":
            payload = frame.get("payload") or {}
            try:
                template = load_template(int(payload["template_id"]), template_dir)
                engine = TutoringEngine(template, float(payload["rate_limit_secs"]))
                _, out = engine.create_session(
                    list(payload["problems"]), at=record.timestamp, session_id=record.session
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise LogCorrupt(f"bad session_created record: {exc}") from exc
            engines[record.session] = engine
        else:
            engine = engines.get(record.session)
            if engine is None:
                raise LogCorrupt(f"session {record.session} has events before creation")
            out = engine.process(record.session, frame, at=record.timestamp)
        replayed.extend(out.records)

    checked = min(len(original), len(replayed))
    for index in range(checked):
        expected = record_to_json(original[index])
        actual = record_to_json(replayed[index])
        if expected != actual:
            return ReplayResult(
                False, checked, len(engines), Divergence(index, expected, actual)
            )
    if len(replayed) != len(original):
        position = checked
        expected = (
            record_to_json(original[position]) if position < len(original) else "(end of log)"
        )
        actual = record_to_json(replayed[position]) if position < len(replayed) else None
        return ReplayResult(False, checked, len(engines), Divergence(position, expected, actual))
    return ReplayResult(True, len(original), len(engines))
