"""Append-only event log: one JSON line per record, gapless per session.

Every inbound event (client frames, gateway completions, timer firings,
session creation) and every outbound frame is recorded with one shared
per-session sequence, so a log can be replayed and compared byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

DIRECTIONS = ("inbound", "outbound")


class LogCorrupt(Exception):
    """The log file cannot be trusted: bad JSON, bad shape, or a sequence gap."""


@dataclass(frozen=True)
class EventRecord:
    timestamp: float
    session: str
    sequence: int
    direction: str
    frame: dict
    to: tuple[str, ...] = ()


def record_to_json(record: EventRecord) -> str:
    return json.dumps(
        {
            "timestamp": record.timestamp,
            "session": record.session,
            "sequence": record.sequence,
            "direction": record.direction,
            "frame": record.frame,
            "to": list(record.to),
        },
        ensure_ascii=False,
    )


def _record_from_json(line: str, line_number: int) -> EventRecord:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise LogCorrupt(f"line {line_number}: not valid JSON: {exc}") from exc
    try:
        record = EventRecord(
            timestamp=float(data["timestamp"]),
            session=str(data["session"]),
            sequence=int(data["sequence"]),
            direction=data["direction"],
            frame=data["frame"],
            to=tuple(data.get("to", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise LogCorrupt(f"line {line_number}: bad record shape: {exc}") from exc
    if record.direction not in DIRECTIONS:
        raise LogCorrupt(f"line {line_number}: bad direction {record.direction!r}")
    if not isinstance(record.frame, dict):
        raise LogCorrupt(f"line {line_number}: frame must be an object")
    return record


def read_records(path: Path | str) -> list[EventRecord]:
    """Load and validate a log file. Sequences must count 0,1,2,... per session."""
    records: list[EventRecord] = []
    counters: dict[str, int] = {}
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            record = _record_from_json(line, line_number)
            expected = counters.get(record.session, 0)
            if record.sequence != expected:
                raise LogCorrupt(
                    f"line {line_number}: session {record.session} expected "
                    f"sequence {expected}, found {record.sequence}"
                )
            counters[record.session] = expected + 1
            records.append(record)
    return records


@dataclass
class LogWriter:
    """Append records to a JSONL file, flushing each line."""

    path: Path
    _handle: IO[str] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.path = Path(self.path)

    def append(self, records: Iterable[EventRecord]) -> None:
        if self._handle is None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._handle = open(self.path, "a", encoding="utf-8")
        for record in records:
            self._handle.write(record_to_json(record) + "\n")
        self._handle.flush()

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None
