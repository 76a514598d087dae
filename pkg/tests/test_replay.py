"""Event log format and deterministic replay."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from ccst.service.eventlog import (
    EventRecord,
    LogCorrupt,
    LogWriter,
    read_records,
    record_to_json,
)
from ccst.service.replay import replay

from harness import SessionHarness


def write_demo_log(path: Path, problems: list[str] | None = None) -> SessionHarness:
    h = SessionHarness(problems=problems or ["1+x=3", "6x = 12", "15 = -2x-5"])
    h.join("student", at=100.0)
    h.join("caregiver", at=101.0)
    h.chat("caregiver", "hey what do you need", at=102.0)
    h.attempt("x = 5", at=105.0)
    h.attempt("x = 2", at=110.0)
    h.hint(at=115.0)
    h.advance(140.0)
    writer = LogWriter(path)
    writer.append(h.records)
    writer.close()
    return h


# --- record format -----------------------------------------------------------------


def test_record_json_key_order() -> None:
    record = EventRecord(
        timestamp=1.5,
        session="abc",
        sequence=0,
        direction="outbound",
        frame={"session": "abc", "seq": 0, "type": "error", "payload": {}},
        to=("student",),
    )
    text = record_to_json(record)
    assert list(json.loads(text).keys()) == [
        "timestamp",
        "session",
        "sequence",
        "direction",
        "frame",
        "to",
    ]
    assert json.loads(text)["to"] == ["student"]


def test_read_records_round_trip(tmp_path: Path) -> None:
    path = tmp_path / "events.jsonl"
    h = write_demo_log(path)
    records = read_records(path)
    assert len(records) == len(h.records)
    assert [record_to_json(r) for r in records] == [
        record_to_json(r) for r in h.records
    ]


@pytest.mark.parametrize(
    "corruption",
    [
        "drop_middle_line",
        "bad_json",
        "bad_shape",
        "sequence_gap",
    ],
)
def test_read_records_rejects_corruption(tmp_path: Path, corruption: str) -> None:
    path = tmp_path / "events.jsonl"
    write_demo_log(path)
    lines = path.read_text().splitlines()
    if corruption == "drop_middle_line":
        del lines[4]
    elif corruption == "bad_json":
        lines[2] = "{truncated"
    elif corruption == "bad_shape":
        lines[3] = json.dumps({"timestamp": 1.0, "session": "x"})
    elif corruption == "sequence_gap":
        data = json.loads(lines[5])
        data["sequence"] = 99
        lines[5] = json.dumps(data)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(LogCorrupt):
        read_records(path)


# --- replay ------------------------------------------------------------------------


def test_replay_is_identical(tmp_path: Path) -> None:
    path = tmp_path / "events.jsonl"
    h = write_demo_log(path)
    result = replay(path)
    assert result.identical is True
    assert result.divergence is None
    assert result.records_checked == len(h.records)
    assert result.sessions == 1


def test_replay_detects_tampered_outbound(tmp_path: Path) -> None:
    path = tmp_path / "events.jsonl"
    write_demo_log(path)
    lines = path.read_text().splitlines()
    position = next(
        i
        for i, line in enumerate(lines)
        if json.loads(line)["direction"] == "outbound"
        and json.loads(line)["frame"]["type"] == "attempt_result"
    )
    data = json.loads(lines[position])
    data["frame"]["payload"]["feedback"] = "Perfect!"
    lines[position] = json.dumps(data, ensure_ascii=False)
    path.write_text("\n".join(lines) + "\n")

    result = replay(path)
    assert result.identical is False
    assert result.divergence is not None
    assert result.divergence.position == position
    assert "Perfect!" in result.divergence.expected
    assert "Perfect!" not in result.divergence.actual


def test_replay_detects_tampered_inbound(tmp_path: Path) -> None:
    path = tmp_path / "events.jsonl"
    write_demo_log(path)
    lines = path.read_text().splitlines()
    position = next(
        i
        for i, line in enumerate(lines)
        if json.loads(line)["direction"] == "inbound"
        and json.loads(line)["frame"]["type"] == "chat"
    )
    data = json.loads(lines[position])
    data["frame"]["payload"]["text"] = "something else entirely"
    lines[position] = json.dumps(data, ensure_ascii=False)
    path.write_text("\n".join(lines) + "\n")

    result = replay(path)
    assert result.identical is False
    # the divergence shows up when the relayed chat frame does not match
    assert result.divergence.position > position


def test_replay_requires_session_creation_first(tmp_path: Path) -> None:
    path = tmp_path / "events.jsonl"
    write_demo_log(path)
    lines = path.read_text().splitlines()
    del lines[0]  # session_created
    reindexed = []
    for line in lines:
        data = json.loads(line)
        data["sequence"] -= 1
        data["frame"]["seq"] -= 1
        reindexed.append(json.dumps(data, ensure_ascii=False))
    path.write_text("\n".join(reindexed) + "\n")
    with pytest.raises(LogCorrupt):
        replay(path)


def test_replay_handles_interleaved_sessions(tmp_path: Path) -> None:
    path = tmp_path / "events.jsonl"
    h1 = SessionHarness(problems=["1+x=3"])
    h2 = SessionHarness(problems=["6x = 12"])
    h1.chat("student", "one", at=10.0)
    h2.chat("student", "two", at=11.0)
    h1.attempt("x = 2", at=12.0)
    h2.attempt("x = 2", at=13.0)
    h1.advance(45.0)
    h2.advance(45.0)

    merged = sorted(h1.records + h2.records, key=lambda r: (r.timestamp, r.session, r.sequence))
    writer = LogWriter(path)
    writer.append(merged)
    writer.close()

    result = replay(path)
    assert result.identical is True
    assert result.sessions == 2
    assert result.records_checked == len(merged)
