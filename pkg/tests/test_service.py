"""HTTP and WebSocket transport around the session engine."""

from __future__ import annotations

import json
from pathlib import Path

import httpx
import pytest
from fastapi.testclient import TestClient
from starlette.websockets import WebSocketDisconnect

from ccst.gateway import LLMConfig
from ccst.service.app import ServiceSettings, create_app
from ccst.service.notify import DeliveryError, notify_caregiver
from ccst.service.replay import replay


def make_app(tmp_path: Path, **overrides):
    settings = ServiceSettings(
        template_id=overrides.pop("template_id", 7),
        template_dir=None,
        rate_limit_secs=overrides.pop("rate_limit_secs", 30.0),
        llm=LLMConfig(),
        provider_mode="mock",
        notify_webhook=overrides.pop("notify_webhook", None),
        log_path=tmp_path / "events.jsonl",
        public_url="http://testserver",
        ui_dist=overrides.pop("ui_dist", None),
    )
    assert not overrides, overrides
    return create_app(settings), settings


def create_session(client: TestClient, problems: list[str]) -> dict:
    response = client.post("/api/sessions", json={"problems": problems})
    assert response.status_code == 200, response.text
    return response.json()


# --- HTTP API ----------------------------------------------------------------------


def test_session_creation_and_health(tmp_path: Path) -> None:
    app, _ = make_app(tmp_path)
    with TestClient(app) as client:
        info = create_session(client, ["1+x=3", "6x = 12"])
        assert info["problems"] == 2
        assert info["id"] in info["student_url"]
        assert "role=caregiver" in info["caregiver_url"]
        assert info["student_token"] != info["caregiver_token"]

        health = client.get("/api/health").json()
        assert health == {"status": "ok", "sessions": 1}


def test_session_creation_rejects_bad_input(tmp_path: Path) -> None:
    app, _ = make_app(tmp_path)
    with TestClient(app) as client:
        assert client.post("/api/sessions", json={}).status_code == 400
        assert (
            client.post("/api/sessions", json={"problems": "1+x=3"}).status_code
            == 400
        )
        response = client.post("/api/sessions", json={"problems": ["2x+"]})
        assert response.status_code == 400
        assert "problem 1" in response.json()["detail"]


def test_wire_schema_served(tmp_path: Path) -> None:
    app, _ = make_app(tmp_path)
    with TestClient(app) as client:
        schema = client.get("/api/schema/wire").json()
        assert schema["title"] == "WireMessage"
        types = schema["properties"]["type"]["enum"]
        for expected in (
            "join",
            "state_sync",
            "attempt",
            "attempt_result",
            "hint_request",
            "hint",
            "chat",
            "next_steps",
            "recommendations",
            "problem_advanced",
            "error",
        ):
            assert expected in types


# --- WebSocket flows ---------------------------------------------------------------


def test_websocket_rejects_bad_token(tmp_path: Path) -> None:
    app, _ = make_app(tmp_path)
    with TestClient(app) as client:
        info = create_session(client, ["1+x=3"])
        with pytest.raises(WebSocketDisconnect) as exc_info:
            with client.websocket_connect(
                f"/ws/{info['id']}?role=student&token=wrong"
            ):
                pass
        assert exc_info.value.code == 4403
        with pytest.raises(WebSocketDisconnect):
            with client.websocket_connect(
                f"/ws/{info['id']}?role=teacher&token={info['student_token']}"
            ):
                pass


def test_join_delivers_state_sync(tmp_path: Path) -> None:
    app, _ = make_app(tmp_path)
    with TestClient(app) as client:
        info = create_session(client, ["1+x=3"])
        with client.websocket_connect(
            f"/ws/{info['id']}?role=student&token={info['student_token']}"
        ) as ws:
            frame = json.loads(ws.receive_text())
            assert frame["type"] == "state_sync"
            assert frame["payload"]["question"] == "1+x = 3"
            assert frame["session"] == info["id"]


def test_attempt_flow_mirrors_to_caregiver(tmp_path: Path) -> None:
    app, _ = make_app(tmp_path)
    with TestClient(app) as client:
        info = create_session(client, ["2x+3 = 7"])
        student_ws = client.websocket_connect(
            f"/ws/{info['id']}?role=student&token={info['student_token']}"
        )
        caregiver_ws = client.websocket_connect(
            f"/ws/{info['id']}?role=caregiver&token={info['caregiver_token']}"
        )
        with student_ws as sws, caregiver_ws as cws:
            assert json.loads(sws.receive_text())["type"] == "state_sync"
            assert json.loads(cws.receive_text())["type"] == "state_sync"

            sws.send_text(
                json.dumps({"type": "attempt", "payload": {"text": "2x+3-3 = 7-3"}})
            )

            student_result = json.loads(sws.receive_text())
            assert student_result["type"] == "attempt_result"
            assert student_result["payload"]["accuracy"] == "correct"
            assert student_result["payload"]["matched_rule"] == "sub_both_const"

            caregiver_result = json.loads(cws.receive_text())
            assert caregiver_result["type"] == "attempt_result"
            assert caregiver_result["payload"] == student_result["payload"]

            next_steps = json.loads(cws.receive_text())
            assert next_steps["type"] == "next_steps"
            assert next_steps["payload"]["steps"][0] == (
                "Divide both sides by the coefficient of x, which is 2: "
                "(2x+3-3)/2 = (7-3)/2"
            )

            recommendations = json.loads(cws.receive_text())
            assert recommendations["type"] == "recommendations"
            assert len(recommendations["payload"]["items"]) == 3
            assert recommendations["payload"]["generated_by"] == "llm"
            assert recommendations["payload"]["context_class"] == "correct_attempt"


def test_chat_crosses_roles(tmp_path: Path) -> None:
    app, _ = make_app(tmp_path)
    with TestClient(app) as client:
        info = create_session(client, ["1+x=3"])
        with client.websocket_connect(
            f"/ws/{info['id']}?role=student&token={info['student_token']}"
        ) as sws, client.websocket_connect(
            f"/ws/{info['id']}?role=caregiver&token={info['caregiver_token']}"
        ) as cws:
            sws.receive_text()
            cws.receive_text()
            cws.send_text(
                json.dumps({"type": "chat", "payload": {"text": "need help?"}})
            )
            relayed = json.loads(sws.receive_text())
            assert relayed["type"] == "chat"
            assert relayed["payload"]["role"] == "caregiver"
            assert relayed["payload"]["text"] == "need help?"


def test_malformed_client_frame_yields_error(tmp_path: Path) -> None:
    app, _ = make_app(tmp_path)
    with TestClient(app) as client:
        info = create_session(client, ["1+x=3"])
        with client.websocket_connect(
            f"/ws/{info['id']}?role=student&token={info['student_token']}"
        ) as ws:
            ws.receive_text()
            ws.send_text("this is not json")
            frame = json.loads(ws.receive_text())
            assert frame["type"] == "error"
            assert frame["payload"]["code"] == "unknown_type"


def test_service_log_replays_identically(tmp_path: Path) -> None:
    app, settings = make_app(tmp_path)
    with TestClient(app) as client:
        info = create_session(client, ["1+x=3", "6x = 12"])
        with client.websocket_connect(
            f"/ws/{info['id']}?role=student&token={info['student_token']}"
        ) as ws:
            ws.receive_text()
            ws.send_text(json.dumps({"type": "attempt", "payload": {"text": "x = 2"}}))
            seen = set()
            while {"attempt_result", "problem_advanced"} - seen:
                seen.add(json.loads(ws.receive_text())["type"])
    result = replay(settings.log_path)
    assert result.identical is True
    assert result.records_checked > 0


# --- notify ------------------------------------------------------------------------


def test_notify_console_by_default(tmp_path: Path, capsys) -> None:
    app, _ = make_app(tmp_path)
    with TestClient(app) as client:
        info = create_session(client, ["1+x=3"])
        response = client.post(f"/api/sessions/{info['id']}/notify")
        assert response.status_code == 200
        body = response.json()
        assert body["channel"] == "console"
        assert body["target"] == "stdout"
        printed = capsys.readouterr().out
        assert "Join here" in printed
        assert info["caregiver_token"] in printed

        assert client.post("/api/sessions/nope/notify").status_code == 404


def test_notify_unreachable_webhook_is_a_gateway_error(tmp_path: Path) -> None:
    app, _ = make_app(tmp_path, notify_webhook="http://127.0.0.1:1/hook")
    with TestClient(app) as client:
        info = create_session(client, ["1+x=3"])
        response = client.post(f"/api/sessions/{info['id']}/notify")
        assert response.status_code == 502


def test_notify_caregiver_webhook_success() -> None:
    calls = []

    def fake_post(url, json=None, timeout=None):
        calls.append((url, json, timeout))
        return httpx.Response(200, request=httpx.Request("POST", url))

    receipt = notify_caregiver(
        "http://host/ui/?x=1", "http://hooks.local/h", post=fake_post, time_fn=lambda: 5.0
    )
    assert receipt.channel == "webhook"
    assert receipt.target == "http://hooks.local/h"
    assert receipt.delivered_at == 5.0
    url, body, timeout = calls[0]
    assert body["join_url"] == "http://host/ui/?x=1"
    assert timeout == 10


def test_notify_caregiver_webhook_failure() -> None:
    def flaky_post(url, json=None, timeout=None):
        return httpx.Response(500, request=httpx.Request("POST", url))

    with pytest.raises(DeliveryError):
        notify_caregiver("http://host/ui", "http://hooks.local/h", post=flaky_post)

    def down_post(url, json=None, timeout=None):
        raise httpx.ConnectError("refused")

    with pytest.raises(DeliveryError):
        notify_caregiver("http://host/ui", "http://hooks.local/h", post=down_post)


def test_notify_caregiver_console() -> None:
    lines = []
    receipt = notify_caregiver("http://host/ui/?s=1", None, console=lines.append)
    assert receipt.channel == "console"
    assert lines and "http://host/ui/?s=1" in lines[0]


# --- static UI mount ---------------------------------------------------------------


def test_ui_mount_when_dist_exists(tmp_path: Path) -> None:
    dist = tmp_path / "dist"
    dist.mkdir()
    (dist / "index.html").write_text("<!doctype html><title>ccst</title>")
    app, _ = make_app(tmp_path, ui_dist=dist)
    with TestClient(app) as client:
        response = client.get("/ui/")
        assert response.status_code == 200
        assert "ccst" in response.text
