import asyncio
import json
from pathlib import Path

import jsonschema
import pytest

from careloop import config
from careloop.controller import Ack, ControllerMode
from careloop.service import (
    SupervisionService,
    ack_message,
    error_message,
    hello_message,
    parse_command,
    snapshot_message,
)

ROOT = Path(__file__).resolve().parent.parent
SCHEMAS = {
    p.stem.replace(".schema", ""): json.loads(p.read_text())
    for p in (ROOT / "schemas").glob("*.schema.json")
}


def validate(message: dict) -> None:
    schema = SCHEMAS[message["type"]]
    jsonschema.validate(message, schema)


@pytest.fixture()
def controller():
    assets = config.load_assets("turn_taking", "probo_like")
    return config.build_controller(assets, seed=4)


class TestMessages:
    def test_hello_validates(self, controller):
        validate(hello_message(controller, 100))

    def test_snapshot_stream_validates(self, controller):
        for t in range(40):
            _, snap = controller.tick([])
            validate(snapshot_message(snap))

    def test_ack_validates(self):
        validate(ack_message(Ack(kind="stop", accepted=True), "c1"))
        validate(ack_message(Ack(kind="approve", accepted=False, reason="nope"), None))

    def test_error_validates(self):
        validate(error_message("malformed message"))

    def test_parse_command_round_trip(self):
        raw = json.dumps(
            {"type": "command", "v": 1, "payload": {"kind": "set_difficulty", "payload": {"index": 2}, "correlation_id": "c9"}}
        )
        cmd, correlation = parse_command(raw)
        assert cmd.kind == "set_difficulty" and cmd.payload == {"index": 2}
        assert correlation == "c9"

    def test_parse_command_rejects_garbage(self):
        with pytest.raises(ValueError):
            parse_command(json.dumps({"type": "snapshot"}))
        with pytest.raises(ValueError):
            parse_command(json.dumps({"type": "command", "payload": "stop"}))
        with pytest.raises(ValueError):
            parse_command(json.dumps({"type": "command", "payload": {"kind": "explode"}}))


class TestFixtures:
    def test_snapshot_fixture_validates(self):
        path = ROOT / "schemas" / "fixtures" / "snapshots.jsonl"
        lines = path.read_text().strip().splitlines()
        assert len(lines) > 10
        types = set()
        for line in lines:
            message = json.loads(line)
            validate(message)
            types.add(message["type"])
        assert types == {"hello", "snapshot"}

    def test_command_fixture_covers_all_ten_kinds(self):
        path = ROOT / "schemas" / "fixtures" / "commands.jsonl"
        kinds = []
        for line in path.read_text().strip().splitlines():
            message = json.loads(line)
            validate(message)
            kinds.append(message["payload"]["kind"])
        assert sorted(kinds) == sorted(
            [
                "select_scenario", "start", "pause", "resume", "stop",
                "set_mode", "approve", "deny", "override_behavior", "set_difficulty",
            ]
        )

    def test_fixture_is_deterministic_output(self):
        import subprocess
        import sys

        before = (ROOT / "schemas" / "fixtures" / "snapshots.jsonl").read_bytes()
        subprocess.run(
            [sys.executable, str(ROOT / "scripts" / "record_fixtures.py")],
            check=True,
            capture_output=True,
        )
        after = (ROOT / "schemas" / "fixtures" / "snapshots.jsonl").read_bytes()
        assert before == after


class TestLiveEndpoint:
    def test_websocket_round_trip(self, controller):
        async def scenario() -> None:
            import websockets

            service = SupervisionService(controller, tick_period_ms=5, max_ticks=200)
            server_task = asyncio.create_task(service.run(host="127.0.0.1", port=8901))
            await asyncio.sleep(0.1)
            try:
                async with websockets.connect("ws://127.0.0.1:8901") as ws:
                    hello = json.loads(await ws.recv())
                    assert hello["type"] == "hello"
                    validate(hello)
                    assert "turn_taking" in hello["payload"]["scenarios"]

                    snap = json.loads(await ws.recv())
                    assert snap["type"] == "snapshot"
                    validate(snap)

                    await ws.send(json.dumps({
                        "type": "command", "v": 1,
                        "payload": {"kind": "pause", "correlation_id": "t1"},
                    }))
                    ack = None
                    for _ in range(20):
                        message = json.loads(await ws.recv())
                        validate(message)
                        if message["type"] == "ack":
                            ack = message
                            break
                    assert ack is not None
                    assert ack["payload"]["kind"] == "pause"
                    assert ack["payload"]["accepted"] is True
                    assert ack["payload"]["correlation_id"] == "t1"

                    await ws.send(json.dumps({"type": "command", "v": 1, "payload": {"kind": "stop"}}))
                    saw_stopped = False
                    for _ in range(40):
                        try:
                            message = json.loads(await asyncio.wait_for(ws.recv(), timeout=1.0))
                        except (asyncio.TimeoutError, Exception):
                            break
                        if message["type"] == "snapshot" and message["payload"]["mode"] == "stopped":
                            saw_stopped = True
                            break
                    assert saw_stopped
            finally:
                await asyncio.wait_for(server_task, timeout=5.0)

        asyncio.run(scenario())
