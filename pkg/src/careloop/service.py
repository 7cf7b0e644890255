"""Live supervision endpoint: WebSocket snapshot stream + command intake.

All messages are JSON objects with a `type` field and a schema version:
outbound `hello` (session metadata, once per connection), `snapshot`
(one per tick), and `ack` (one per received command); inbound `command`
(a supervision command, optionally carrying a correlation id that is
echoed on the ack).  Field names are the contract; the JSON Schemas in
the repository's schemas/ directory describe every message.

The tick loop and all connection handling run on one asyncio loop, so
the controller's single-owner-thread model holds: commands are enqueued
on receipt and the controller applies them at the next tick boundary.
"""

from __future__ import annotations

import asyncio
import json
import time

from websockets.asyncio.server import serve

from .controller import Controller, SupervisionCommand
from .sim import Persona, PersonaState, persona_step, _token_pool

SCHEMA_VERSION = 1


def hello_message(controller: Controller, tick_period_ms: int) -> dict:
    return {
        "type": "hello",
        "v": SCHEMA_VERSION,
        "payload": {
            "session_id": controller.log.session_id,
            "robot_id": controller.robot_id,
            "scenario_id": controller.scenario.id,
            "scenarios": sorted(controller.scenario_catalog),
            "behaviors": sorted(controller.library.behaviors),
            "tick_period_ms": tick_period_ms,
        },
    }


def snapshot_message(snapshot) -> dict:
    return {"type": "snapshot", "v": SCHEMA_VERSION, "payload": snapshot.to_dict()}


def ack_message(ack, correlation_id: str | None = None) -> dict:
    payload = ack.to_dict()
    payload["correlation_id"] = correlation_id
    return {"type": "ack", "v": SCHEMA_VERSION, "payload": payload}


def error_message(message: str) -> dict:
    return {"type": "error", "v": SCHEMA_VERSION, "payload": {"message": message}}


def parse_command(raw: str) -> tuple[SupervisionCommand, str | None]:
    """Decode one inbound command message; raises ValueError on bad input."""
    data = json.loads(raw)
    if not isinstance(data, dict) or data.get("type") != "command":
        raise ValueError("expected a message with type 'command'")
    payload = data.get("payload")
    if not isinstance(payload, dict):
        raise ValueError("command message needs an object payload")
    cmd = SupervisionCommand(
        kind=str(payload.get("kind", "")),
        payload=dict(payload.get("payload") or {}),
    )
    correlation = payload.get("correlation_id")
    return cmd, None if correlation is None else str(correlation)


class SupervisionService:
    """Bridges one controller (and optionally a persona) to any number of clients."""

    def __init__(
        self,
        controller: Controller,
        persona: Persona | None = None,
        persona_seed: int = 0,
        tick_period_ms: int = 100,
        max_ticks: int | None = None,
    ):
        self.controller = controller
        self.persona = persona
        self.tick_period_ms = tick_period_ms
        self.max_ticks = max_ticks
        self.overruns = 0
        self._clients: set = set()
        self._persona_state = PersonaState(engagement=persona.base_engagement) if persona else None
        self._persona_rng = None
        if persona is not None:
            import random

            self._persona_rng = random.Random(f"persona-{persona_seed}")
        self._last_tag: str | None = None
        self._expected: str | None = controller.scenario_state.active_token
        self._token_pool = _token_pool(controller.scenario)

    async def _broadcast(self, message: dict) -> None:
        if not self._clients:
            return
        data = json.dumps(message, sort_keys=True)
        await asyncio.gather(*(c.send(data) for c in set(self._clients)), return_exceptions=True)

    async def _handle_client(self, websocket) -> None:
        self._clients.add(websocket)
        try:
            await websocket.send(
                json.dumps(hello_message(self.controller, self.tick_period_ms), sort_keys=True)
            )
            async for raw in websocket:
                try:
                    cmd, correlation = parse_command(raw)
                except (ValueError, KeyError) as exc:
                    await websocket.send(json.dumps(error_message(str(exc)), sort_keys=True))
                    continue
                ack = self.controller.handle_command(cmd)
                await websocket.send(json.dumps(ack_message(ack, correlation), sort_keys=True))
        finally:
            self._clients.discard(websocket)

    def _tick_records(self, tick: int):
        if self.persona is None or self._persona_rng is None:
            return []
        self._persona_state, records = persona_step(
            self.persona,
            self._persona_state,
            self._last_tag,
            self._persona_rng,
            tick,
            self.controller.robot_id,
            expected_token=self._expected,
            token_pool=self._token_pool,
        )
        return records

    async def _tick_loop(self) -> None:
        period = self.tick_period_ms / 1000.0
        ticks = 0
        while not self.controller.stopped:
            if self.max_ticks is not None and ticks >= self.max_ticks:
                self.controller.handle_command(SupervisionCommand(kind="stop"))
            started = time.monotonic()
            _, snapshot = self.controller.tick(self._tick_records(self.controller.tick_index))
            self._last_tag = snapshot.behavior_tag
            self._expected = snapshot.expected_token
            await self._broadcast(snapshot_message(snapshot))
            ticks += 1
            elapsed = time.monotonic() - started
            if elapsed > period:
                self.overruns += 1  # soft deadline: log and continue, never abort
            else:
                await asyncio.sleep(period - elapsed)

    async def run(self, host: str = "127.0.0.1", port: int = 8765) -> None:
        async with serve(self._handle_client, host, port):
            await self._tick_loop()
