"""Regenerate the shared protocol fixtures under schemas/fixtures/.

The frontend test suite replays these against its own validators, so the
files must only change when the protocol changes.  Deterministic: a fixed
seed, persona, and scenario.
"""

from __future__ import annotations

import json
from pathlib import Path

from careloop import config, sim
from careloop.controller import ControllerMode
from careloop.service import SCHEMA_VERSION, hello_message, snapshot_message

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "schemas" / "fixtures"

EXAMPLE_COMMANDS = [
    {"kind": "select_scenario", "payload": {"scenario": "joint_attention"}},
    {"kind": "start", "payload": {}},
    {"kind": "pause", "payload": {}},
    {"kind": "resume", "payload": {}},
    {"kind": "set_mode", "payload": {"mode": "approval"}},
    {"kind": "approve", "payload": {"id": "q1"}},
    {"kind": "deny", "payload": {"id": "q2"}},
    {"kind": "override_behavior", "payload": {"tag": "greet_wave"}},
    {"kind": "set_difficulty", "payload": {"index": 1}},
    {"kind": "stop", "payload": {}},
]


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    assets = config.load_assets("turn_taking", "probo_like")
    controller = config.build_controller(assets, seed=7, mode=ControllerMode.APPROVAL, session_id="fixture")
    persona = sim.load_persona(config.data_path("personas", "responsive.yaml"))
    result = sim.run_session(persona, controller, ticks=40, seed=7, stop_at_goal=False)

    with open(FIXTURES / "snapshots.jsonl", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(hello_message(controller, 100), sort_keys=True) + "\n")
        for snap in result.snapshots:
            fh.write(json.dumps(snapshot_message(snap), sort_keys=True) + "\n")

    with open(FIXTURES / "commands.jsonl", "w", encoding="utf-8") as fh:
        for i, payload in enumerate(EXAMPLE_COMMANDS):
            message = {
                "type": "command",
                "v": SCHEMA_VERSION,
                "payload": {**payload, "correlation_id": f"c{i}"},
            }
            fh.write(json.dumps(message, sort_keys=True) + "\n")

    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
