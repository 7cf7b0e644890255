"""Scripted user personas and the closed-loop session runner.

Personas are deliberately thin difference equations, not child models:
internal engagement decays each tick, recovers when the robot executes a
re-engagement behavior, and gates gaze, touch, and task-answer emission.
Their purpose is desk-scale validation of controller properties, in
particular the comparison between full autonomy and a scripted operator
that issues prompts on a fixed schedule and never re-engages.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .affect import clamp
from .controller import Controller, ControllerMode, StateSnapshot, SupervisionCommand
from .memory import SessionLog
from .perception import Channel, RawSensorRecord
from .scenario import Scenario

DISTRACTORS = ("window", "door", "toy_shelf")


@dataclass(slots=True, frozen=True)
class Persona:
    persona_id: str
    base_engagement: float
    engagement_decay: float        # per-tick attention loss
    reengagement_response: float   # boost per executed re-engagement behavior
    response_accuracy: float
    response_latency: int          # ticks between hearing a prompt and answering
    noise_amplitude: float = 0.0
    gaze_confidence: float = 0.9
    touch_rate: float = 0.0

    def __post_init__(self) -> None:
        for name in ("base_engagement", "engagement_decay", "reengagement_response", "response_accuracy"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0,1], got {v}")
        if self.response_latency < 1:
            raise ValueError(f"response_latency must be >= 1, got {self.response_latency}")


@dataclass(slots=True, frozen=True)
class PersonaState:
    engagement: float
    answer_due: int | None = None


def load_persona(path: str | Path) -> Persona:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    return Persona(
        persona_id=str(raw.get("persona_id", Path(path).stem)),
        base_engagement=float(raw["base_engagement"]),
        engagement_decay=float(raw["engagement_decay"]),
        reengagement_response=float(raw["reengagement_response"]),
        response_accuracy=float(raw["response_accuracy"]),
        response_latency=int(raw["response_latency"]),
        noise_amplitude=float(raw.get("noise_amplitude", 0.0)),
        gaze_confidence=float(raw.get("gaze_confidence", 0.9)),
        touch_rate=float(raw.get("touch_rate", 0.0)),
    )


def load_woz_script(path: str | Path) -> list[tuple[int, SupervisionCommand]]:
    """Ordered (tick, command) pairs replayed through the supervision surface."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    script = [
        (int(entry["tick"]), SupervisionCommand(kind=str(entry["kind"]), payload=dict(entry.get("payload") or {})))
        for entry in (raw.get("commands") or ())
    ]
    script.sort(key=lambda pair: pair[0])
    return script


def _has_component(tag: str | None, prefix: str) -> bool:
    return tag is not None and any(part.startswith(prefix) for part in tag.split("+"))


def persona_step(
    persona: Persona,
    state: PersonaState,
    last_behavior_tag: str | None,
    rng: random.Random,
    tick: int,
    robot_id: str,
    expected_token: str | None = None,
    token_pool: tuple[str, ...] = (),
) -> tuple[PersonaState, list[RawSensorRecord]]:
    """Advance the persona one tick and emit its sensor records.

    Engagement update: e' = clamp01(e - decay + boost + noise), where the
    boost fires only when the last executed behavior carried a re-engagement
    component.  Gaze lands on the robot with probability e'; prompts are
    answered after the persona's latency, correctly with its accuracy, and
    only if it is attending at answer time.
    """
    boost = persona.reengagement_response if _has_component(last_behavior_tag, "reengage") else 0.0
    noise = rng.uniform(-persona.noise_amplitude, persona.noise_amplitude) if persona.noise_amplitude else 0.0
    engagement = clamp(state.engagement - persona.engagement_decay + boost + noise, 0.0, 1.0)

    records: list[RawSensorRecord] = []
    if rng.random() < engagement:
        gaze_target = robot_id
    else:
        gaze_target = rng.choice(DISTRACTORS)
    records.append(
        RawSensorRecord(tick=tick, channel=Channel.GAZE, payload=gaze_target, confidence=persona.gaze_confidence)
    )
    if persona.touch_rate and rng.random() < persona.touch_rate * engagement:
        records.append(RawSensorRecord(tick=tick, channel=Channel.TOUCH, payload="hand", confidence=0.9))

    answer_due = state.answer_due
    if _has_component(last_behavior_tag, "prompt_") and answer_due is None:
        answer_due = tick + persona.response_latency
    if answer_due is not None and tick >= answer_due:
        answer_due = None
        if expected_token is not None and rng.random() < engagement:
            if rng.random() < persona.response_accuracy:
                payload = expected_token
            else:
                wrong = [t for t in token_pool if t != expected_token] or [expected_token + "_no"]
                payload = rng.choice(wrong)
            records.append(
                RawSensorRecord(tick=tick, channel=Channel.TASK_INPUT, payload=payload, confidence=0.9)
            )

    return PersonaState(engagement=engagement, answer_due=answer_due), records


@dataclass(slots=True)
class SessionResult:
    log: SessionLog
    snapshots: list[StateSnapshot]
    persona_engagement: list[float] = field(default_factory=list)
    goal_reached: bool = False

    def mean_persona_engagement(self) -> float:
        if not self.persona_engagement:
            return 0.0
        return sum(self.persona_engagement) / len(self.persona_engagement)


def run_session(
    persona: Persona,
    controller: Controller,
    ticks: int,
    seed: int = 0,
    woz_script: list[tuple[int, SupervisionCommand]] | None = None,
    stop_at_goal: bool = True,
) -> SessionResult:
    """Run the persona and controller in lockstep.

    The persona owns its own seeded rng, independent of the controller's,
    so the controller side can be replayed from the log alone.  The loop
    ends at the tick budget, at the goal (unless disabled), or when a
    scripted stop command lands.
    """
    prng = random.Random(f"persona-{seed}")
    state = PersonaState(engagement=persona.base_engagement)
    token_pool = _token_pool(controller.scenario)
    script = list(woz_script or [])
    script_pos = 0

    result = SessionResult(log=controller.log, snapshots=[])
    last_tag: str | None = None
    expected: str | None = controller.scenario_state.active_token

    for t in range(ticks):
        while script_pos < len(script) and script[script_pos][0] <= t:
            controller.handle_command(script[script_pos][1])
            script_pos += 1
        state, records = persona_step(
            persona, state, last_tag, prng, t, controller.robot_id,
            expected_token=expected, token_pool=token_pool,
        )
        _, snapshot = controller.tick(records)
        result.snapshots.append(snapshot)
        result.persona_engagement.append(state.engagement)
        last_tag = snapshot.behavior_tag
        expected = snapshot.expected_token
        if snapshot.mode == ControllerMode.STOPPED.value:
            break
        if stop_at_goal and snapshot.goal_reached:
            result.goal_reached = True
            break
    result.goal_reached = result.goal_reached or (
        bool(result.snapshots) and result.snapshots[-1].goal_reached
    )
    return result


def _token_pool(scenario: Scenario) -> tuple[str, ...]:
    pool: list[str] = []
    for state in scenario.states.values():
        for token in state.tokens:
            if token not in pool:
                pool.append(token)
    return tuple(pool)


def replay_session(log: SessionLog, build_controller) -> SessionResult:
    """Re-run a logged session: same seed, same events, same commands.

    `build_controller` must construct a fresh controller configured as the
    original (the CLI passes the original construction arguments).  Returns
    the replayed result; callers compare behavior tags tick for tick.
    """
    controller: Controller = build_controller()
    by_tick: dict[int, list[RawSensorRecord]] = {}
    for rec in log.records:
        by_tick[rec.tick] = [RawSensorRecord.from_dict(e) for e in rec.events]
    commands: dict[int, list[SupervisionCommand]] = {}
    for tick, cmd in log.logged_commands():
        commands.setdefault(tick, []).append(
            SupervisionCommand(kind=cmd["kind"], payload=dict(cmd.get("payload") or {}))
        )

    result = SessionResult(log=controller.log, snapshots=[])
    for rec in log.records:
        for cmd in commands.get(rec.tick, ()):
            controller.handle_command(cmd)
        if controller.stopped:
            break
        _, snapshot = controller.tick(by_tick.get(rec.tick, []))
        result.snapshots.append(snapshot)
    return result
