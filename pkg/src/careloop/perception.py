"""Sensor interpretation and engagement estimation.

Raw sensor records (replayed from file or produced by the simulation
harness) are interpreted into typed interaction events.  A windowed
weighted sum over recent events yields a single global engagement
estimate in [0, 1].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence


class Channel(str, Enum):
    GAZE = "gaze"
    TOUCH = "touch"
    AUDIO = "audio"
    TASK_INPUT = "task_input"


class EventKind(str, Enum):
    GAZE_ON_ROBOT = "GazeOnRobot"
    GAZE_AWAY = "GazeAway"
    TOUCH_ROBOT = "TouchRobot"
    UTTERANCE_HEARD = "UtteranceHeard"
    TASK_RESPONSE_CORRECT = "TaskResponseCorrect"
    TASK_RESPONSE_WRONG = "TaskResponseWrong"
    TASK_RESPONSE_NONE = "TaskResponseNone"


GAZE_KINDS = frozenset({EventKind.GAZE_ON_ROBOT, EventKind.GAZE_AWAY})
RESPONSE_KINDS = frozenset(
    {
        EventKind.TASK_RESPONSE_CORRECT,
        EventKind.TASK_RESPONSE_WRONG,
        EventKind.TASK_RESPONSE_NONE,
    }
)


@dataclass(slots=True, frozen=True)
class RawSensorRecord:
    """One line of sensor input: a channel, a payload, and a confidence."""

    tick: int
    channel: Channel
    payload: str
    confidence: float

    def __post_init__(self) -> None:
        if self.tick < 0:
            raise ValueError(f"tick must be >= 0, got {self.tick}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0,1], got {self.confidence}")

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "channel": self.channel.value,
            "payload": self.payload,
            "confidence": self.confidence,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RawSensorRecord":
        return cls(
            tick=int(d["tick"]),
            channel=Channel(d["channel"]),
            payload=str(d["payload"]),
            confidence=float(d["confidence"]),
        )


@dataclass(slots=True, frozen=True)
class InteractionEvent:
    tick: int
    kind: EventKind
    confidence: float

    def to_dict(self) -> dict:
        return {"tick": self.tick, "kind": self.kind.value, "confidence": self.confidence}

    @classmethod
    def from_dict(cls, d: dict) -> "InteractionEvent":
        return cls(tick=int(d["tick"]), kind=EventKind(d["kind"]), confidence=float(d["confidence"]))


@dataclass(slots=True)
class EngagementEstimate:
    value: float
    window_ticks: int
    components: dict[str, float] = field(default_factory=dict)


@dataclass(slots=True, frozen=True)
class PerceptionConfig:
    """Interpretation and engagement parameters.

    Scenario files may override any of these; the defaults below are the
    framework-wide baseline.
    """

    confidence_floor: float = 0.2
    gaze_weight: float = 0.4
    response_weight: float = 0.4
    touch_weight: float = 0.2
    window_ticks: int = 50


DEFAULT_PERCEPTION = PerceptionConfig()


class RejectedRecordError(ValueError):
    """Raised for records on an unknown channel; callers log and continue."""


def interpret(
    record: RawSensorRecord,
    robot_id: str,
    expected_token: str | None = None,
    config: PerceptionConfig = DEFAULT_PERCEPTION,
) -> InteractionEvent | None:
    """Map one raw record to an interaction event.

    Pure: the same (record, robot_id, expected_token) always yields the
    same event.  Records below the confidence floor yield None.  Task
    input is scored against the currently expected token; with no token
    active, unsolicited task input yields no event.  An empty task
    payload is an explicit non-response.
    """
    if not isinstance(record.channel, Channel):
        raise RejectedRecordError(f"unknown channel: {record.channel!r}")
    if record.confidence < config.confidence_floor:
        return None

    if record.channel is Channel.GAZE:
        kind = EventKind.GAZE_ON_ROBOT if record.payload == robot_id else EventKind.GAZE_AWAY
    elif record.channel is Channel.TOUCH:
        kind = EventKind.TOUCH_ROBOT
    elif record.channel is Channel.AUDIO:
        kind = EventKind.UTTERANCE_HEARD
    elif record.channel is Channel.TASK_INPUT:
        if record.payload == "":
            kind = EventKind.TASK_RESPONSE_NONE
        elif expected_token is None:
            return None
        elif record.payload == expected_token:
            kind = EventKind.TASK_RESPONSE_CORRECT
        else:
            kind = EventKind.TASK_RESPONSE_WRONG
    else:  # pragma: no cover - Channel is closed, kept for corrupt input
        raise RejectedRecordError(f"unknown channel: {record.channel!r}")

    return InteractionEvent(tick=record.tick, kind=kind, confidence=record.confidence)


def estimate_engagement(
    events: Sequence[InteractionEvent],
    now: int,
    window: int | None = None,
    config: PerceptionConfig = DEFAULT_PERCEPTION,
) -> EngagementEstimate:
    """Weighted gaze/response/touch engagement over the trailing window.

    Ratios with no supporting events default to a neutral 0.5 so that a
    silent session start is not scored as disengagement.  The window
    covers ticks in (now - window, now].
    """
    if window is None:
        window = config.window_ticks
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")

    gaze_on = gaze_off = 0
    correct = wrong = none = 0
    touched = False
    for ev in events:
        if not (now - window < ev.tick <= now):
            continue
        if ev.kind is EventKind.GAZE_ON_ROBOT:
            gaze_on += 1
        elif ev.kind is EventKind.GAZE_AWAY:
            gaze_off += 1
        elif ev.kind is EventKind.TASK_RESPONSE_CORRECT:
            correct += 1
        elif ev.kind is EventKind.TASK_RESPONSE_WRONG:
            wrong += 1
        elif ev.kind is EventKind.TASK_RESPONSE_NONE:
            none += 1
        elif ev.kind is EventKind.TOUCH_ROBOT:
            touched = True

    gaze_ratio = gaze_on / (gaze_on + gaze_off) if (gaze_on + gaze_off) else 0.5
    scored = correct + wrong + none
    response_ratio = correct / scored if scored else 0.5
    touch_indicator = 1.0 if touched else 0.0

    components = {
        "gaze": config.gaze_weight * gaze_ratio,
        "response": config.response_weight * response_ratio,
        "touch": config.touch_weight * touch_indicator,
    }
    value = min(1.0, max(0.0, sum(components.values())))
    return EngagementEstimate(value=value, window_ticks=window, components=components)


def read_records(path: str) -> list[RawSensorRecord]:
    """Load a line-delimited record file (one JSON object per line)."""
    records: list[RawSensorRecord] = []
    last_tick = -1
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
                rec = RawSensorRecord.from_dict(d)
            except (ValueError, KeyError) as exc:
                raise RejectedRecordError(f"{path}:{lineno}: {exc}") from exc
            if rec.tick < last_tick:
                raise RejectedRecordError(
                    f"{path}:{lineno}: ticks must be non-decreasing ({rec.tick} after {last_tick})"
                )
            last_tick = rec.tick
            records.append(rec)
    return records


def write_records(path: str, records: Iterable[RawSensorRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
