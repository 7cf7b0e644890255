"""The three behavior-generation layers and the shared behavior library.

Every tick three independent layers may each propose a candidate:

* reactive: seeded blink/idle schedules plus salience-driven gaze shifts,
  the always-on "alive" layer;
* deliberative: re-engage the user when engagement drops below threshold,
  otherwise follow the scenario's pending action, otherwise service the
  largest homeostatic drive deficit;
* emotional: a posture rendering the current discrete emotion.

Candidates carry fixed priority bands (reactive <= 0.2 < emotional <= 0.3
< deliberative 0.8) so downstream conflict resolution is predictable.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

import yaml

from .affect import EmotionState, clamp, EMOTION_LABELS

if TYPE_CHECKING:
    from .scenario import ScenarioAction

DRIVE_ORDER = ("social_contact", "task_progress", "rest")

REACTIVE_PRIORITY_BLINK = 0.1
REACTIVE_PRIORITY_GAZE = 0.2
REACTIVE_PRIORITY_IDLE = 0.05
EMOTION_PRIORITY_GAIN = 0.3
DELIBERATIVE_PRIORITY = 0.8

GAZE_SALIENCE_THRESHOLD = 0.3
DRIVE_DEFICIT_FLOOR = 0.25
BLINK_MEAN_INTERVAL = 80
IDLE_INTERVAL = 200
IDLE_JITTER = 50


@dataclass(slots=True, frozen=True)
class ActionUnit:
    """A named elementary facial or body movement with an intensity."""

    id: str
    intensity: float
    duration: int = 5  # ticks

    def __post_init__(self) -> None:
        if not (self.id.startswith("face.") or self.id.startswith("body.")):
            raise ValueError(f"action unit id must be namespaced face.* or body.*: {self.id!r}")
        if not 0.0 <= self.intensity <= 1.0:
            raise ValueError(f"intensity must be in [0,1], got {self.intensity}")
        if self.duration < 1:
            raise ValueError(f"duration must be >= 1 tick, got {self.duration}")


@dataclass(slots=True, frozen=True)
class CandidateBehavior:
    source: str  # "reactive" | "deliberative" | "emotional"
    units: tuple[ActionUnit, ...]
    tag: str
    priority: float
    speech: str | None = None
    gaze_target: str | None = None

    def __post_init__(self) -> None:
        ids = [u.id for u in self.units]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate action unit ids in behavior {self.tag!r}")
        if not 0.0 <= self.priority <= 1.0:
            raise ValueError(f"priority must be in [0,1], got {self.priority}")


@dataclass(slots=True, frozen=True)
class BehaviorDef:
    """A library entry: named AU set, optional speech template, drive effects."""

    tag: str
    units: tuple[ActionUnit, ...]
    speech: str | None = None
    satisfies: dict[str, float] = field(default_factory=dict)


class LibraryError(ValueError):
    """Malformed behavior library file."""


class BehaviorLibrary:
    """Named behaviors, the emotion-to-pose table, and drive parameters."""

    def __init__(
        self,
        behaviors: dict[str, BehaviorDef],
        emotion_poses: dict[str, str],
        drives: dict[str, "DriveParams"],
        action_units: frozenset[str],
    ):
        self.behaviors = behaviors
        self.emotion_poses = emotion_poses
        self.drives = drives
        self.action_units = action_units

    def get(self, tag: str) -> BehaviorDef:
        try:
            return self.behaviors[tag]
        except KeyError:
            raise KeyError(f"behavior {tag!r} is not in the library") from None

    def candidate(
        self,
        tag: str,
        source: str,
        priority: float,
        gaze_target: str | None = None,
        speech_vars: dict[str, str] | None = None,
        intensity_scale: float = 1.0,
    ) -> CandidateBehavior:
        """Instantiate a library behavior as a candidate."""
        bdef = self.get(tag)
        units = tuple(
            replace(u, intensity=clamp(u.intensity * intensity_scale, 0.0, 1.0)) for u in bdef.units
        )
        speech = render_speech(bdef.speech, speech_vars or {})
        return CandidateBehavior(
            source=source, units=units, tag=tag, priority=priority,
            speech=speech, gaze_target=gaze_target,
        )


@dataclass(slots=True, frozen=True)
class DriveParams:
    drift: float       # level gain per tick
    setpoint: float
    behavior: str      # library tag serviced when the deficit is large
    reengage: str      # library tag used to recapture attention


def render_speech(template: str | None, variables: dict[str, str]) -> str | None:
    if template is None:
        return None
    out = template
    for key, value in variables.items():
        out = out.replace("{" + key + "}", value)
    return out


def load_library(path: str | Path) -> BehaviorLibrary:
    """Load and validate the behavior library file."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise LibraryError(f"{path}: expected a mapping at top level")

    vocabulary = frozenset(raw.get("action_units") or ())
    if not vocabulary:
        raise LibraryError(f"{path}: action_units list is empty")

    behaviors: dict[str, BehaviorDef] = {}
    for tag, spec in (raw.get("behaviors") or {}).items():
        units = []
        for au_id, entry in (spec.get("units") or {}).items():
            if au_id not in vocabulary:
                raise LibraryError(f"{path}: behaviors.{tag}: unregistered action unit {au_id!r}")
            units.append(
                ActionUnit(
                    id=au_id,
                    intensity=float(entry["intensity"]),
                    duration=int(entry.get("duration", 5)),
                )
            )
        units.sort(key=lambda u: u.id)
        behaviors[tag] = BehaviorDef(
            tag=tag,
            units=tuple(units),
            speech=spec.get("speech"),
            satisfies={k: float(v) for k, v in (spec.get("satisfies") or {}).items()},
        )

    emotion_poses: dict[str, str] = dict(raw.get("emotions") or {})
    for label in EMOTION_LABELS:
        if label not in emotion_poses:
            raise LibraryError(f"{path}: emotions table is missing label {label!r}")
    for label, tag in emotion_poses.items():
        if label not in EMOTION_LABELS:
            raise LibraryError(f"{path}: emotions table has unknown label {label!r}")
        if tag not in behaviors:
            raise LibraryError(f"{path}: emotions.{label}: unknown behavior {tag!r}")

    drives: dict[str, DriveParams] = {}
    for name, spec in (raw.get("drives") or {}).items():
        if name not in DRIVE_ORDER:
            raise LibraryError(f"{path}: unknown drive {name!r}")
        params = DriveParams(
            drift=float(spec["drift"]),
            setpoint=float(spec["setpoint"]),
            behavior=str(spec["behavior"]),
            reengage=str(spec["reengage"]),
        )
        for tag in (params.behavior, params.reengage):
            if tag not in behaviors:
                raise LibraryError(f"{path}: drives.{name}: unknown behavior {tag!r}")
        if not params.reengage.startswith("reengage"):
            raise LibraryError(f"{path}: drives.{name}: reengage tag must start with 'reengage'")
        drives[name] = params
    for name in DRIVE_ORDER:
        if name not in drives:
            raise LibraryError(f"{path}: drives table is missing {name!r}")

    return BehaviorLibrary(behaviors, emotion_poses, drives, vocabulary)


# ---------------------------------------------------------------------------
# Homeostatic drives


@dataclass(slots=True, frozen=True)
class DriveState:
    levels: dict[str, float]
    params: dict[str, DriveParams]

    @classmethod
    def initial(cls, library: BehaviorLibrary) -> "DriveState":
        return cls(
            levels={name: library.drives[name].setpoint for name in DRIVE_ORDER},
            params=dict(library.drives),
        )

    def deficit(self, drive: str) -> float:
        return abs(self.levels[drive] - self.params[drive].setpoint)

    def deficits(self) -> dict[str, float]:
        return {name: self.deficit(name) for name in DRIVE_ORDER}

    def max_deficit_drive(self) -> str:
        """Largest-deficit drive; ties resolve by the fixed drive ordering."""
        best = DRIVE_ORDER[0]
        for name in DRIVE_ORDER[1:]:
            if self.deficit(name) > self.deficit(best):
                best = name
        return best


def drive_step(drives: DriveState, satisfactions: dict[str, float], dt: int = 1) -> DriveState:
    """Advance drive levels: upward drift minus executed-behavior satisfaction."""
    if dt < 1:
        raise ValueError(f"dt must be >= 1, got {dt}")
    levels = {
        name: clamp(level + drives.params[name].drift * dt - satisfactions.get(name, 0.0), 0.0, 1.0)
        for name, level in drives.levels.items()
    }
    return DriveState(levels=levels, params=drives.params)


# ---------------------------------------------------------------------------
# Reactive and attention layer


class ReactiveLayer:
    """Scheduled life-like motion plus salience-driven attention.

    Blink intervals are exponential with mean 80 ticks; idle micro-motions
    recur every 200 +/- 50 ticks.  All draws come from the single rng the
    controller owns, so two runs with the same seed produce identical
    schedules.
    """

    def __init__(self, library: BehaviorLibrary, rng: random.Random):
        self._library = library
        self._rng = rng
        self._next_blink = self._draw_blink_gap()
        self._next_idle = self._draw_idle_gap()

    def _draw_blink_gap(self) -> int:
        return max(1, round(self._rng.expovariate(1.0 / BLINK_MEAN_INTERVAL)))

    def _draw_idle_gap(self) -> int:
        return self._rng.randint(IDLE_INTERVAL - IDLE_JITTER, IDLE_INTERVAL + IDLE_JITTER)

    def tick(self, stimuli: list[tuple[str, float]], tick: int) -> list[CandidateBehavior]:
        out: list[CandidateBehavior] = []
        if tick >= self._next_blink:
            out.append(self._library.candidate("blink", "reactive", REACTIVE_PRIORITY_BLINK))
            self._next_blink = tick + self._draw_blink_gap()
        if stimuli:
            target, salience = max(stimuli, key=lambda s: (s[1], _reversed_key(s[0])))
            if salience >= GAZE_SALIENCE_THRESHOLD:
                out.append(
                    self._library.candidate(
                        "gaze_shift", "reactive", REACTIVE_PRIORITY_GAZE, gaze_target=target
                    )
                )
        if tick >= self._next_idle:
            out.append(self._library.candidate("idle_shift", "reactive", REACTIVE_PRIORITY_IDLE))
            self._next_idle = tick + self._draw_idle_gap()
        return out


def _reversed_key(s: str) -> tuple[int, ...]:
    # max() with this key picks the lexicographically smallest id on salience ties
    return tuple(-ord(c) for c in s)


# ---------------------------------------------------------------------------
# Deliberation layer


def select_deliberative(
    drives: DriveState,
    scenario_action: "ScenarioAction | None",
    engagement: float,
    library: BehaviorLibrary,
    theta_engage: float = 0.3,
    speech_vars: dict[str, str] | None = None,
) -> CandidateBehavior | None:
    """Re-engage, follow the scenario, or service the largest drive deficit.

    A disengaged user always takes precedence: scenario actions are never
    emitted while engagement is below the threshold.
    """
    if not 0.0 < theta_engage < 1.0:
        raise ValueError(f"theta_engage must be in (0,1), got {theta_engage}")
    if engagement < theta_engage:
        drive = drives.max_deficit_drive()
        tag = drives.params[drive].reengage
        return library.candidate(tag, "deliberative", DELIBERATIVE_PRIORITY, speech_vars=speech_vars)
    if scenario_action is not None:
        return library.candidate(
            scenario_action.tag, "deliberative", DELIBERATIVE_PRIORITY,
            speech_vars=speech_vars, gaze_target=scenario_action.gaze_target,
        )
    drive = drives.max_deficit_drive()
    if drives.deficit(drive) >= DRIVE_DEFICIT_FLOOR:
        tag = drives.params[drive].behavior
        return library.candidate(tag, "deliberative", DELIBERATIVE_PRIORITY, speech_vars=speech_vars)
    return None


# ---------------------------------------------------------------------------
# Emotion expression layer


def express_emotion(emotion: EmotionState, library: BehaviorLibrary) -> CandidateBehavior | None:
    """Render the discrete emotion as a posture, scaled by its intensity."""
    if emotion.label == "neutral":
        return None
    tag = library.emotion_poses[emotion.label]
    return library.candidate(
        tag, "emotional", EMOTION_PRIORITY_GAIN * emotion.intensity,
        intensity_scale=emotion.intensity,
    )
