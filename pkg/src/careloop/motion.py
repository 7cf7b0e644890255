"""Retargeting abstract behaviors onto concrete robot morphologies.

A morphology file declares the robot's joints (limits, velocity caps,
neutral pose), a linear gain/offset synthesis per action unit, and
one-level fallback substitutions for units the robot cannot perform
directly (a faceless robot renders face.smile with its arms).  Mapping
is pure and deterministic: the same behavior and morphology always
produce the same script, joint targets never leave their limits, and
travel faster than a joint's velocity cap is stretched over extra
keyframes instead of being rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import yaml

from .fusion import AbstractBehavior


class MorphologyError(ValueError):
    """Invalid morphology definition; message carries the field path."""


@dataclass(slots=True, frozen=True)
class JointSpec:
    min: float
    max: float
    max_velocity: float  # radians per tick
    neutral: float


@dataclass(slots=True, frozen=True)
class AuMapping:
    joint: str
    gain: float
    offset: float = 0.0


@dataclass(slots=True, frozen=True)
class RobotMorphology:
    robot_id: str
    joints: dict[str, JointSpec]
    au_map: dict[str, tuple[AuMapping, ...]]
    fallbacks: dict[str, str]

    @property
    def capabilities(self) -> frozenset[str]:
        return frozenset(self.au_map)


@dataclass(slots=True, frozen=True)
class MotionScript:
    robot_id: str
    tag: str
    keyframes: tuple[tuple[int, dict[str, float]], ...]
    speech: str | None = None
    unmapped: tuple[str, ...] = ()

    @property
    def duration(self) -> int:
        return self.keyframes[-1][0] if self.keyframes else 0

    def to_dict(self) -> dict:
        return {
            "robot_id": self.robot_id,
            "tag": self.tag,
            "keyframes": [[t, dict(sorted(pose.items()))] for t, pose in self.keyframes],
            "speech": self.speech,
            "unmapped": list(self.unmapped),
        }


def load_morphology(path: str | Path) -> RobotMorphology:
    """Load and validate a morphology file."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise MorphologyError(f"{path}: expected a mapping at top level")

    robot_id = raw.get("robot_id")
    if not robot_id:
        raise MorphologyError(f"{path}: robot_id: missing")

    joints: dict[str, JointSpec] = {}
    for name, spec in (raw.get("joints") or {}).items():
        where = f"{path}: joints.{name}"
        try:
            js = JointSpec(
                min=float(spec["min"]),
                max=float(spec["max"]),
                max_velocity=float(spec["max_velocity"]),
                neutral=float(spec["neutral"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MorphologyError(f"{where}: {exc}") from exc
        if not js.min < js.max:
            raise MorphologyError(f"{where}: min must be < max")
        if js.max_velocity <= 0 or not math.isfinite(js.max_velocity):
            raise MorphologyError(f"{where}.max_velocity: must be finite and > 0")
        if not js.min <= js.neutral <= js.max:
            raise MorphologyError(f"{where}.neutral: outside [min, max]")
        joints[name] = js
    if not joints:
        raise MorphologyError(f"{path}: joints: empty")

    au_map: dict[str, tuple[AuMapping, ...]] = {}
    for au_id, entries in (raw.get("action_units") or {}).items():
        mappings = []
        for i, entry in enumerate(entries or ()):
            where = f"{path}: action_units.{au_id}[{i}]"
            joint = entry.get("joint")
            if joint not in joints:
                raise MorphologyError(f"{where}.joint: unknown joint {joint!r}")
            gain = float(entry["gain"])
            if not math.isfinite(gain):
                raise MorphologyError(f"{where}.gain: must be finite")
            mappings.append(AuMapping(joint=joint, gain=gain, offset=float(entry.get("offset", 0.0))))
        if not mappings:
            raise MorphologyError(f"{path}: action_units.{au_id}: empty mapping")
        au_map[au_id] = tuple(mappings)

    fallbacks: dict[str, str] = {}
    for au_id, target in (raw.get("fallbacks") or {}).items():
        where = f"{path}: fallbacks.{au_id}"
        if au_id in au_map:
            raise MorphologyError(f"{where}: source is already directly mapped")
        if target not in au_map:
            # also rejects chains and cycles: a valid target must be a capability
            raise MorphologyError(f"{where}: target {target!r} is not a mapped capability")
        fallbacks[au_id] = str(target)

    return RobotMorphology(robot_id=str(robot_id), joints=joints, au_map=au_map, fallbacks=fallbacks)


def map_behavior(behavior: AbstractBehavior, morph: RobotMorphology) -> MotionScript:
    """Translate one abstract behavior into a joint keyframe script.

    Per unit: capability -> linear synthesis (neutral + gain * intensity *
    amplitude + offset, clamped to limits); unknown with a fallback ->
    substitute at the same intensity; otherwise dropped into `unmapped`.
    Contributions of several units to one joint add around the neutral
    pose.  Timing: behavior duration divided by speed_scale, rounded up;
    joints that cannot reach their target at max velocity in that time
    get one extra keyframe per tick until they arrive.
    """
    deltas: dict[str, float] = {}
    unmapped: list[str] = []
    max_duration = 0

    for unit in sorted(behavior.units, key=lambda u: u.id):
        au_id = unit.id
        if au_id not in morph.au_map:
            au_id = morph.fallbacks.get(au_id)
            if au_id is None:
                unmapped.append(unit.id)
                continue
        for m in morph.au_map[au_id]:
            contribution = m.gain * unit.intensity * behavior.amplitude_scale + m.offset
            deltas[m.joint] = deltas.get(m.joint, 0.0) + contribution
        max_duration = max(max_duration, unit.duration)

    if not deltas:
        return MotionScript(
            robot_id=morph.robot_id, tag=behavior.tag, keyframes=(),
            speech=behavior.speech, unmapped=tuple(sorted(unmapped)),
        )

    targets = {
        joint: _clamp_to_joint(morph.joints[joint].neutral + delta, morph.joints[joint])
        for joint, delta in deltas.items()
    }
    ramp_ticks = max(1, math.ceil(max_duration / behavior.speed_scale))
    keyframes = _plan_keyframes(targets, morph, ramp_ticks)
    return MotionScript(
        robot_id=morph.robot_id, tag=behavior.tag, keyframes=keyframes,
        speech=behavior.speech, unmapped=tuple(sorted(unmapped)),
    )


def _clamp_to_joint(value: float, spec: JointSpec) -> float:
    return spec.min if value < spec.min else spec.max if value > spec.max else value


def _plan_keyframes(
    targets: dict[str, float], morph: RobotMorphology, ramp_ticks: int
) -> tuple[tuple[int, dict[str, float]], ...]:
    """Neutral-to-target ramp with velocity-limited extension keyframes."""
    joints = sorted(targets)
    pose = {j: morph.joints[j].neutral for j in joints}
    frames: list[tuple[int, dict[str, float]]] = [(0, dict(pose))]

    def step(t: int, budget_ticks: int) -> None:
        for j in joints:
            limit = morph.joints[j].max_velocity * budget_ticks
            delta = targets[j] - pose[j]
            if abs(delta) <= limit:
                pose[j] = targets[j]
            else:
                pose[j] += math.copysign(limit, delta)
        frames.append((t, dict(pose)))

    step(ramp_ticks, ramp_ticks)
    t = ramp_ticks
    while any(pose[j] != targets[j] for j in joints):
        t += 1
        step(t, 1)
    return tuple(frames)


def neutral_script(morph: RobotMorphology, tag: str = "neutral_rest") -> MotionScript:
    """A single-keyframe return to the neutral pose (used on stop)."""
    pose = {name: spec.neutral for name, spec in sorted(morph.joints.items())}
    return MotionScript(robot_id=morph.robot_id, tag=tag, keyframes=((0, pose),), speech=None)
