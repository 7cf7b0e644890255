"""Combining vetted layer candidates into one abstract behavior.

Conflicting action units resolve winner-take-all by the fixed priority
bands (deliberative > emotional > reactive); speech comes only from the
deliberative layer.  Modulation then adjusts the unified behavior's
amplitude and speed from mood arousal and extraversion, re-applies the
technical intensity caps, and smooths per-tick intensity jumps against
whatever was emitted on the previous tick.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fnmatch import fnmatchcase

from .affect import MoodState, PersonalityProfile, clamp
from .behaviors import ActionUnit, CandidateBehavior

SOURCE_BANDS = {"reactive": 1, "emotional": 2, "deliberative": 3}

SCALE_MIN = 0.5
SCALE_MAX = 1.5


@dataclass(slots=True, frozen=True)
class AbstractBehavior:
    """Platform-independent unified behavior for one tick."""

    units: tuple[ActionUnit, ...]
    provenance: dict[str, str]  # AU id -> source layer
    tag: str
    tick: int = 0
    speech: str | None = None
    gaze_target: str | None = None
    amplitude_scale: float = 1.0
    speed_scale: float = 1.0

    def __post_init__(self) -> None:
        ids = {u.id for u in self.units}
        if len(ids) != len(self.units):
            raise ValueError("duplicate action unit ids after fusion")
        if ids != set(self.provenance):
            raise ValueError("provenance must cover exactly the fused units")
        for scale in (self.amplitude_scale, self.speed_scale):
            if not SCALE_MIN <= scale <= SCALE_MAX:
                raise ValueError(f"scales must be in [{SCALE_MIN},{SCALE_MAX}], got {scale}")

    @property
    def is_empty(self) -> bool:
        return not self.units and self.speech is None


def fuse(
    reactive: CandidateBehavior | None,
    deliberative: CandidateBehavior | None,
    emotional: CandidateBehavior | None,
    tick: int = 0,
) -> AbstractBehavior:
    """Merge up to three layer candidates into one behavior.

    The union is taken over AU ids; on a conflict the source with the
    higher band wins.  Equal-band conflicts cannot occur because each
    layer contributes at most one candidate per tick.
    """
    by_id: dict[str, tuple[ActionUnit, str]] = {}
    for cand in (reactive, deliberative, emotional):
        if cand is None:
            continue
        band = SOURCE_BANDS[cand.source]
        for unit in cand.units:
            held = by_id.get(unit.id)
            if held is None or band > SOURCE_BANDS[held[1]]:
                by_id[unit.id] = (unit, cand.source)
            else:
                assert band != SOURCE_BANDS[held[1]], "equal-band AU conflict"

    units = tuple(unit for unit, _ in sorted(by_id.values(), key=lambda p: p[0].id))
    provenance = {uid: src for uid, (_, src) in sorted(by_id.items())}
    speech = deliberative.speech if deliberative else None
    if deliberative and deliberative.gaze_target:
        gaze = deliberative.gaze_target
    elif reactive and reactive.gaze_target:
        gaze = reactive.gaze_target
    else:
        gaze = None
    tags = [c.tag for c in (deliberative, emotional, reactive) if c is not None]
    return AbstractBehavior(
        units=units, provenance=provenance, tag="+".join(tags), tick=tick,
        speech=speech, gaze_target=gaze,
    )


def amplitude_for(mood: MoodState, personality: PersonalityProfile) -> float:
    base = clamp(0.7 + 0.3 * (mood.arousal + 1.0), SCALE_MIN, SCALE_MAX)
    return clamp(base * (0.9 + 0.2 * personality.extraversion), SCALE_MIN, SCALE_MAX)


def speed_for(mood: MoodState) -> float:
    return clamp(0.7 + 0.3 * (mood.arousal + 1.0), SCALE_MIN, SCALE_MAX)


def modulate(
    behavior: AbstractBehavior,
    mood: MoodState,
    personality: PersonalityProfile,
    intensity_caps: tuple[tuple[str, float], ...] = (),
    rate_caps: tuple[tuple[str, float], ...] = (),
    prev_intensities: dict[str, float] | None = None,
) -> AbstractBehavior:
    """Scale the behavior by affect and enforce cap annotations.

    At arousal 0 / extraversion 0.5 both scales are exactly 1.0, so a
    neutral robot emits the raw fused behavior.  Intensity caps are
    re-applied after amplitude scaling so the modulated behavior still
    satisfies every rule; rate caps bound the per-tick change of each
    AU's intensity relative to the previous emitted behavior.
    """
    amplitude = amplitude_for(mood, personality)
    speed = speed_for(mood)
    prev = prev_intensities or {}
    units = []
    for unit in behavior.units:
        intensity = clamp(unit.intensity * amplitude, 0.0, 1.0)
        for pattern, limit in intensity_caps:
            if intensity > limit and fnmatchcase(unit.id, pattern):
                intensity = limit
        for pattern, limit in rate_caps:
            if fnmatchcase(unit.id, pattern):
                before = prev.get(unit.id, 0.0)
                intensity = clamp(intensity, before - limit, before + limit)
        units.append(replace(unit, intensity=intensity))
    return replace(
        behavior,
        units=tuple(units),
        amplitude_scale=amplitude,
        speed_scale=speed,
    )
