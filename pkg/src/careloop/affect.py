"""Personality, mood dynamics, and discrete emotion derivation.

The robot carries a five-trait personality blended toward the user's
profile (similarity attraction).  Mood is a point on the valence/arousal
plane driven by a linear decay-to-baseline integrator with additive
event-appraisal impulses; the personality sets both the decay rate and
the impulse gain, so different personalities react and recover at
different speeds.  The discrete emotion is a pure projection of mood
onto eight 45-degree sectors around the origin, with a neutral dead
zone to stop label flicker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .perception import EventKind, InteractionEvent

TRAIT_NAMES = ("openness", "conscientiousness", "extraversion", "agreeableness", "neuroticism")

EMOTION_LABELS = (
    "pleasure",      # 0 degrees
    "excitement",    # 45
    "arousal",       # 90
    "distress",      # 135
    "misery",        # 180
    "depression",    # 225
    "sleepiness",    # 270
    "contentment",   # 315
)


def clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


@dataclass(slots=True, frozen=True)
class PersonalityProfile:
    openness: float = 0.5
    conscientiousness: float = 0.5
    extraversion: float = 0.5
    agreeableness: float = 0.5
    neuroticism: float = 0.5

    def __post_init__(self) -> None:
        for name in TRAIT_NAMES:
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"trait {name} must be in [0,1], got {v}")

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in TRAIT_NAMES}

    @classmethod
    def from_dict(cls, d: dict) -> "PersonalityProfile":
        return cls(**{name: float(d.get(name, 0.5)) for name in TRAIT_NAMES})


@dataclass(slots=True, frozen=True)
class MoodState:
    valence: float = 0.0
    arousal: float = 0.0
    baseline_valence: float = 0.0
    baseline_arousal: float = 0.0
    decay_rate: float = 0.3  # per-tick pull toward baseline, > 0

    def __post_init__(self) -> None:
        if self.decay_rate <= 0:
            raise ValueError(f"decay_rate must be > 0, got {self.decay_rate}")

    @property
    def magnitude(self) -> float:
        return math.hypot(self.valence, self.arousal)


@dataclass(slots=True, frozen=True)
class Appraisal:
    delta_valence: float
    delta_arousal: float
    cause: EventKind


@dataclass(slots=True, frozen=True)
class EmotionState:
    label: str  # "neutral" or one of EMOTION_LABELS
    intensity: float


@dataclass(slots=True, frozen=True)
class AffectConfig:
    """Tunable affect parameters; defaults match the shipped config file."""

    # per-event (delta_valence, delta_arousal) before confidence scaling
    appraisal_table: dict[EventKind, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_APPRAISALS)
    )
    # decay = decay_base + decay_span * (1 - neuroticism)
    decay_base: float = 0.1
    decay_span: float = 0.4
    # rise gain = rise_base + rise_span * neuroticism
    rise_base: float = 0.5
    rise_span: float = 0.5
    # baseline mood = coef * (extraversion - 0.5)
    baseline_valence_coef: float = 0.4
    baseline_arousal_coef: float = 0.2
    neutral_radius: float = 0.1
    # robot trait = blend * user trait + (1 - blend) * base trait
    adaptation_blend: float = 0.5


DEFAULT_APPRAISALS: dict[EventKind, tuple[float, float]] = {
    EventKind.GAZE_ON_ROBOT: (0.1, 0.05),
    EventKind.GAZE_AWAY: (-0.1, -0.05),
    EventKind.TOUCH_ROBOT: (0.2, 0.15),
    EventKind.UTTERANCE_HEARD: (0.0, 0.1),
    EventKind.TASK_RESPONSE_CORRECT: (0.3, 0.2),
    EventKind.TASK_RESPONSE_WRONG: (-0.2, 0.1),
    EventKind.TASK_RESPONSE_NONE: (-0.1, -0.1),
}

DEFAULT_AFFECT = AffectConfig()


def load_affect_config(path: str | Path) -> AffectConfig:
    """Read an affect parameter file (YAML)."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    table = dict(DEFAULT_APPRAISALS)
    for kind_name, pair in (raw.get("appraisals") or {}).items():
        kind = EventKind(kind_name)
        dv, da = float(pair[0]), float(pair[1])
        if abs(dv) > 1.0 or abs(da) > 1.0:
            raise ValueError(f"appraisal for {kind_name} out of [-1,1]: {pair}")
        table[kind] = (dv, da)
    return AffectConfig(
        appraisal_table=table,
        decay_base=float(raw.get("decay_base", DEFAULT_AFFECT.decay_base)),
        decay_span=float(raw.get("decay_span", DEFAULT_AFFECT.decay_span)),
        rise_base=float(raw.get("rise_base", DEFAULT_AFFECT.rise_base)),
        rise_span=float(raw.get("rise_span", DEFAULT_AFFECT.rise_span)),
        baseline_valence_coef=float(raw.get("baseline_valence_coef", DEFAULT_AFFECT.baseline_valence_coef)),
        baseline_arousal_coef=float(raw.get("baseline_arousal_coef", DEFAULT_AFFECT.baseline_arousal_coef)),
        neutral_radius=float(raw.get("neutral_radius", DEFAULT_AFFECT.neutral_radius)),
        adaptation_blend=float(raw.get("adaptation_blend", DEFAULT_AFFECT.adaptation_blend)),
    )


def adapt_personality(
    user: PersonalityProfile,
    base: PersonalityProfile,
    config: AffectConfig = DEFAULT_AFFECT,
) -> PersonalityProfile:
    """Blend the robot's base traits toward the user's traits.

    With the default 0.5 blend the result is the trait-wise midpoint;
    user == base is a fixed point.
    """
    w = config.adaptation_blend
    blended = {
        name: clamp(w * getattr(user, name) + (1.0 - w) * getattr(base, name), 0.0, 1.0)
        for name in TRAIT_NAMES
    }
    return PersonalityProfile(**blended)


def decay_rate(personality: PersonalityProfile, config: AffectConfig = DEFAULT_AFFECT) -> float:
    """Mood pull toward baseline per tick; high neuroticism recovers slower."""
    return config.decay_base + config.decay_span * (1.0 - personality.neuroticism)


def rise_gain(personality: PersonalityProfile, config: AffectConfig = DEFAULT_AFFECT) -> float:
    """Impulse gain; high neuroticism reacts harder."""
    return config.rise_base + config.rise_span * personality.neuroticism


def initial_mood(personality: PersonalityProfile, config: AffectConfig = DEFAULT_AFFECT) -> MoodState:
    """Mood at its personality-derived baseline; extraverts idle mildly positive."""
    v0 = config.baseline_valence_coef * (personality.extraversion - 0.5)
    a0 = config.baseline_arousal_coef * (personality.extraversion - 0.5)
    return MoodState(
        valence=v0,
        arousal=a0,
        baseline_valence=v0,
        baseline_arousal=a0,
        decay_rate=decay_rate(personality, config),
    )


def appraise(event: InteractionEvent, config: AffectConfig = DEFAULT_AFFECT) -> Appraisal:
    """Fixed per-kind mood impulse, scaled by the event's confidence."""
    dv, da = config.appraisal_table[event.kind]
    return Appraisal(
        delta_valence=dv * event.confidence,
        delta_arousal=da * event.confidence,
        cause=event.kind,
    )


def step_mood(
    mood: MoodState,
    impulses: list[Appraisal] | tuple[Appraisal, ...] = (),
    rise: float = 1.0,
    dt: int = 1,
) -> MoodState:
    """One explicit Euler step of the mood integrator.

    Per axis: x' = clamp[-1,1](x + dt * decay * (baseline - x) + rise * sum(dx)).
    """
    if dt < 1:
        raise ValueError(f"dt must be >= 1, got {dt}")
    sum_dv = sum(a.delta_valence for a in impulses)
    sum_da = sum(a.delta_arousal for a in impulses)
    lam = mood.decay_rate
    v = clamp(mood.valence + dt * lam * (mood.baseline_valence - mood.valence) + rise * sum_dv, -1.0, 1.0)
    a = clamp(mood.arousal + dt * lam * (mood.baseline_arousal - mood.arousal) + rise * sum_da, -1.0, 1.0)
    return replace(mood, valence=v, arousal=a)


def current_emotion(mood: MoodState, config: AffectConfig = DEFAULT_AFFECT) -> EmotionState:
    """Project mood onto the eight-sector emotion wheel.

    Below the neutral radius the label is neutral with intensity 0;
    otherwise the sector is the 45-degree wedge centered on the octant
    axes, and intensity is the capped mood magnitude.  The label depends
    only on angle, so it is invariant under positive scaling.
    """
    m = mood.magnitude
    if m < config.neutral_radius:
        return EmotionState(label="neutral", intensity=0.0)
    angle = math.degrees(math.atan2(mood.arousal, mood.valence)) % 360.0
    sector = int(math.floor((angle + 22.5) / 45.0)) % 8
    return EmotionState(label=EMOTION_LABELS[sector], intensity=min(1.0, m))
