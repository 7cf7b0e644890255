"""Session logging, audience-specific exports, and user profiles.

One canonical per-tick log is kept in memory; the therapist CSV and the
roboticist line-delimited export are both pure projections of it, so the
two views cannot disagree.  Timestamps are ticks, never wall clock,
which keeps golden files byte-stable across runs.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .affect import PersonalityProfile
from .perception import RawSensorRecord


@dataclass(slots=True, frozen=True)
class SessionRecord:
    """Everything the controller knew and did on one tick."""

    tick: int
    mode: str
    engagement: float
    mood_valence: float
    mood_arousal: float
    emotion: str
    emotion_intensity: float
    drives: dict[str, float]
    scenario_state: str
    counters: dict[str, int]
    difficulty: int
    goal_reached: bool
    behavior_tag: str | None
    provenance: dict[str, str]
    verdicts: tuple[str, ...]              # rule ids applied this tick
    supervision: tuple[dict, ...]          # commands received this tick
    events: tuple[dict, ...]               # raw sensor records received this tick

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "mode": self.mode,
            "engagement": self.engagement,
            "mood_valence": self.mood_valence,
            "mood_arousal": self.mood_arousal,
            "emotion": self.emotion,
            "emotion_intensity": self.emotion_intensity,
            "drives": self.drives,
            "scenario_state": self.scenario_state,
            "counters": self.counters,
            "difficulty": self.difficulty,
            "goal_reached": self.goal_reached,
            "behavior_tag": self.behavior_tag,
            "provenance": self.provenance,
            "verdicts": list(self.verdicts),
            "supervision": list(self.supervision),
            "events": list(self.events),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionRecord":
        return cls(
            tick=int(d["tick"]),
            mode=str(d["mode"]),
            engagement=float(d["engagement"]),
            mood_valence=float(d["mood_valence"]),
            mood_arousal=float(d["mood_arousal"]),
            emotion=str(d["emotion"]),
            emotion_intensity=float(d["emotion_intensity"]),
            drives={k: float(v) for k, v in d["drives"].items()},
            scenario_state=str(d["scenario_state"]),
            counters={k: int(v) for k, v in d["counters"].items()},
            difficulty=int(d["difficulty"]),
            goal_reached=bool(d["goal_reached"]),
            behavior_tag=d["behavior_tag"],
            provenance={k: str(v) for k, v in d["provenance"].items()},
            verdicts=tuple(d["verdicts"]),
            supervision=tuple(d["supervision"]),
            events=tuple(d["events"]),
        )


class LogError(ValueError):
    pass


class SessionLog:
    """Append-only per-tick record store."""

    def __init__(self, session_id: str = "session", scenario_id: str = ""):
        self.session_id = session_id
        self.scenario_id = scenario_id
        self._records: list[SessionRecord] = []

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> tuple[SessionRecord, ...]:
        """Immutable snapshot; safe to hand to an exporter while ticking."""
        return tuple(self._records)

    def record(self, rec: SessionRecord) -> None:
        if self._records and rec.tick <= self._records[-1].tick:
            raise LogError(
                f"non-monotone tick: {rec.tick} after {self._records[-1].tick}"
            )
        self._records.append(rec)

    def mean_engagement(self) -> float:
        if not self._records:
            return 0.0
        return sum(r.engagement for r in self._records) / len(self._records)

    def logged_events(self) -> list[RawSensorRecord]:
        """The full raw-record stream, for deterministic replay."""
        out = []
        for rec in self._records:
            out.extend(RawSensorRecord.from_dict(e) for e in rec.events)
        return out

    def logged_commands(self) -> list[tuple[int, dict]]:
        out = []
        for rec in self._records:
            out.extend((rec.tick, dict(c)) for c in rec.supervision)
        return out


THERAPIST_COLUMNS = (
    "tick",
    "engagement",
    "scenario_state",
    "counters",
    "goal_reached",
    "difficulty",
    "behavior_tag",
)


def export(log: SessionLog, audience: str, path: str | Path) -> Path:
    """Write the log for one audience; both views derive from the same records."""
    path = Path(path)
    if audience == "roboticist":
        with open(path, "w", encoding="utf-8") as fh:
            for rec in log.records:
                fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
    elif audience == "therapist":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(THERAPIST_COLUMNS)
            for rec in log.records:
                counters = ";".join(f"{k}={v}" for k, v in sorted(rec.counters.items()))
                writer.writerow(
                    [
                        rec.tick,
                        f"{rec.engagement:.6f}",
                        rec.scenario_state,
                        counters,
                        rec.goal_reached,
                        rec.difficulty,
                        rec.behavior_tag or "",
                    ]
                )
    else:
        raise ValueError(f"unknown audience {audience!r}")
    return path


def read_roboticist(path: str | Path) -> SessionLog:
    """Parse a roboticist export back into a log (lossless round trip)."""
    log = SessionLog()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                log.record(SessionRecord.from_dict(json.loads(line)))
    return log


# ---------------------------------------------------------------------------
# User profiles


@dataclass(slots=True, frozen=True)
class SessionSummary:
    session_id: str
    scenario_id: str
    final_difficulty: int
    goal_reached: bool
    mean_engagement: float


@dataclass(slots=True, frozen=True)
class UserProfile:
    user_id: str
    personality: PersonalityProfile = field(default_factory=PersonalityProfile)
    preferences: dict[str, str] = field(default_factory=dict)
    performance_history: tuple[SessionSummary, ...] = ()

    def __post_init__(self) -> None:
        if not self.user_id:
            raise ValueError("user_id must be non-empty")


def summarize(log: SessionLog) -> SessionSummary:
    records = log.records
    return SessionSummary(
        session_id=log.session_id,
        scenario_id=log.scenario_id,
        final_difficulty=records[-1].difficulty if records else 0,
        goal_reached=records[-1].goal_reached if records else False,
        mean_engagement=log.mean_engagement(),
    )


def update_history(profile: UserProfile, summary: SessionSummary) -> UserProfile:
    """Append one session summary; everything else is untouched."""
    return replace(profile, performance_history=profile.performance_history + (summary,))


def load_profile(path: str | Path) -> UserProfile:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    history = tuple(
        SessionSummary(
            session_id=str(h["session_id"]),
            scenario_id=str(h["scenario_id"]),
            final_difficulty=int(h["final_difficulty"]),
            goal_reached=bool(h["goal_reached"]),
            mean_engagement=float(h["mean_engagement"]),
        )
        for h in (raw.get("performance_history") or ())
    )
    return UserProfile(
        user_id=str(raw.get("user_id", "")),
        personality=PersonalityProfile.from_dict(raw.get("personality") or {}),
        preferences={str(k): str(v) for k, v in (raw.get("preferences") or {}).items()},
        performance_history=history,
    )


def save_profile(profile: UserProfile, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "user_id": profile.user_id,
        "personality": profile.personality.as_dict(),
        "preferences": dict(profile.preferences),
        "performance_history": [
            {
                "session_id": s.session_id,
                "scenario_id": s.scenario_id,
                "final_difficulty": s.final_difficulty,
                "goal_reached": s.goal_reached,
                "mean_engagement": s.mean_engagement,
            }
            for s in profile.performance_history
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=True)
    return path
