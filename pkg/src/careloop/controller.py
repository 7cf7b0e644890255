"""The per-tick orchestration loop and the supervision command surface.

Pipeline order is fixed: interpret events -> engagement -> appraise and
step mood -> drive step -> scenario advance -> generate (reactive,
deliberative, emotional) -> vet -> fuse -> modulate -> retarget ->
record -> snapshot.  Supervision commands are validated on receipt and
applied at the next tick boundary, so a stop or pause silences the robot
within one tick.  A stage failure suppresses that tick's behavior and
the loop keeps running; only a stop command ends the session.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from . import affect as affect_mod
from . import behaviors as behaviors_mod
from . import fusion as fusion_mod
from . import monitor as monitor_mod
from . import motion as motion_mod
from . import perception as perception_mod
from . import scenario as scenario_mod
from .affect import AffectConfig, MoodState, PersonalityProfile
from .behaviors import BehaviorLibrary, CandidateBehavior, DriveState, ReactiveLayer
from .memory import SessionLog, SessionRecord, UserProfile
from .monitor import Rule
from .motion import MotionScript, RobotMorphology
from .perception import (
    Channel,
    EventKind,
    InteractionEvent,
    PerceptionConfig,
    RawSensorRecord,
    RESPONSE_KINDS,
)
from .scenario import Scenario, ScenarioState


class ControllerMode(str, Enum):
    AUTONOMOUS = "autonomous"
    APPROVAL = "approval"
    WIZARD_OF_OZ = "wizard_of_oz"
    PAUSED = "paused"
    STOPPED = "stopped"


RUN_MODES = (ControllerMode.AUTONOMOUS, ControllerMode.APPROVAL, ControllerMode.WIZARD_OF_OZ)

COMMAND_KINDS = (
    "select_scenario",
    "start",
    "pause",
    "resume",
    "stop",
    "set_mode",
    "approve",
    "deny",
    "override_behavior",
    "set_difficulty",
)


@dataclass(slots=True, frozen=True)
class SupervisionCommand:
    kind: str
    payload: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in COMMAND_KINDS:
            raise ValueError(f"unknown command kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "payload": dict(self.payload)}

    @classmethod
    def from_dict(cls, d: dict) -> "SupervisionCommand":
        return cls(kind=str(d["kind"]), payload=dict(d.get("payload") or {}))


@dataclass(slots=True, frozen=True)
class Ack:
    kind: str
    accepted: bool
    reason: str | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "accepted": self.accepted, "reason": self.reason}


@dataclass(slots=True, frozen=True)
class StateSnapshot:
    """Immutable per-tick view published to supervision clients."""

    tick: int
    mode: str
    mood_valence: float
    mood_arousal: float
    emotion: str
    emotion_intensity: float
    engagement: float
    drives: dict[str, float]
    scenario_id: str
    scenario_state: str
    counters: dict[str, int]
    goal_reached: bool
    difficulty: int
    expected_token: str | None
    behavior_tag: str | None
    provenance: dict[str, str]
    approval_queue: tuple[dict, ...]

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "mode": self.mode,
            "mood_valence": self.mood_valence,
            "mood_arousal": self.mood_arousal,
            "emotion": self.emotion,
            "emotion_intensity": self.emotion_intensity,
            "engagement": self.engagement,
            "drives": dict(self.drives),
            "scenario_id": self.scenario_id,
            "scenario_state": self.scenario_state,
            "counters": dict(self.counters),
            "goal_reached": self.goal_reached,
            "difficulty": self.difficulty,
            "expected_token": self.expected_token,
            "behavior_tag": self.behavior_tag,
            "provenance": dict(self.provenance),
            "approval_queue": [dict(q) for q in self.approval_queue],
        }


class SessionStopped(RuntimeError):
    """tick() was called after the session entered the stopped mode."""


class Controller:
    """Owns all mutable session state; tick() runs on one logical thread."""

    def __init__(
        self,
        scenario: Scenario,
        morphology: RobotMorphology,
        library: BehaviorLibrary,
        rules: tuple[Rule, ...],
        user: UserProfile | None = None,
        seed: int = 0,
        mode: ControllerMode = ControllerMode.AUTONOMOUS,
        affect_config: AffectConfig | None = None,
        base_personality: PersonalityProfile | None = None,
        session_id: str = "session",
        scenario_catalog: dict[str, Scenario] | None = None,
    ):
        if mode not in RUN_MODES:
            raise ValueError(f"initial mode must be a running mode, got {mode}")
        self.scenario = scenario
        self.morphology = morphology
        self.library = library
        self.rules = monitor_mod.sort_rules(rules)
        self.user = user or UserProfile(user_id="anonymous")
        self.affect_config = affect_config or affect_mod.DEFAULT_AFFECT
        self.scenario_catalog = scenario_catalog or {}

        self.mode = mode
        self._mode_before_pause = mode
        self.seed = seed
        self.rng = random.Random(seed)

        self.personality = affect_mod.adapt_personality(
            self.user.personality, base_personality or PersonalityProfile(), self.affect_config
        )
        self.mood: MoodState = affect_mod.initial_mood(self.personality, self.affect_config)
        self._rise = affect_mod.rise_gain(self.personality, self.affect_config)

        self.perception = self._perception_config(scenario)
        self.drives: DriveState = DriveState.initial(library)
        self.scenario_state: ScenarioState = scenario_mod.initial_state(scenario)
        self.reactive = ReactiveLayer(library, self.rng)

        self._intensity_caps = monitor_mod.intensity_caps(self.rules)
        self._rate_caps = monitor_mod.rate_caps(self.rules)

        self.tick_index = 0
        self.engagement = 0.0
        self.emotion = affect_mod.current_emotion(self.mood, self.affect_config)
        self._window: deque[InteractionEvent] = deque()
        self._scored: deque[int] = deque(maxlen=10)
        self._satisfactions: dict[str, float] = {}
        self._prev_intensities: dict[str, float] = {}
        self._token_timer_start = 0
        self._responded_since_prompt = False

        self._inbox: list[SupervisionCommand] = []
        self._applied_commands: list[dict] = []
        self.approval_queue: list[tuple[str, CandidateBehavior]] = []
        self._approved: deque[CandidateBehavior] = deque()
        self._next_queue_id = 1
        self._overrides: deque[str] = deque()
        self.started = mode is not ControllerMode.PAUSED

        self.log = SessionLog(session_id=session_id, scenario_id=scenario.id)
        self.errors: list[str] = []

    # -- configuration -----------------------------------------------------

    @staticmethod
    def _perception_config(scenario: Scenario) -> PerceptionConfig:
        overrides = scenario.perception_overrides
        base = perception_mod.DEFAULT_PERCEPTION
        if not overrides:
            return base
        return PerceptionConfig(
            confidence_floor=float(overrides.get("confidence_floor", base.confidence_floor)),
            gaze_weight=float(overrides.get("gaze_weight", base.gaze_weight)),
            response_weight=float(overrides.get("response_weight", base.response_weight)),
            touch_weight=float(overrides.get("touch_weight", base.touch_weight)),
            window_ticks=int(overrides.get("window_ticks", base.window_ticks)),
        )

    @property
    def robot_id(self) -> str:
        return self.morphology.robot_id

    @property
    def stopped(self) -> bool:
        return self.mode is ControllerMode.STOPPED

    # -- supervision -------------------------------------------------------

    def handle_command(self, cmd: SupervisionCommand) -> Ack:
        """Validate now, apply at the next tick boundary."""
        reason = self._validate(cmd)
        if reason is not None:
            self._applied_commands.append({**cmd.to_dict(), "accepted": False, "reason": reason})
            return Ack(cmd.kind, accepted=False, reason=reason)
        self._inbox.append(cmd)
        return Ack(cmd.kind, accepted=True)

    def _validate(self, cmd: SupervisionCommand) -> str | None:
        mode = self.mode
        if mode is ControllerMode.STOPPED:
            return "session is stopped"
        kind, payload = cmd.kind, cmd.payload
        if kind == "select_scenario":
            if self.tick_index > 0:
                return "scenario can only be selected before the session starts"
            if payload.get("scenario") not in self.scenario_catalog:
                return f"unknown scenario {payload.get('scenario')!r}"
        elif kind == "resume":
            if mode is not ControllerMode.PAUSED and not any(
                c.kind == "pause" for c in self._inbox
            ):
                return "not paused"
        elif kind == "set_mode":
            try:
                target = ControllerMode(payload.get("mode", ""))
            except ValueError:
                return f"unknown mode {payload.get('mode')!r}"
            if target not in RUN_MODES:
                return "set_mode only switches between running modes"
        elif kind in ("approve", "deny"):
            if mode is not ControllerMode.APPROVAL:
                return f"{kind} requires approval mode"
            queued = {qid for qid, _ in self.approval_queue}
            if payload.get("id") not in queued:
                return f"no queued behavior with id {payload.get('id')!r}"
        elif kind == "override_behavior":
            if mode is not ControllerMode.WIZARD_OF_OZ:
                return "override_behavior requires wizard_of_oz mode"
            if payload.get("tag") not in self.library.behaviors:
                return f"behavior {payload.get('tag')!r} is not in the library"
        elif kind == "set_difficulty":
            if not isinstance(payload.get("index"), int):
                return "set_difficulty needs an integer index"
        return None

    def _apply_commands(self) -> None:
        pending, self._inbox = self._inbox, []
        for cmd in pending:
            reason = self._apply(cmd)
            self._applied_commands.append(
                {**cmd.to_dict(), "accepted": reason is None, "reason": reason}
            )

    def _apply(self, cmd: SupervisionCommand) -> str | None:
        kind, payload = cmd.kind, cmd.payload
        if kind == "stop":
            self.mode = ControllerMode.STOPPED
        elif kind == "pause":
            if self.mode in RUN_MODES:
                self._mode_before_pause = self.mode
                self.mode = ControllerMode.PAUSED
        elif kind == "resume":
            if self.mode is not ControllerMode.PAUSED:
                return "not paused"
            self.mode = self._mode_before_pause
        elif kind == "start":
            self.started = True
        elif kind == "set_mode":
            if self.mode is ControllerMode.PAUSED:
                self._mode_before_pause = ControllerMode(payload["mode"])
            else:
                self.mode = ControllerMode(payload["mode"])
        elif kind == "approve":
            return self._resolve_queued(payload.get("id"), keep=True)
        elif kind == "deny":
            return self._resolve_queued(payload.get("id"), keep=False)
        elif kind == "override_behavior":
            if self.mode is not ControllerMode.WIZARD_OF_OZ:
                return "override_behavior requires wizard_of_oz mode"
            self._overrides.append(str(payload["tag"]))
        elif kind == "set_difficulty":
            self.scenario_state = scenario_mod.set_difficulty(
                self.scenario_state, int(payload["index"]), self.tick_index, self.scenario
            )
        elif kind == "select_scenario":
            if self.tick_index > 0:
                return "scenario can only be selected before the session starts"
            name = payload.get("scenario")
            if name not in self.scenario_catalog:
                return f"unknown scenario {name!r}"
            self.scenario = self.scenario_catalog[name]
            self.perception = self._perception_config(self.scenario)
            self.scenario_state = scenario_mod.initial_state(self.scenario)
            self.log.scenario_id = self.scenario.id
        return None

    def _resolve_queued(self, qid, keep: bool) -> str | None:
        for i, (queued_id, cand) in enumerate(self.approval_queue):
            if queued_id == qid:
                del self.approval_queue[i]
                if keep:
                    self._approved.append(cand)
                return None
        return f"no queued behavior with id {qid!r}"

    # -- the tick pipeline ---------------------------------------------------

    def tick(self, records: list[RawSensorRecord] | None = None) -> tuple[MotionScript | None, StateSnapshot]:
        if self.stopped:
            raise SessionStopped("tick() after stop")
        records = records or []
        t = self.tick_index
        self._apply_commands()

        if self.mode is ControllerMode.STOPPED:
            script = motion_mod.neutral_script(self.morphology)
            snapshot = self._finish_tick(records, emitted_tag=script.tag, provenance={}, verdicts=())
            return script, snapshot

        if self.mode is ControllerMode.PAUSED:
            snapshot = self._finish_tick(records, emitted_tag=None, provenance={}, verdicts=())
            return None, snapshot

        script: MotionScript | None = None
        emitted_tag: str | None = None
        provenance: dict[str, str] = {}
        verdict_ids: list[str] = []
        try:
            events = self._interpret(records, t)
            self._update_engagement(events, t)
            self._step_affect(events)
            self.drives = behaviors_mod.drive_step(self.drives, self._satisfactions, dt=1)
            self._satisfactions = {}
            self._advance_scenario(events, t)

            candidates = self._generate(records, t)
            script, emitted_tag, provenance, verdict_ids = self._express(candidates, t)
        except Exception as exc:  # fail-safe: suppress behavior, keep looping
            self.errors.append(f"tick {t}: {type(exc).__name__}: {exc}")
            script, emitted_tag, provenance = None, None, {}

        snapshot = self._finish_tick(records, emitted_tag, provenance, tuple(verdict_ids))
        return script, snapshot

    # -- pipeline stages -----------------------------------------------------

    def _interpret(self, records: list[RawSensorRecord], t: int) -> list[InteractionEvent]:
        events: list[InteractionEvent] = []
        for rec in records:
            try:
                ev = perception_mod.interpret(
                    rec, self.robot_id, self.scenario_state.active_token, self.perception
                )
            except perception_mod.RejectedRecordError as exc:
                self.errors.append(f"tick {t}: rejected record: {exc}")
                continue
            if ev is not None:
                events.append(ev)
        if any(ev.kind in RESPONSE_KINDS for ev in events):
            self._responded_since_prompt = True
        if self._prompt_timed_out(events, t):
            events.append(InteractionEvent(tick=t, kind=EventKind.TASK_RESPONSE_NONE, confidence=1.0))
            self._token_timer_start = t
        return events

    def _prompt_timed_out(self, events: list[InteractionEvent], t: int) -> bool:
        if self.scenario_state.active_token is None or self._responded_since_prompt:
            return False
        delay = self.scenario.level(self.scenario_state.difficulty_index).prompt_delay
        return t - self._token_timer_start >= delay

    def _update_engagement(self, events: list[InteractionEvent], t: int) -> None:
        self._window.extend(events)
        horizon = t - self.perception.window_ticks
        while self._window and self._window[0].tick <= horizon:
            self._window.popleft()
        estimate = perception_mod.estimate_engagement(
            self._window, now=t, window=self.perception.window_ticks, config=self.perception
        )
        self.engagement = estimate.value

    def _step_affect(self, events: list[InteractionEvent]) -> None:
        impulses = [affect_mod.appraise(ev, self.affect_config) for ev in events]
        self.mood = affect_mod.step_mood(self.mood, impulses, self._rise, dt=1)
        self.emotion = affect_mod.current_emotion(self.mood, self.affect_config)

    def _advance_scenario(self, events: list[InteractionEvent], t: int) -> None:
        for ev in events:
            before_token = self.scenario_state.active_token
            before_pending = self.scenario_state.pending
            self.scenario_state = scenario_mod.advance(
                self.scenario_state, self.scenario, ev, self.engagement
            )
            if ev.kind in RESPONSE_KINDS:
                self._scored.append(1 if ev.kind is EventKind.TASK_RESPONSE_CORRECT else 0)
            if (
                self.scenario_state.active_token != before_token
                or self.scenario_state.pending is not before_pending
            ):
                self._token_timer_start = t
                self._responded_since_prompt = False
        if len(self._scored) == self._scored.maxlen:
            performance = sum(self._scored) / len(self._scored)
            self.scenario_state = scenario_mod.adjust_difficulty(
                self.scenario_state, performance, t, self.scenario
            )

    def _generate(
        self, records: list[RawSensorRecord], t: int
    ) -> dict[str, CandidateBehavior | None]:
        stimuli = []
        for rec in records:
            if rec.channel is Channel.GAZE and rec.payload != self.robot_id:
                stimuli.append((rec.payload, rec.confidence))
            elif rec.channel in (Channel.TOUCH, Channel.AUDIO):
                stimuli.append(("user", rec.confidence))

        reactive = _merge_reactive(self.reactive.tick(stimuli, t))

        action = None
        if self.engagement >= self.scenario.theta_engage and self.mode is not ControllerMode.WIZARD_OF_OZ:
            action, self.scenario_state = self.scenario_state.take_pending()
        deliberative = behaviors_mod.select_deliberative(
            self.drives,
            action,
            self.engagement,
            self.library,
            theta_engage=self.scenario.theta_engage,
            speech_vars=self._speech_vars(),
        )
        emotional = behaviors_mod.express_emotion(self.emotion, self.library)
        return {"reactive": reactive, "deliberative": deliberative, "emotional": emotional}

    def _speech_vars(self) -> dict[str, str]:
        return {
            "token": self.scenario_state.active_token or "it",
            "user": self.user.preferences.get("name", self.user.user_id),
        }

    def _express(
        self, candidates: dict[str, CandidateBehavior | None], t: int
    ) -> tuple[MotionScript | None, str | None, dict[str, str], list[str]]:
        verdict_ids: list[str] = []

        def vetted(cand: CandidateBehavior | None) -> CandidateBehavior | None:
            if cand is None:
                return None
            verdict = monitor_mod.vet(cand, self.rules)
            verdict_ids.extend(verdict.reasons)
            return verdict.behavior(cand)

        if self.mode is ControllerMode.WIZARD_OF_OZ:
            # generated layer outputs are discarded unvetted; only overrides emit
            reactive = emotional = deliberative = None
            if self._overrides:
                tag = self._overrides.popleft()
                deliberative = vetted(
                    self.library.candidate(
                        tag, "deliberative", behaviors_mod.DELIBERATIVE_PRIORITY,
                        speech_vars=self._speech_vars(),
                    )
                )
        else:
            reactive = vetted(candidates["reactive"])
            deliberative = vetted(candidates["deliberative"])
            emotional = vetted(candidates["emotional"])
            if self.mode is ControllerMode.APPROVAL:
                if deliberative is not None:
                    queued_tags = {c.tag for _, c in self.approval_queue}
                    if deliberative.tag not in queued_tags:
                        self.approval_queue.append((f"q{self._next_queue_id}", deliberative))
                        self._next_queue_id += 1
                deliberative = self._approved.popleft() if self._approved else None

        fused = fusion_mod.fuse(reactive, deliberative, emotional, tick=t)
        if fused.is_empty:
            self._prev_intensities = {}
            return None, None, {}, verdict_ids
        modulated = fusion_mod.modulate(
            fused,
            self.mood,
            self.personality,
            intensity_caps=self._intensity_caps,
            rate_caps=self._rate_caps,
            prev_intensities=self._prev_intensities,
        )
        script = motion_mod.map_behavior(modulated, self.morphology)
        self._prev_intensities = {u.id: u.intensity for u in modulated.units}
        self._note_satisfactions(fused.tag)
        return script, fused.tag, dict(fused.provenance), verdict_ids

    def _note_satisfactions(self, joined_tag: str) -> None:
        totals: dict[str, float] = {}
        for tag in joined_tag.split("+"):
            bdef = self.library.behaviors.get(tag)
            if bdef is None:
                continue
            for drive, amount in bdef.satisfies.items():
                totals[drive] = totals.get(drive, 0.0) + amount
        self._satisfactions = totals

    def _finish_tick(
        self,
        records: list[RawSensorRecord],
        emitted_tag: str | None,
        provenance: dict[str, str],
        verdicts: tuple[str, ...],
    ) -> StateSnapshot:
        t = self.tick_index
        supervision = tuple(self._applied_commands)
        self._applied_commands = []
        rec = SessionRecord(
            tick=t,
            mode=self.mode.value,
            engagement=self.engagement,
            mood_valence=self.mood.valence,
            mood_arousal=self.mood.arousal,
            emotion=self.emotion.label,
            emotion_intensity=self.emotion.intensity,
            drives=dict(self.drives.levels),
            scenario_state=self.scenario_state.current,
            counters=dict(self.scenario_state.counters),
            difficulty=self.scenario_state.difficulty_index,
            goal_reached=self.scenario_state.goal_reached,
            behavior_tag=emitted_tag,
            provenance=provenance,
            verdicts=verdicts,
            supervision=supervision,
            events=tuple(r.to_dict() for r in records),
        )
        self.log.record(rec)
        snapshot = StateSnapshot(
            tick=t,
            mode=self.mode.value,
            mood_valence=self.mood.valence,
            mood_arousal=self.mood.arousal,
            emotion=self.emotion.label,
            emotion_intensity=self.emotion.intensity,
            engagement=self.engagement,
            drives=dict(self.drives.levels),
            scenario_id=self.scenario.id,
            scenario_state=self.scenario_state.current,
            counters=dict(self.scenario_state.counters),
            goal_reached=self.scenario_state.goal_reached,
            difficulty=self.scenario_state.difficulty_index,
            expected_token=self.scenario_state.active_token,
            behavior_tag=emitted_tag,
            provenance=provenance,
            approval_queue=tuple({"id": qid, "tag": c.tag} for qid, c in self.approval_queue),
        )
        self.tick_index += 1
        return snapshot


def _merge_reactive(cands: list[CandidateBehavior]) -> CandidateBehavior | None:
    """Collapse same-tick reactive behaviors into one candidate.

    Their AU sets are disjoint by library design, so the union is safe;
    the merged priority is the maximum of the parts.
    """
    if not cands:
        return None
    if len(cands) == 1:
        return cands[0]
    units: list = []
    seen: set[str] = set()
    for cand in cands:
        for unit in cand.units:
            if unit.id not in seen:
                seen.add(unit.id)
                units.append(unit)
    gaze = next((c.gaze_target for c in cands if c.gaze_target), None)
    return CandidateBehavior(
        source="reactive",
        units=tuple(units),
        tag="+".join(c.tag for c in cands),
        priority=max(c.priority for c in cands),
        speech=None,
        gaze_target=gaze,
    )
