"""Therapeutic scenario state machines.

A scenario is a flat FSM with counters: states carry entry actions
(behavior tag plus an expected answer token drawn from a difficulty-sized
token list), transitions fire on interaction-event kinds with optional
engagement guards, and a goal predicate over the counters ends the
session in a celebration state.  Guard disjointness is verified at load
so at most one transition can ever fire per event, and goal reachability
can be certified by a bounded brute-force search over event sequences.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .perception import EventKind, InteractionEvent


class ScenarioError(ValueError):
    """Malformed scenario definition; message carries the field path."""


@dataclass(slots=True, frozen=True)
class Guard:
    """Engagement interval [engagement_min, engagement_max)."""

    engagement_min: float = 0.0
    engagement_max: float = math.inf

    def admits(self, engagement: float) -> bool:
        return self.engagement_min <= engagement < self.engagement_max

    def overlaps(self, other: "Guard") -> bool:
        return self.engagement_min < other.engagement_max and other.engagement_min < self.engagement_max


@dataclass(slots=True, frozen=True)
class StateDef:
    name: str
    action: str | None = None           # behavior tag emitted on entry
    tokens: tuple[str, ...] = ()        # expected-answer pool; empty = inherit active token
    gaze_token: bool = False            # entry action gazes at the active token's stimulus


@dataclass(slots=True, frozen=True)
class Transition:
    source: str
    on: EventKind
    target: str
    guard: Guard = Guard()
    count: dict[str, int] = field(default_factory=dict)


@dataclass(slots=True, frozen=True)
class DifficultyLevel:
    prompt_delay: int      # ticks to wait for a task response before scoring a miss
    token_set_size: int


@dataclass(slots=True, frozen=True)
class Scenario:
    id: str
    states: dict[str, StateDef]
    transitions: tuple[Transition, ...]
    initial: str
    goal_counter: str
    goal_at_least: int
    goal_state: str
    goal_action: str
    counters: tuple[str, ...]
    difficulty: tuple[DifficultyLevel, ...]
    theta_engage: float = 0.3
    perception_overrides: dict = field(default_factory=dict)

    def level(self, index: int) -> DifficultyLevel:
        return self.difficulty[index]


@dataclass(slots=True, frozen=True)
class ScenarioAction:
    """What the deliberation layer should do next for the scenario."""

    tag: str
    expected_token: str | None = None
    gaze_target: str | None = None


@dataclass(slots=True, frozen=True)
class ScenarioState:
    current: str
    counters: dict[str, int]
    difficulty_index: int = 0
    goal_reached: bool = False
    pending: ScenarioAction | None = None
    active_token: str | None = None
    visits: dict[str, int] = field(default_factory=dict)
    last_difficulty_change: int = -1_000_000

    def take_pending(self) -> tuple[ScenarioAction | None, "ScenarioState"]:
        """Consume the pending entry action (emitted or queued at most once)."""
        if self.pending is None:
            return None, self
        return self.pending, replace(self, pending=None)

    def restore_pending(self, action: ScenarioAction) -> "ScenarioState":
        return replace(self, pending=action)


HYSTERESIS_TICKS = 100
DIFFICULTY_UP_AT = 0.8
DIFFICULTY_DOWN_AT = 0.3


def load_scenario(path: str | Path) -> Scenario:
    """Load, validate, and disjointness-check a scenario file."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: expected a mapping at top level")

    states: dict[str, StateDef] = {}
    for name, spec in (raw.get("states") or {}).items():
        spec = spec or {}
        states[name] = StateDef(
            name=name,
            action=spec.get("action"),
            tokens=tuple(str(t) for t in (spec.get("tokens") or ())),
            gaze_token=bool(spec.get("gaze_token", False)),
        )
    if not states:
        raise ScenarioError(f"{path}: states: empty")

    counters = tuple(str(c) for c in (raw.get("counters") or ()))

    transitions: list[Transition] = []
    for i, spec in enumerate(raw.get("transitions") or ()):
        where = f"{path}: transitions[{i}]"
        try:
            source, target = str(spec["from"]), str(spec["to"])
            on = EventKind(spec["event"])
        except (KeyError, ValueError) as exc:
            raise ScenarioError(f"{where}: {exc}") from exc
        for endpoint, label in ((source, "from"), (target, "to")):
            if endpoint not in states:
                raise ScenarioError(f"{where}.{label}: unknown state {endpoint!r}")
        guard_spec = spec.get("guard") or {}
        guard = Guard(
            engagement_min=float(guard_spec.get("engagement_min", 0.0)),
            engagement_max=float(guard_spec.get("engagement_max", math.inf)),
        )
        count = {str(k): int(v) for k, v in (spec.get("count") or {}).items()}
        for counter in count:
            if counter not in counters:
                raise ScenarioError(f"{where}.count: undeclared counter {counter!r}")
        transitions.append(Transition(source=source, on=on, target=target, guard=guard, count=count))

    initial = raw.get("initial")
    if initial not in states:
        raise ScenarioError(f"{path}: initial: unknown state {initial!r}")

    goal = raw.get("goal") or {}
    goal_counter = goal.get("counter")
    if goal_counter not in counters:
        raise ScenarioError(f"{path}: goal.counter: undeclared counter {goal_counter!r}")
    goal_state = raw.get("goal_state")
    if goal_state not in states:
        raise ScenarioError(f"{path}: goal_state: unknown state {goal_state!r}")

    levels = tuple(
        DifficultyLevel(prompt_delay=int(l["prompt_delay"]), token_set_size=int(l["token_set_size"]))
        for l in (raw.get("difficulty") or ())
    )
    if not levels:
        raise ScenarioError(f"{path}: difficulty: at least one level required")

    scenario = Scenario(
        id=str(raw.get("id") or Path(path).stem),
        states=states,
        transitions=tuple(transitions),
        initial=str(initial),
        goal_counter=str(goal_counter),
        goal_at_least=int(goal.get("at_least", 1)),
        goal_state=str(goal_state),
        goal_action=str(raw.get("goal_action", "celebrate_goal")),
        counters=counters,
        difficulty=levels,
        theta_engage=float(raw.get("theta_engage", 0.3)),
        perception_overrides=dict(raw.get("perception") or {}),
    )
    check_guard_disjointness(scenario, source=str(path))
    return scenario


def check_guard_disjointness(scenario: Scenario, source: str = "") -> None:
    """Reject scenarios where two transitions could fire for one event."""
    groups: dict[tuple[str, EventKind], list[Transition]] = {}
    for t in scenario.transitions:
        groups.setdefault((t.source, t.on), []).append(t)
    for (state, kind), ts in groups.items():
        for i in range(len(ts)):
            for j in range(i + 1, len(ts)):
                if ts[i].guard.overlaps(ts[j].guard):
                    raise ScenarioError(
                        f"{source}: transitions from {state!r} on {kind.value} have overlapping guards"
                    )


def initial_state(scenario: Scenario) -> ScenarioState:
    state = ScenarioState(
        current=scenario.initial,
        counters={c: 0 for c in scenario.counters},
        visits={scenario.initial: 1},
    )
    return _enter(state, scenario, scenario.states[scenario.initial])


def _enter(state: ScenarioState, scenario: Scenario, sdef: StateDef) -> ScenarioState:
    """Apply a state's entry effects: token rotation and pending action."""
    token = state.active_token
    if sdef.tokens:
        size = min(len(sdef.tokens), scenario.level(state.difficulty_index).token_set_size)
        token = sdef.tokens[(state.visits.get(sdef.name, 1) - 1) % size]
    if sdef.action is None:
        return replace(state, active_token=token)
    action = ScenarioAction(
        tag=sdef.action,
        expected_token=token,
        gaze_target=token if sdef.gaze_token else None,
    )
    return replace(state, active_token=token, pending=action)


def advance(
    state: ScenarioState,
    scenario: Scenario,
    event: InteractionEvent,
    engagement: float,
) -> ScenarioState:
    """Fire the unique matching transition, if any.

    Guard disjointness was verified at load, so scanning in declaration
    order finds at most one admissible transition.  Counters update per
    the transition's annotations; reaching the goal jumps to the terminal
    goal state and queues the celebration action.  goal_reached never
    reverts.
    """
    fired = None
    for t in scenario.transitions:
        if t.source == state.current and t.on is event.kind and t.guard.admits(engagement):
            fired = t
            break
    if fired is None:
        return state

    counters = dict(state.counters)
    for counter, delta in fired.count.items():
        counters[counter] = max(0, counters[counter] + delta)

    visits = dict(state.visits)
    visits[fired.target] = visits.get(fired.target, 0) + 1
    state = replace(state, current=fired.target, counters=counters, visits=visits)
    state = _enter(state, scenario, scenario.states[fired.target])

    if not state.goal_reached and counters[scenario.goal_counter] >= scenario.goal_at_least:
        visits = dict(state.visits)
        visits[scenario.goal_state] = visits.get(scenario.goal_state, 0) + 1
        state = replace(
            state,
            goal_reached=True,
            current=scenario.goal_state,
            visits=visits,
            pending=ScenarioAction(tag=scenario.goal_action, expected_token=state.active_token),
        )
    return state


def adjust_difficulty(
    state: ScenarioState,
    performance: float,
    now_tick: int,
    scenario: Scenario,
) -> ScenarioState:
    """Step the difficulty level on sustained very good or very poor performance.

    At most one change per 100 ticks; the dead band between the two
    thresholds leaves the level alone.
    """
    if now_tick - state.last_difficulty_change < HYSTERESIS_TICKS:
        return state
    index = state.difficulty_index
    if performance >= DIFFICULTY_UP_AT:
        index = min(index + 1, len(scenario.difficulty) - 1)
    elif performance <= DIFFICULTY_DOWN_AT:
        index = max(index - 1, 0)
    if index == state.difficulty_index:
        return state
    return replace(state, difficulty_index=index, last_difficulty_change=now_tick)


def set_difficulty(state: ScenarioState, index: int, now_tick: int, scenario: Scenario) -> ScenarioState:
    """Supervisor override; clamped to the declared levels."""
    index = max(0, min(index, len(scenario.difficulty) - 1))
    return replace(state, difficulty_index=index, last_difficulty_change=now_tick)


def goal_reachable(scenario: Scenario, max_depth: int = 30) -> list[tuple[EventKind, float]] | None:
    """Brute-force search for a goal-reaching event sequence.

    Explores (state, capped counters) nodes breadth-first; each transition
    is driven with an engagement value inside its guard.  Returns the
    (event kind, engagement) sequence that reaches the goal, or None.
    """
    cap = scenario.goal_at_least

    def key(state: ScenarioState) -> tuple:
        return (state.current, tuple(min(cap, state.counters[c]) for c in scenario.counters))

    start = initial_state(scenario)
    seen = {key(start)}
    queue: deque[tuple[ScenarioState, list[tuple[EventKind, float]]]] = deque([(start, [])])
    while queue:
        state, path = queue.popleft()
        if state.goal_reached:
            return path
        if len(path) >= max_depth:
            continue
        for t in scenario.transitions:
            if t.source != state.current:
                continue
            engagement = _guard_witness(t.guard)
            ev = InteractionEvent(tick=len(path), kind=t.on, confidence=1.0)
            nxt = advance(state, scenario, ev, engagement)
            k = key(nxt)
            if k not in seen:
                seen.add(k)
                queue.append((nxt, path + [(t.on, engagement)]))
    return None


def _guard_witness(guard: Guard) -> float:
    hi = min(guard.engagement_max, 1.0)
    if guard.engagement_min >= hi:
        return guard.engagement_min
    return (guard.engagement_min + hi) / 2.0
