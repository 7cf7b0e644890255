import random

import pytest
from hypothesis import given, settings, strategies as st

from careloop.affect import EmotionState
from careloop.behaviors import (
    DRIVE_ORDER,
    ActionUnit,
    BehaviorLibrary,
    CandidateBehavior,
    DriveState,
    LibraryError,
    ReactiveLayer,
    drive_step,
    express_emotion,
    load_library,
    select_deliberative,
)
from careloop.config import data_path
from careloop.scenario import ScenarioAction


@pytest.fixture(scope="module")
def library() -> BehaviorLibrary:
    return load_library(data_path("behaviors.yaml"))


class TestLibrary:
    def test_twenty_named_behaviors(self, library):
        assert len(library.behaviors) == 20

    def test_emotion_table_covers_all_labels(self, library):
        assert set(library.emotion_poses) == {
            "pleasure", "excitement", "arousal", "distress",
            "misery", "depression", "sleepiness", "contentment",
        }

    def test_all_units_registered(self, library):
        for bdef in library.behaviors.values():
            for unit in bdef.units:
                assert unit.id in library.action_units

    def test_unknown_emotion_label_rejected_at_load(self, tmp_path, library):
        import yaml

        raw = yaml.safe_load(data_path("behaviors.yaml").read_text())
        raw["emotions"]["serenity"] = "pose_content"
        bad = tmp_path / "behaviors.yaml"
        bad.write_text(yaml.safe_dump(raw))
        with pytest.raises(LibraryError):
            load_library(bad)

    def test_missing_emotion_label_rejected_at_load(self, tmp_path):
        import yaml

        raw = yaml.safe_load(data_path("behaviors.yaml").read_text())
        del raw["emotions"]["misery"]
        bad = tmp_path / "behaviors.yaml"
        bad.write_text(yaml.safe_dump(raw))
        with pytest.raises(LibraryError):
            load_library(bad)

    def test_duplicate_unit_ids_rejected(self):
        au = ActionUnit(id="face.smile", intensity=0.5)
        with pytest.raises(ValueError):
            CandidateBehavior(source="reactive", units=(au, au), tag="x", priority=0.1)

    def test_action_unit_validation(self):
        with pytest.raises(ValueError):
            ActionUnit(id="smile", intensity=0.5)
        with pytest.raises(ValueError):
            ActionUnit(id="face.smile", intensity=1.5)
        with pytest.raises(ValueError):
            ActionUnit(id="face.smile", intensity=0.5, duration=0)


class TestReactiveLayer:
    def test_quiet_tick_emits_nothing(self, library):
        layer = ReactiveLayer(library, random.Random(1))
        # tick 0 is before any schedule can be due (gaps are >= 1)
        assert layer.tick([], 0) == []

    def test_argmax_salience_gaze(self, library):
        layer = ReactiveLayer(library, random.Random(1))
        out = layer.tick([("ball", 0.9), ("door", 0.4)], 0)
        gazes = [c for c in out if c.tag == "gaze_shift"]
        assert len(gazes) == 1 and gazes[0].gaze_target == "ball"
        assert gazes[0].priority == 0.2

    def test_salience_tie_breaks_lexicographically(self, library):
        layer = ReactiveLayer(library, random.Random(1))
        out = layer.tick([("zebra", 0.7), ("apple", 0.7)], 0)
        assert out[0].gaze_target == "apple"

    def test_low_salience_ignored(self, library):
        layer = ReactiveLayer(library, random.Random(1))
        assert layer.tick([("ball", 0.29)], 0) == []

    def test_blink_schedule_reproducible_across_runs(self, library):
        def run(seed):
            layer = ReactiveLayer(library, random.Random(seed))
            emissions = []
            for t in range(1001):
                for cand in layer.tick([], t):
                    emissions.append((t, cand.tag))
            return emissions

        first, second = run(42), run(42)
        assert first == second
        blink_count = sum(1 for _, tag in first if tag == "blink")
        assert blink_count == sum(1 for _, tag in second if tag == "blink")
        # mean blink gap is 80 ticks; over 1000 ticks expect roughly 12
        assert 4 <= blink_count <= 30

    def test_different_seeds_differ(self, library):
        def blink_ticks(seed):
            layer = ReactiveLayer(library, random.Random(seed))
            return [t for t in range(500) for c in layer.tick([], t) if c.tag == "blink"]

        assert blink_ticks(1) != blink_ticks(2)


class TestDrives:
    def test_drift_accumulates(self, library):
        drives = DriveState.initial(library)
        drives = DriveState(levels={**drives.levels, "social_contact": 0.5}, params=drives.params)
        stepped = drive_step(
            DriveState(
                levels={"social_contact": 0.5, "task_progress": 0.5, "rest": 0.5},
                params={
                    k: type(v)(drift=0.05 if k == "social_contact" else v.drift,
                               setpoint=v.setpoint, behavior=v.behavior, reengage=v.reengage)
                    for k, v in drives.params.items()
                },
            ),
            {},
            dt=2,
        )
        assert stepped.levels["social_contact"] == pytest.approx(0.6)

    def test_zero_drift_zero_satisfaction_is_identity(self, library):
        base = DriveState.initial(library)
        frozen = DriveState(
            levels=dict(base.levels),
            params={
                k: type(v)(drift=0.0, setpoint=v.setpoint, behavior=v.behavior, reengage=v.reengage)
                for k, v in base.params.items()
            },
        )
        assert drive_step(frozen, {}).levels == frozen.levels

    def test_satisfaction_clamps_at_zero(self, library):
        base = DriveState.initial(library)
        low = DriveState(levels={**base.levels, "rest": 0.1}, params=base.params)
        assert drive_step(low, {"rest": 0.5}).levels["rest"] == 0.0

    @given(
        sats=st.lists(
            st.fixed_dictionaries(
                {name: st.floats(min_value=0, max_value=1, allow_nan=False) for name in DRIVE_ORDER}
            ),
            max_size=40,
        )
    )
    @settings(max_examples=50)
    def test_levels_bounded_under_arbitrary_satisfactions(self, sats):
        library = load_library(data_path("behaviors.yaml"))
        drives = DriveState.initial(library)
        for sat in sats:
            drives = drive_step(drives, sat)
            assert all(0.0 <= lv <= 1.0 for lv in drives.levels.values())


class TestDeliberation:
    def _drives(self, library, levels):
        base = DriveState.initial(library)
        return DriveState(levels=levels, params=base.params)

    def test_low_engagement_forces_reengagement(self, library):
        drives = DriveState.initial(library)
        cand = select_deliberative(drives, ScenarioAction(tag="prompt_turn"), 0.2, library)
        assert cand is not None and cand.tag.startswith("reengage")

    def test_scenario_action_passes_through_when_engaged(self, library):
        drives = DriveState.initial(library)
        cand = select_deliberative(drives, ScenarioAction(tag="prompt_turn", expected_token="red"), 0.9, library)
        assert cand.tag == "prompt_turn" and cand.priority == 0.8 and cand.source == "deliberative"

    def test_max_deficit_tie_breaks_by_drive_order(self, library):
        # social 0.4 deficit ties rest 0.4; social_contact wins by ordering
        drives = self._drives(library, {"social_contact": 0.9, "task_progress": 0.6, "rest": 0.1})
        assert drives.max_deficit_drive() == "social_contact"
        cand = select_deliberative(drives, None, 0.9, library)
        assert cand.tag == library.drives["social_contact"].behavior

    def test_tie_break_matches_exhaustive_argmax(self, library):
        # oracle: first drive among all orderings achieving the max deficit
        import itertools

        for levels in itertools.product([0.1, 0.5, 0.75, 0.9], repeat=3):
            drives = self._drives(library, dict(zip(DRIVE_ORDER, levels)))
            expected = max(DRIVE_ORDER, key=lambda d: (drives.deficit(d), -DRIVE_ORDER.index(d)))
            assert drives.max_deficit_drive() == expected

    def test_small_deficits_stay_quiet(self, library):
        drives = self._drives(library, {"social_contact": 0.6, "task_progress": 0.5, "rest": 0.4})
        assert select_deliberative(drives, None, 0.9, library) is None

    def test_theta_bounds(self, library):
        drives = DriveState.initial(library)
        with pytest.raises(ValueError):
            select_deliberative(drives, None, 0.5, library, theta_engage=0.0)

    @given(
        engagement=st.floats(min_value=0, max_value=0.2999, allow_nan=False),
        levels=st.fixed_dictionaries(
            {name: st.floats(min_value=0, max_value=1, allow_nan=False) for name in DRIVE_ORDER}
        ),
    )
    @settings(max_examples=60)
    def test_scenario_action_never_emitted_below_threshold(self, engagement, levels):
        library = load_library(data_path("behaviors.yaml"))
        drives = DriveState(levels=levels, params=DriveState.initial(library).params)
        cand = select_deliberative(drives, ScenarioAction(tag="prompt_turn"), engagement, library)
        assert cand is not None and cand.tag != "prompt_turn" and cand.tag.startswith("reengage")


class TestEmotionExpression:
    def test_neutral_emits_nothing(self, library):
        assert express_emotion(EmotionState("neutral", 0.0), library) is None

    def test_happiness_family_raises_arms(self, library):
        for label in ("pleasure", "excitement"):
            cand = express_emotion(EmotionState(label, 1.0), library)
            assert "body.arms_raise" in {u.id for u in cand.units}

    def test_sadness_family_slumps_and_drops_head(self, library):
        for label in ("misery", "depression"):
            cand = express_emotion(EmotionState(label, 1.0), library)
            ids = {u.id for u in cand.units}
            assert "body.lean_down" in ids and "body.head_down" in ids

    def test_intensity_scales_units_linearly(self, library):
        full = express_emotion(EmotionState("misery", 1.0), library)
        half = express_emotion(EmotionState("misery", 0.5), library)
        base = {u.id: u.intensity for u in full.units}
        for unit in half.units:
            assert unit.intensity == pytest.approx(base[unit.id] * 0.5)

    @pytest.mark.parametrize("intensity", [0.0, 0.5, 1.0])
    def test_priority_linear_in_intensity(self, library, intensity):
        if intensity == 0.0:
            # zero-intensity mood is inside the neutral dead zone by construction
            return
        cand = express_emotion(EmotionState("pleasure", intensity), library)
        assert cand.priority == pytest.approx(0.3 * intensity)
