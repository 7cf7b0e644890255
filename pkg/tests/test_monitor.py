import random

import pytest
from hypothesis import given, settings, strategies as st

from careloop.behaviors import ActionUnit, CandidateBehavior
from careloop.config import data_path
from careloop.monitor import (
    Rule,
    RuleKind,
    RuleSetError,
    intensity_caps,
    load_rules,
    rate_caps,
    sort_rules,
    vet,
)


@pytest.fixture(scope="module")
def rules():
    return load_rules(data_path("rules.yaml"))


def candidate(tag="wave_hello", units=(), speech=None, source="deliberative", priority=0.8):
    return CandidateBehavior(source=source, units=tuple(units), tag=tag, priority=priority, speech=speech)


class TestVet:
    def test_blacklisted_word_vetoed(self, rules):
        verdict = vet(candidate(speech="That was stupid."), rules)
        assert verdict.outcome == "Veto"
        assert "vocab_blacklist" in verdict.reasons
        assert verdict.behavior(candidate()) is None

    def test_word_boundary_not_substring(self, rules):
        # "stupidity" contains the blacklisted word only as a substring
        verdict = vet(candidate(speech="a stupidity-free zone"), rules)
        assert verdict.outcome == "Allow"

    def test_case_insensitive_and_multiword(self, rules):
        assert vet(candidate(speech="STUPID robot"), rules).outcome == "Veto"
        assert vet(candidate(speech="you are a Bad Boy"), rules).outcome == "Veto"

    def test_banned_tag_glob(self, rules):
        verdict = vet(candidate(tag="scold_user"), rules)
        assert verdict.outcome == "Veto" and "ban_scolding" in verdict.reasons

    def test_intensity_cap_clamps(self):
        rule = Rule(id="cap", kind=RuleKind.TECHNICAL_INTENSITY_CAP, subject=("face.*",), limit=0.6)
        cand = candidate(units=[ActionUnit("face.smile", 0.9)])
        verdict = vet(cand, (rule,))
        assert verdict.outcome == "Clamp"
        assert verdict.reasons == ("cap",)
        assert verdict.modified.units[0].intensity == 0.6

    def test_under_cap_untouched(self):
        rule = Rule(id="cap", kind=RuleKind.TECHNICAL_INTENSITY_CAP, subject=("face.*",), limit=0.6)
        verdict = vet(candidate(units=[ActionUnit("face.smile", 0.5)]), (rule,))
        assert verdict.outcome == "Allow"

    def test_empty_candidate_allowed(self, rules):
        assert vet(candidate(), rules).outcome == "Allow"

    def test_veto_dominates_clamp(self, rules):
        cand = candidate(speech="shut up", units=[ActionUnit("face.smile", 1.0)])
        verdict = vet(cand, rules)
        assert verdict.outcome == "Veto"

    def test_rate_caps_annotated_on_any_outcome(self, rules):
        verdict = vet(candidate(), rules)
        assert ("*", 0.5) in verdict.rate_caps


UNITS = st.lists(
    st.builds(
        ActionUnit,
        id=st.sampled_from(["face.smile", "face.frown", "body.wave", "body.arms_raise", "body.point"]),
        intensity=st.floats(min_value=0, max_value=1, allow_nan=False),
        duration=st.integers(min_value=1, max_value=20),
    ),
    max_size=5,
    unique_by=lambda u: u.id,
)
SPEECH = st.one_of(
    st.none(),
    st.sampled_from(
        ["hello there", "you are stupid", "well done", "do not be lazy", "great job team"]
    ),
)
TAGS = st.sampled_from(["greet_wave", "scold_user", "grab_toy", "prompt_turn", "pose_sadness"])


class TestVetProperties:
    @given(units=UNITS, speech=SPEECH, tag=TAGS)
    @settings(max_examples=150)
    def test_idempotent(self, units, speech, tag):
        rules = load_rules(data_path("rules.yaml"))
        cand = candidate(tag=tag, units=units, speech=speech)
        first = vet(cand, rules)
        survivor = first.behavior(cand)
        if survivor is None:
            assert first.outcome == "Veto"
            return
        second = vet(survivor, rules)
        assert second.outcome == "Allow"

    @given(units=UNITS, speech=SPEECH, tag=TAGS, seed=st.integers(min_value=0, max_value=2**16))
    @settings(max_examples=80)
    def test_verdict_independent_of_rule_order(self, units, speech, tag, seed):
        rules = list(load_rules(data_path("rules.yaml")))
        cand = candidate(tag=tag, units=units, speech=speech)
        baseline = vet(cand, tuple(rules))
        random.Random(seed).shuffle(rules)
        shuffled = vet(cand, tuple(rules))
        assert shuffled.outcome == baseline.outcome
        assert shuffled.reasons == baseline.reasons
        if baseline.modified is not None:
            assert shuffled.modified == baseline.modified


class TestRuleLoading:
    def test_shipped_rules_sorted(self, rules):
        assert rules == sort_rules(list(rules))
        assert [r.id for r in rules][:1] == ["vocab_blacklist"]

    def test_cap_helpers(self, rules):
        caps = dict(intensity_caps(rules))
        assert caps["face.*"] == 0.85
        assert dict(rate_caps(rules))["*"] == 0.5

    def test_missing_limit_rejected(self, tmp_path):
        bad = tmp_path / "rules.yaml"
        bad.write_text("rules:\n  - {id: c1, kind: technical_intensity_cap, subject: 'face.*'}\n")
        with pytest.raises(RuleSetError):
            load_rules(bad)

    def test_empty_word_list_rejected(self, tmp_path):
        bad = tmp_path / "rules.yaml"
        bad.write_text("rules:\n  - {id: v1, kind: ethical_vocabulary, words: []}\n")
        with pytest.raises(RuleSetError):
            load_rules(bad)

    def test_duplicate_id_rejected(self, tmp_path):
        bad = tmp_path / "rules.yaml"
        bad.write_text(
            "rules:\n"
            "  - {id: b1, kind: ethical_behavior_ban, subject: 'x*'}\n"
            "  - {id: b1, kind: ethical_behavior_ban, subject: 'y*'}\n"
        )
        with pytest.raises(RuleSetError):
            load_rules(bad)

    def test_unknown_kind_rejected(self, tmp_path):
        bad = tmp_path / "rules.yaml"
        bad.write_text("rules:\n  - {id: u1, kind: telepathy_ban, subject: 'x'}\n")
        with pytest.raises(RuleSetError):
            load_rules(bad)

    def test_verdict_invariants(self):
        from careloop.monitor import Verdict

        with pytest.raises(ValueError):
            Verdict("Clamp")
        with pytest.raises(ValueError):
            Verdict("Veto")
