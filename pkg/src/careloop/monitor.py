"""Rule-based vetting of candidate behaviors.

Every candidate passes through an ordered rule set before fusion.
Ethical rules (vocabulary, banned behaviors) veto outright; technical
intensity caps clamp; rate caps only annotate here and are enforced
during modulation, where consecutive-tick intensities are known.
Vetoes dominate clamps regardless of rule order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum
from fnmatch import fnmatchcase
from pathlib import Path

import yaml

from .behaviors import ActionUnit, CandidateBehavior


class RuleKind(str, Enum):
    ETHICAL_VOCABULARY = "ethical_vocabulary"
    ETHICAL_BEHAVIOR_BAN = "ethical_behavior_ban"
    TECHNICAL_INTENSITY_CAP = "technical_intensity_cap"
    TECHNICAL_RATE_CAP = "technical_rate_cap"


ETHICAL_KINDS = frozenset({RuleKind.ETHICAL_VOCABULARY, RuleKind.ETHICAL_BEHAVIOR_BAN})


@dataclass(slots=True, frozen=True)
class Rule:
    id: str
    kind: RuleKind
    subject: tuple[str, ...]  # word list, or a single tag / AU-id glob
    limit: float | None = None
    severity_priority: int = 0

    def __post_init__(self) -> None:
        if self.kind is RuleKind.ETHICAL_VOCABULARY and not self.subject:
            raise RuleSetError(f"rule {self.id!r}: vocabulary rule needs a non-empty word list")
        if self.kind in (RuleKind.TECHNICAL_INTENSITY_CAP, RuleKind.TECHNICAL_RATE_CAP):
            if self.limit is None or not 0.0 < self.limit <= 1.0:
                raise RuleSetError(f"rule {self.id!r}: cap rules need a limit in (0,1], got {self.limit}")


@dataclass(slots=True, frozen=True)
class Verdict:
    """Outcome of vetting one candidate."""

    outcome: str  # "Allow" | "Clamp" | "Veto"
    modified: CandidateBehavior | None = None
    reasons: tuple[str, ...] = ()
    rate_caps: tuple[tuple[str, float], ...] = ()

    def __post_init__(self) -> None:
        if self.outcome == "Clamp" and self.modified is None:
            raise ValueError("Clamp verdicts must carry the modified behavior")
        if self.outcome == "Veto" and not self.reasons:
            raise ValueError("Veto verdicts must carry at least one reason")

    def behavior(self, original: CandidateBehavior) -> CandidateBehavior | None:
        """The behavior allowed to continue, or None on veto."""
        if self.outcome == "Veto":
            return None
        return self.modified if self.modified is not None else original


class RuleSetError(ValueError):
    """Malformed rules file, reported with the offending rule id or path."""


def load_rules(path: str | Path) -> tuple[Rule, ...]:
    """Load the rules file and return rules in deterministic apply order."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict) or not isinstance(raw.get("rules"), list):
        raise RuleSetError(f"{path}: expected a top-level 'rules' list")
    rules = []
    seen: set[str] = set()
    for i, spec in enumerate(raw["rules"]):
        where = f"{path}: rules[{i}]"
        try:
            rule_id = str(spec["id"])
            kind = RuleKind(spec["kind"])
        except (KeyError, ValueError) as exc:
            raise RuleSetError(f"{where}: {exc}") from exc
        if rule_id in seen:
            raise RuleSetError(f"{where}: duplicate rule id {rule_id!r}")
        seen.add(rule_id)
        if kind is RuleKind.ETHICAL_VOCABULARY:
            subject = tuple(str(w) for w in (spec.get("words") or ()))
        else:
            subject = (str(spec.get("subject", "")),)
            if not subject[0]:
                raise RuleSetError(f"{where}: missing subject pattern")
        limit = spec.get("limit")
        rules.append(
            Rule(
                id=rule_id,
                kind=kind,
                subject=subject,
                limit=None if limit is None else float(limit),
                severity_priority=int(spec.get("severity_priority", 0)),
            )
        )
    return sort_rules(rules)


def sort_rules(rules: list[Rule] | tuple[Rule, ...]) -> tuple[Rule, ...]:
    """Deterministic total order: severity first, rule id breaks ties."""
    return tuple(sorted(rules, key=lambda r: (r.severity_priority, r.id)))


def _word_pattern(phrase: str) -> re.Pattern:
    return re.compile(r"\b" + re.escape(phrase) + r"\b", re.IGNORECASE)


def _speech_violations(speech: str, rule: Rule) -> bool:
    return any(_word_pattern(w).search(speech) for w in rule.subject)


def vet(candidate: CandidateBehavior, rules: tuple[Rule, ...]) -> Verdict:
    """Apply the rule set to one candidate.

    Idempotent: re-vetting the surviving behavior yields Allow, because
    clamps leave every intensity at or under its cap and vetoed behaviors
    do not survive.  Rules are re-sorted here so the verdict never depends
    on the caller's list order.
    """
    rules = sort_rules(rules)
    veto_reasons: list[str] = []
    clamp_reasons: list[str] = []
    rate_caps: list[tuple[str, float]] = []
    units: list[ActionUnit] = list(candidate.units)

    for rule in rules:
        if rule.kind is RuleKind.ETHICAL_VOCABULARY:
            if candidate.speech and _speech_violations(candidate.speech, rule):
                veto_reasons.append(rule.id)
        elif rule.kind is RuleKind.ETHICAL_BEHAVIOR_BAN:
            if fnmatchcase(candidate.tag, rule.subject[0]):
                veto_reasons.append(rule.id)
        elif rule.kind is RuleKind.TECHNICAL_INTENSITY_CAP:
            assert rule.limit is not None
            clamped = False
            for i, unit in enumerate(units):
                if fnmatchcase(unit.id, rule.subject[0]) and unit.intensity > rule.limit:
                    units[i] = replace(unit, intensity=rule.limit)
                    clamped = True
            if clamped:
                clamp_reasons.append(rule.id)
        elif rule.kind is RuleKind.TECHNICAL_RATE_CAP:
            assert rule.limit is not None
            rate_caps.append((rule.subject[0], rule.limit))

    if veto_reasons:
        return Verdict("Veto", reasons=tuple(veto_reasons), rate_caps=tuple(rate_caps))
    if clamp_reasons:
        modified = replace(candidate, units=tuple(units))
        return Verdict("Clamp", modified=modified, reasons=tuple(clamp_reasons), rate_caps=tuple(rate_caps))
    return Verdict("Allow", rate_caps=tuple(rate_caps))


def intensity_caps(rules: tuple[Rule, ...]) -> tuple[tuple[str, float], ...]:
    """(AU glob, limit) pairs for re-applying caps after amplitude scaling."""
    return tuple(
        (r.subject[0], r.limit)
        for r in rules
        if r.kind is RuleKind.TECHNICAL_INTENSITY_CAP and r.limit is not None
    )


def rate_caps(rules: tuple[Rule, ...]) -> tuple[tuple[str, float], ...]:
    return tuple(
        (r.subject[0], r.limit)
        for r in rules
        if r.kind is RuleKind.TECHNICAL_RATE_CAP and r.limit is not None
    )
