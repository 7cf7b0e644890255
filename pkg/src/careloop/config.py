"""Bundled data resolution and session assembly."""

from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .affect import AffectConfig, load_affect_config
from .behaviors import BehaviorLibrary, load_library
from .controller import Controller, ControllerMode
from .memory import UserProfile, load_profile
from .monitor import Rule, load_rules
from .motion import RobotMorphology, load_morphology
from .scenario import Scenario, load_scenario

DATA_DIR_ENV = "CARELOOP_DATA_DIR"


def data_path(*parts: str) -> Path:
    """Path to a file bundled with the package."""
    return Path(str(resources.files("careloop").joinpath("data", *parts)))


def output_dir(explicit: str | None = None) -> Path:
    """Where session artifacts land: flag > env var > ./careloop_data."""
    if explicit:
        return Path(explicit)
    return Path(os.environ.get(DATA_DIR_ENV, "careloop_data"))


def bundled_scenarios() -> dict[str, Path]:
    root = data_path("scenarios")
    return {p.stem: p for p in sorted(root.glob("*.yaml"))}


def bundled_morphologies() -> dict[str, Path]:
    root = data_path("morphologies")
    return {p.stem: p for p in sorted(root.glob("*.yaml"))}


def bundled_personas() -> dict[str, Path]:
    root = data_path("personas")
    return {p.stem: p for p in sorted(root.glob("*.yaml"))}


def _resolve(arg: str | Path, catalog: dict[str, Path]) -> Path:
    """Accept either a bundled name or a filesystem path."""
    if isinstance(arg, str) and arg in catalog:
        return catalog[arg]
    path = Path(arg)
    if not path.exists():
        known = ", ".join(sorted(catalog))
        raise FileNotFoundError(f"{arg!r} is neither a file nor a bundled name (bundled: {known})")
    return path


@dataclass(slots=True)
class AppConfig:
    tick_period_ms: int = 100
    behaviors_path: Path = None  # type: ignore[assignment]
    rules_path: Path = None  # type: ignore[assignment]
    affect_path: Path = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.behaviors_path is None:
            self.behaviors_path = data_path("behaviors.yaml")
        if self.rules_path is None:
            self.rules_path = data_path("rules.yaml")
        if self.affect_path is None:
            self.affect_path = data_path("affect.yaml")


def load_app_config(path: str | Path | None = None) -> AppConfig:
    if path is None:
        return AppConfig()
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    cfg = AppConfig(tick_period_ms=int(raw.get("tick_period_ms", 100)))
    for key, attr in (("behaviors", "behaviors_path"), ("rules", "rules_path"), ("affect", "affect_path")):
        if raw.get(key):
            setattr(cfg, attr, Path(raw[key]))
    return cfg


@dataclass(slots=True)
class SessionAssets:
    scenario: Scenario
    morphology: RobotMorphology
    library: BehaviorLibrary
    rules: tuple[Rule, ...]
    affect: AffectConfig
    user: UserProfile
    scenario_catalog: dict[str, Scenario]


def load_assets(
    scenario: str | Path,
    robot: str | Path,
    user: str | Path | None = None,
    app: AppConfig | None = None,
) -> SessionAssets:
    app = app or AppConfig()
    catalog = {name: load_scenario(p) for name, p in bundled_scenarios().items()}
    scenario_path = _resolve(scenario, bundled_scenarios())
    chosen = load_scenario(scenario_path)
    catalog[chosen.id] = chosen
    morphology = load_morphology(_resolve(robot, bundled_morphologies()))
    library = load_library(app.behaviors_path)
    _check_references(chosen, library)
    for extra in catalog.values():
        _check_references(extra, library)
    return SessionAssets(
        scenario=chosen,
        morphology=morphology,
        library=library,
        rules=load_rules(app.rules_path),
        affect=load_affect_config(app.affect_path),
        user=load_profile(user) if user else UserProfile(user_id="anonymous"),
        scenario_catalog=catalog,
    )


def _check_references(scenario: Scenario, library: BehaviorLibrary) -> None:
    """Scenario entry actions must name behaviors that actually exist."""
    tags = [s.action for s in scenario.states.values() if s.action] + [scenario.goal_action]
    for tag in tags:
        if tag not in library.behaviors:
            raise ValueError(f"scenario {scenario.id!r} references unknown behavior {tag!r}")


def build_controller(
    assets: SessionAssets,
    seed: int = 0,
    mode: ControllerMode = ControllerMode.AUTONOMOUS,
    session_id: str = "session",
) -> Controller:
    return Controller(
        scenario=assets.scenario,
        morphology=assets.morphology,
        library=assets.library,
        rules=assets.rules,
        user=assets.user,
        seed=seed,
        mode=mode,
        affect_config=assets.affect,
        session_id=session_id,
        scenario_catalog=assets.scenario_catalog,
    )
