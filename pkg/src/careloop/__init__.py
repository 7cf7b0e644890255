"""careloop: a supervised closed-loop behavior controller for therapy robots.

Platform-independent behaviors are generated by three layers (reactive,
deliberative, emotional), vetted against ethical and technical rules,
fused, affect-modulated, and retargeted onto a robot morphology, all
under live therapist supervision and validated against scripted user
personas in a deterministic simulation harness.
"""

__version__ = "0.1.0"

from .affect import (  # noqa: F401
    AffectConfig,
    Appraisal,
    EmotionState,
    MoodState,
    PersonalityProfile,
    adapt_personality,
    appraise,
    current_emotion,
    step_mood,
)
from .behaviors import (  # noqa: F401
    ActionUnit,
    BehaviorLibrary,
    CandidateBehavior,
    DriveState,
    ReactiveLayer,
    drive_step,
    express_emotion,
    load_library,
    select_deliberative,
)
from .controller import (  # noqa: F401
    Ack,
    Controller,
    ControllerMode,
    StateSnapshot,
    SupervisionCommand,
)
from .fusion import AbstractBehavior, fuse, modulate  # noqa: F401
from .memory import SessionLog, SessionRecord, UserProfile, export, update_history  # noqa: F401
from .monitor import Rule, Verdict, load_rules, vet  # noqa: F401
from .motion import MotionScript, RobotMorphology, load_morphology, map_behavior  # noqa: F401
from .perception import (  # noqa: F401
    EngagementEstimate,
    EventKind,
    InteractionEvent,
    RawSensorRecord,
    estimate_engagement,
    interpret,
)
from .scenario import Scenario, ScenarioState, advance, adjust_difficulty, load_scenario  # noqa: F401
from .sim import Persona, load_persona, persona_step, run_session  # noqa: F401
