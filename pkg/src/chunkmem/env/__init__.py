from .core import (
    GOAL_COMPLETED,
    INVALID_ACTION_OBSERVATION,
    Domain,
    EnvState,
    Fact,
    GoalSpec,
    GroundAction,
    MetaAction,
    NormalizedAction,
    StepOutcome,
    Unparseable,
)
from .instances import (
    DOMAINS,
    GOAL_PREFIX,
    InstanceError,
    Task,
    UnknownDomain,
    bundled_instances,
    get_domain,
    load_domain,
    parse_instance,
    reference_plan,
    transcript_pairs,
)

__all__ = [
    "DOMAINS",
    "GOAL_COMPLETED",
    "GOAL_PREFIX",
    "INVALID_ACTION_OBSERVATION",
    "Domain",
    "EnvState",
    "Fact",
    "GoalSpec",
    "GroundAction",
    "InstanceError",
    "MetaAction",
    "NormalizedAction",
    "StepOutcome",
    "Task",
    "UnknownDomain",
    "Unparseable",
    "bundled_instances",
    "get_domain",
    "load_domain",
    "parse_instance",
    "reference_plan",
    "transcript_pairs",
]
