from .statectrl import (ADVANCE, STAY, TERMINATE, ConfigurationError, State,
                        StateController, jump)
from .framework import (ActuatorOutputs, Behavior, BehaviorLayer,
                        BehaviorStack, Contribution, Inhibition, SensorView,
                        merge_contributions)
from .skills import (SkillConfig, build_stack, go_behind_ball_target,
                     kick_decision, walk_command)
from .node import BehaviorNode, BehaviorNodeConfig

__all__ = [
    "ADVANCE", "STAY", "TERMINATE", "ConfigurationError", "State",
    "StateController", "jump",
    "ActuatorOutputs", "Behavior", "BehaviorLayer", "BehaviorStack",
    "Contribution", "Inhibition", "SensorView", "merge_contributions",
    "SkillConfig", "build_stack", "go_behind_ball_target", "kick_decision",
    "walk_command",
    "BehaviorNode", "BehaviorNodeConfig",
]
