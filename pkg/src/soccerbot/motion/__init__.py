from .spline import JointSegment, Segment, plan_segment
from .player import Keyframe, KeyframeMotion, MotionPlayer, load_motion, save_motion
from .gait import GaitCommand, GaitState, Gait
from .head import HeadControl
from .fall import FallProtection, FallState

__all__ = [
    "JointSegment", "Segment", "plan_segment",
    "Keyframe", "KeyframeMotion", "MotionPlayer", "load_motion", "save_motion",
    "GaitCommand", "GaitState", "Gait",
    "HeadControl",
    "FallProtection", "FallState",
]
