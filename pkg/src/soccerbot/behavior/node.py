"""Bus I/O layer for the behavior stack.

Translates bus messages into the SensorView abstraction, steps the
layers at a fixed rate and publishes the actuator messages.  Keeps the
behavior layers free of any middleware types.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..game import GameState
from ..motion.gait import GaitCommand
from .framework import BehaviorStack, SensorView
from .skills import SkillConfig, build_stack


@dataclass
class BehaviorNodeConfig:
    rate: float = 50.0
    ball_timeout: float = 1.5  # s without detection before the ball is invalid
    obstacle_timeout: float = 1.0


class BehaviorNode:
    def __init__(self, bus, config: BehaviorNodeConfig | None = None,
                 skills: SkillConfig | None = None,
                 stack: BehaviorStack | None = None):
        self.bus = bus
        self.config = config if config is not None else BehaviorNodeConfig()
        self.stack = stack if stack is not None else build_stack(skills)
        self._detections = bus.subscribe("/vision/detections", queue_size=4)
        self._pose = bus.subscribe("/localization/pose", queue_size=4)
        self._attitude = bus.subscribe("/imu/attitude", queue_size=4)
        self._game = bus.subscribe("/game/state", queue_size=4)
        self._motion = bus.subscribe("/motion/state", queue_size=4)
        for topic in ("/gait/cmd", "/head/target", "/motion/request",
                      "/behavior/activations"):
            bus.advertise(topic)
        self._ball = None
        self._ball_seen = -1e9
        self._obstacles: list = []
        self._obstacles_seen = -1e9
        self._pose_belief = None
        self._att = (0.0, 0.0, 0.0)
        self._game_state = GameState()
        self._motion_active = False

    def _ingest(self, t: float) -> None:
        for msg in self._detections.drain():
            ds = msg.payload
            if ds.balls:
                self._ball = np.asarray(ds.balls[0].ego[:2], dtype=float)
                self._ball_seen = msg.stamp
            self._obstacles = [tuple(d.ego[:2]) for d in ds.obstacles]
            self._obstacles_seen = msg.stamp
        latest = self._pose.latest()
        if latest is not None:
            self._pose_belief = latest.payload
        latest = self._attitude.latest()
        if latest is not None:
            att = latest.payload
            self._att = (att.roll, att.pitch, att.yaw)
        latest = self._game.latest()
        if latest is not None:
            self._game_state = latest.payload
        latest = self._motion.latest()
        if latest is not None:
            self._motion_active = bool(latest.payload.get("playing", False))

    def build_view(self, t: float) -> SensorView:
        self._ingest(t)
        ball = None
        if self._ball is not None and \
                t - self._ball_seen <= self.config.ball_timeout:
            ball = self._ball
        obstacles = self._obstacles if \
            t - self._obstacles_seen <= self.config.obstacle_timeout else []
        view = SensorView(t=t, ball_ego=ball, game=self._game_state,
                          attitude=self._att, obstacles=list(obstacles),
                          motion_active=self._motion_active)
        if self._pose_belief is not None:
            view.pose = np.asarray(self._pose_belief.mean, dtype=float)
            view.pose_confidence = self._pose_belief.confidence
        return view

    def step(self, t: float) -> None:
        view = self.build_view(t)
        out = self.stack.step(view)
        self.bus.publish("/gait/cmd",
                         GaitCommand(out.gait[0], out.gait[1], out.gait[2],
                                     walk=out.walk), stamp=t)
        self.bus.publish("/head/target", out.gaze, stamp=t)
        if out.motion_request is not None:
            self.bus.publish("/motion/request", out.motion_request, stamp=t)
        self.bus.publish("/behavior/activations", self.stack.last_activations,
                         stamp=t)
