"""Soccer skills and the default behavior stack."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import wrap_angle
from .framework import (Behavior, BehaviorLayer, BehaviorStack, Contribution,
                        Inhibition, SensorView)


@dataclass
class SkillConfig:
    goal: tuple[float, float] = (4.5, 0.0)
    standoff: float = 0.2
    kick_x_min: float = 0.10
    kick_x_max: float = 0.25
    kick_y_max: float = 0.12
    align_max: float = 0.35  # rad, heading-to-goal tolerance for kicking
    dribble_x_max: float = 0.55
    dribble_y_max: float = 0.20
    dribble_align: float = 0.5
    kp_lin: float = 1.2
    kp_ang: float = 1.5
    max_vx: float = 0.2
    max_vy: float = 0.1
    max_omega: float = 0.5
    avoid_gain: float = 0.25
    avoid_radius: float = 0.7
    search_omega: float = 0.4
    scan_period: float = 4.0
    scan_amplitude: float = 1.2
    gaze_elevation: float = -0.45
    kick_motion: str = "kick"


def go_behind_ball_target(ball_xy, goal_xy, standoff: float,
                          obstacles=(), gain: float = 0.25,
                          radius: float = 0.7) -> tuple[float, float, float]:
    """Target pose behind the ball on the ball-to-goal line, facing the goal.

    Positions are field-frame; obstacle repulsion pushes the target off
    the straight line when an obstacle sits within `radius` of it.
    """
    ball = np.asarray(ball_xy, dtype=float)
    goal = np.asarray(goal_xy, dtype=float)
    to_goal = goal - ball
    dist = float(np.linalg.norm(to_goal))
    if dist < 1e-9:
        direction = np.array([1.0, 0.0])
    else:
        direction = to_goal / dist
    target = ball - standoff * direction
    for obs in obstacles:
        away = target - np.asarray(obs, dtype=float)
        d = float(np.linalg.norm(away))
        if 1e-9 < d < radius:
            target = target + gain * (1.0 / d - 1.0 / radius) * away / d
    theta = math.atan2(direction[1], direction[0])
    return (float(target[0]), float(target[1]), theta)


def walk_command(pose, target, cfg: SkillConfig) -> tuple[float, float, float]:
    """Clamped proportional controller toward a field-frame target pose."""
    ex = target[0] - pose[0]
    ey = target[1] - pose[1]
    c, s = math.cos(pose[2]), math.sin(pose[2])
    fx = c * ex + s * ey
    fy = -s * ex + c * ey
    far = math.hypot(fx, fy) > 0.4
    heading = math.atan2(fy, fx) if far else wrap_angle(target[2] - pose[2])
    vx = max(-cfg.max_vx, min(cfg.max_vx, cfg.kp_lin * fx))
    vy = max(-cfg.max_vy, min(cfg.max_vy, cfg.kp_lin * fy))
    omega = max(-cfg.max_omega, min(cfg.max_omega, cfg.kp_ang * heading))
    # walking sideways is slow; when the target is far and off-axis, turn first
    if far and abs(heading) > 0.7:
        vx *= 0.2
        vy *= 0.2
    return (vx, vy, omega)


def kick_decision(ball_ego, aligned: bool, cfg: SkillConfig | None = None
                  ) -> str | None:
    if cfg is None:
        cfg = SkillConfig()
    if ball_ego is None or not aligned:
        return None
    x, y = float(ball_ego[0]), float(ball_ego[1])
    if cfg.kick_x_min <= x <= cfg.kick_x_max and abs(y) <= cfg.kick_y_max:
        return cfg.kick_motion
    return None


def _ball_world(view: SensorView) -> np.ndarray:
    x, y, th = view.pose
    c, s = math.cos(th), math.sin(th)
    bx, by = view.ball_ego[0], view.ball_ego[1]
    return np.array([x + c * bx - s * by, y + s * bx + c * by])


def _goal_heading_error(view: SensorView, cfg: SkillConfig) -> float:
    gx, gy = cfg.goal
    target = math.atan2(gy - view.pose[1], gx - view.pose[0])
    return wrap_angle(target - view.pose[2])


def _aligned(view: SensorView, cfg: SkillConfig, tol: float) -> bool:
    return abs(_goal_heading_error(view, cfg)) < tol


def build_stack(cfg: SkillConfig | None = None) -> BehaviorStack:
    if cfg is None:
        cfg = SkillConfig()

    def play_activation(view: SensorView) -> float:
        return 1.0 if view.game.may_move else 0.0

    soccer = BehaviorLayer("soccer", [
        Behavior("play_soccer", play_activation,
                 lambda view, act: Contribution()),
    ], [])

    def halted(view: SensorView) -> float:
        return 0.0 if view.game.may_move else 1.0

    def game_control_exec(view, act):
        return Contribution(gait=(0.0, 0.0, 0.0), walk=False,
                            gaze=(0.0, 0.0))

    def search_activation(view: SensorView) -> float:
        return view.play_active if not view.ball_valid else 0.0

    def search_exec(view, act):
        az = cfg.scan_amplitude * math.sin(
            2.0 * math.pi * view.t / cfg.scan_period)
        return Contribution(gait=(0.0, 0.0, cfg.search_omega), walk=True,
                            gaze=(az, cfg.gaze_elevation))

    def go_behind_activation(view: SensorView) -> float:
        return view.play_active if view.ball_valid else 0.0

    def go_behind_exec(view, act):
        ball = _ball_world(view)
        target = go_behind_ball_target(ball, cfg.goal, cfg.standoff,
                                       obstacles=[_obs_world(view, o)
                                                  for o in view.obstacles],
                                       gain=cfg.avoid_gain,
                                       radius=cfg.avoid_radius)
        vx, vy, omega = walk_command(view.pose, target, cfg)
        return Contribution(gait=(vx, vy, omega), walk=True)

    def _obs_world(view, obs):
        x, y, th = view.pose
        c, s = math.cos(th), math.sin(th)
        return (x + c * obs[0] - s * obs[1], y + s * obs[0] + c * obs[1])

    def dribble_activation(view: SensorView) -> float:
        if not view.ball_valid or not view.play_active:
            return 0.0
        bx, by = view.ball_ego[0], view.ball_ego[1]
        ok = 0.0 < bx <= cfg.dribble_x_max and abs(by) <= cfg.dribble_y_max
        return view.play_active if ok and _aligned(view, cfg,
                                                   cfg.dribble_align) else 0.0

    def dribble_exec(view, act):
        by = float(view.ball_ego[1])
        err = _goal_heading_error(view, cfg)
        omega = max(-cfg.max_omega, min(cfg.max_omega, cfg.kp_ang * err))
        vy = max(-cfg.max_vy, min(cfg.max_vy, cfg.kp_lin * by))
        return Contribution(gait=(cfg.max_vx, vy, omega), walk=True)

    def kick_activation(view: SensorView) -> float:
        if view.motion_active:
            return 1.0
        if not view.play_active:
            return 0.0
        decision = kick_decision(view.ball_ego,
                                 _aligned(view, cfg, cfg.align_max), cfg)
        return view.play_active if decision else 0.0

    def kick_exec(view, act):
        request = None if view.motion_active else cfg.kick_motion
        return Contribution(gait=(0.0, 0.0, 0.0), walk=False,
                            motion_request=request)

    def head_activation(view: SensorView) -> float:
        return view.play_active

    def head_exec(view, act):
        if view.ball_valid:
            az = math.atan2(view.ball_ego[1], view.ball_ego[0])
            return Contribution(gaze=(az, cfg.gaze_elevation))
        az = cfg.scan_amplitude * math.sin(
            2.0 * math.pi * view.t / cfg.scan_period)
        return Contribution(gaze=(az, cfg.gaze_elevation))

    control = BehaviorLayer("control", [
        Behavior("game_control", halted, game_control_exec),
        Behavior("search_ball", search_activation, search_exec),
        Behavior("go_behind_ball", go_behind_activation, go_behind_exec),
        Behavior("dribble", dribble_activation, dribble_exec),
        Behavior("kick", kick_activation, kick_exec),
        Behavior("head_control", head_activation, head_exec),
    ], [
        Inhibition("game_control", "search_ball"),
        Inhibition("game_control", "go_behind_ball"),
        Inhibition("game_control", "dribble"),
        Inhibition("game_control", "kick"),
        Inhibition("kick", "dribble"),
        Inhibition("kick", "go_behind_ball"),
        Inhibition("dribble", "go_behind_ball"),
    ])
    return BehaviorStack(soccer, control)
