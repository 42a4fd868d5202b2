"""Open-loop central-pattern-generator walking gait.

A single phase variable drives sinusoidal leg patterns; command velocities
scale the swing amplitudes and are integrated directly into the odometry
(slip realism is injected by the world simulator, not here).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..geometry import pose_compose


@dataclass
class GaitCommand:
    vx: float = 0.0      # m/s forward
    vy: float = 0.0      # m/s left
    omega: float = 0.0   # rad/s turn
    walk: bool = False


@dataclass
class GaitState:
    phase: float = 0.0            # [0, 2 pi)
    support: str = "right"        # leg currently bearing weight
    frequency: float = 1.8        # step cycles per second
    stepping: bool = False        # actually cycling (vs halted)


@dataclass
class GaitParams:
    max_vel_x: float = 0.2       # m/s
    max_vel_y: float = 0.1       # m/s
    max_omega: float = 0.5       # rad/s
    frequency: float = 1.8       # Hz
    lift_amp: float = 0.25       # rad of extra knee bend during swing
    pitch_gain: float = 1.2      # rad hip pitch per m/s forward
    roll_gain: float = 1.5       # rad hip roll per m/s lateral
    yaw_gain: float = 0.8        # rad hip yaw per rad/s turn
    arm_gain: float = 0.8        # arm counter-swing vs hip pitch
    stance_knee: float = 0.35    # rad crouch in the stance pose


def _clamp(v, lim):
    return max(-lim, min(lim, v))


def stance_targets(params: GaitParams) -> dict[str, float]:
    """Neutral slightly-crouched standing pose."""
    k = params.stance_knee
    targets = {}
    for side in ("l", "r"):
        targets[f"{side}_hip_yaw"] = 0.0
        targets[f"{side}_hip_roll"] = 0.0
        targets[f"{side}_hip_pitch"] = -k / 2
        targets[f"{side}_knee_pitch"] = k
        targets[f"{side}_ankle_pitch"] = -k / 2
        targets[f"{side}_ankle_roll"] = 0.0
        targets[f"{side}_shoulder_pitch"] = 0.0
        targets[f"{side}_shoulder_roll"] = (0.15 if side == "l" else -0.15)
        targets[f"{side}_elbow_pitch"] = -0.5
    return targets


def gait_step(cmd: GaitCommand, state: GaitState, dt: float,
              params: GaitParams | None = None
              ) -> tuple[dict[str, float], tuple[float, float, float]]:
    """Advance the CPG one tick.

    Returns (joint position targets, body-frame odometry increment).
    The state is mutated in place. Commands clamp to the configured maxima;
    walk=False finishes the current half step and halts at double support.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    p = params or GaitParams()
    state.frequency = p.frequency
    vx = _clamp(cmd.vx, p.max_vel_x)
    vy = _clamp(cmd.vy, p.max_vel_y)
    om = _clamp(cmd.omega, p.max_omega)

    if cmd.walk and not state.stepping:
        state.stepping = True
        state.phase = 0.0
    if state.stepping:
        old = state.phase
        state.phase = (state.phase + 2.0 * math.pi * p.frequency * dt) % (2.0 * math.pi)
        # double support at phase 0 and pi; stop there when asked to halt
        if not cmd.walk:
            for stop in (math.pi, 2.0 * math.pi):
                if old < stop <= old + 2.0 * math.pi * p.frequency * dt:
                    state.phase = stop % (2.0 * math.pi)
                    state.stepping = False
                    break
        state.support = "right" if math.sin(state.phase) >= 0.0 else "left"

    targets = stance_targets(p)
    walking = state.stepping and cmd.walk
    if state.stepping:
        ax = p.pitch_gain * vx if walking else 0.0
        ay = p.roll_gain * vy if walking else 0.0
        aw = p.yaw_gain * om if walking else 0.0
        for side, shift in (("l", 0.0), ("r", math.pi)):
            ph = state.phase + shift  # this leg swings while sin(ph) > 0
            lift = p.lift_amp * max(0.0, math.sin(ph))
            swing = -math.cos(ph)  # -1 (rear) at lift-off, +1 (front) at strike
            targets[f"{side}_hip_pitch"] += -ax * swing - lift / 2
            targets[f"{side}_knee_pitch"] += lift
            targets[f"{side}_ankle_pitch"] += -lift / 2 + ax * swing
            # lateral swing moves both legs the same world direction
            targets[f"{side}_hip_roll"] += ay * swing
            targets[f"{side}_hip_yaw"] += aw * swing
            targets[f"{side}_shoulder_pitch"] += p.arm_gain * ax * swing

    odom = (vx * dt, vy * dt, om * dt) if walking else (0.0, 0.0, 0.0)
    return targets, odom


class Gait:
    """Gait motion module: command topic in, targets and odometry out."""

    def __init__(self, bus=None, params: GaitParams | None = None):
        self.params = params or GaitParams()
        self.state = GaitState(frequency=self.params.frequency)
        self.command = GaitCommand()
        self.odometry = (0.0, 0.0, 0.0)  # integrated pose in the odom frame
        self._bus = bus
        self._sub = bus.subscribe("/gait/cmd", queue_size=4) if bus else None

    def step(self, t: float, dt: float) -> dict[str, float]:
        if self._sub is not None:
            msg = self._sub.latest()
            if msg is not None:
                self.command = msg.payload
        targets, delta = gait_step(self.command, self.state, dt, self.params)
        self.odometry = pose_compose(self.odometry, delta)
        if self._bus is not None:
            self._bus.publish("/gait/odometry", delta, stamp=t)
            self._bus.publish("/gait/phase", self.state.phase, stamp=t)
        return targets
