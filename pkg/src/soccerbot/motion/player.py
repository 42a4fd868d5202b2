"""Keyframe motions: file format, spline planning and the player module.

A motion is a list of timestamped keyframes carrying joint positions AND
velocities, chained into piecewise-quadratic segments that respect per-joint
velocity/acceleration limits (see spline.py). The player runs inside the
control loop and bridges from the robot's current pose into the first
keyframe before playback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import yaml

from .spline import Segment, SplineError, plan_segment


class MotionError(Exception):
    pass


@dataclass
class Keyframe:
    t: float
    positions: dict[str, float]
    velocities: dict[str, float]
    efforts: dict[str, float] = field(default_factory=dict)


@dataclass
class KeyframeMotion:
    name: str
    joints: list[str]
    keyframes: list[Keyframe]
    vel_limit: dict[str, float] | float = math.inf
    acc_limit: dict[str, float] | float = math.inf
    _segments: list[Segment] = field(default_factory=list, repr=False)
    _times: list[float] = field(default_factory=list, repr=False)  # scaled kf times

    def validate(self) -> None:
        if not self.keyframes:
            raise MotionError(f"motion {self.name}: no keyframes")
        last = -math.inf
        for kf in self.keyframes:
            if kf.t < 0:
                raise MotionError(f"motion {self.name}: keyframe time {kf.t} < 0")
            if kf.t <= last:
                raise MotionError(
                    f"motion {self.name}: keyframe times must strictly increase")
            last = kf.t
            for which, mapping in (("positions", kf.positions),
                                   ("velocities", kf.velocities)):
                if set(mapping) != set(self.joints):
                    raise MotionError(
                        f"motion {self.name}: keyframe at t={kf.t} {which} must "
                        f"cover exactly the joint list")
            for j, eff in kf.efforts.items():
                if j not in self.joints or not 0.0 <= eff <= 1.0:
                    raise MotionError(
                        f"motion {self.name}: bad effort override {j}={eff}")

    def plan(self) -> None:
        """Plan all segments; updates the (possibly time-scaled) schedule."""
        self.validate()
        self._segments = []
        self._times = [self.keyframes[0].t]
        for k0, k1 in zip(self.keyframes, self.keyframes[1:]):
            start = {j: (k0.positions[j], k0.velocities[j]) for j in self.joints}
            end = {j: (k1.positions[j], k1.velocities[j]) for j in self.joints}
            try:
                seg = plan_segment(start, end, k1.t - k0.t,
                                   self.vel_limit, self.acc_limit)
            except SplineError as e:
                raise MotionError(f"motion {self.name}: {e}") from None
            self._segments.append(seg)
            self._times.append(self._times[-1] + seg.duration)

    @property
    def duration(self) -> float:
        """End time after planning (time-scaling included)."""
        if not self._times:
            self.plan()
        return self._times[-1]

    @property
    def time_scales(self) -> list[float]:
        return [seg.time_scale for seg in self._segments]

    def sample(self, t: float) -> dict[str, tuple[float, float, float]]:
        """Per-joint (position, velocity, effort) at motion time t.

        Efforts are held stepwise from the most recent keyframe; joints
        without an override default to effort 1.
        """
        if not self._times:
            self.plan()
        if t < self._times[0] - 1e-12 or t > self._times[-1] + 1e-12:
            raise MotionError(
                f"motion {self.name}: t={t} outside [{self._times[0]}, "
                f"{self._times[-1]}]")
        t = min(max(t, self._times[0]), self._times[-1])
        if len(self.keyframes) == 1:
            kf = self.keyframes[0]
            return {j: (kf.positions[j], kf.velocities[j], kf.efforts.get(j, 1.0))
                    for j in self.joints}
        i = 0
        while i < len(self._segments) - 1 and t > self._times[i + 1]:
            i += 1
        local = t - self._times[i]
        kf = self.keyframes[i]
        out = {}
        for j, (q, v) in self._segments[i].sample(local).items():
            out[j] = (q, v, kf.efforts.get(j, 1.0))
        return out


def load_motion(filename) -> KeyframeMotion:
    with open(filename, "r", encoding="utf-8") as f:
        try:
            tree = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise MotionError(f"motion file parse error: {e}") from None
    return parse_motion(tree)


def parse_motion(tree: dict) -> KeyframeMotion:
    try:
        limits = tree.get("limits", {})
        motion = KeyframeMotion(
            name=tree["name"],
            joints=list(tree["joints"]),
            keyframes=[Keyframe(t=float(kf["t"]),
                                positions={j: float(v) for j, v in
                                           kf["positions"].items()},
                                velocities={j: float(v) for j, v in
                                            kf.get("velocities", {}).items()} or
                                {j: 0.0 for j in kf["positions"]},
                                efforts={j: float(v) for j, v in
                                         kf.get("efforts", {}).items()})
                       for kf in tree["keyframes"]],
            vel_limit=limits.get("velocity", math.inf),
            acc_limit=limits.get("acceleration", math.inf))
    except (KeyError, TypeError, AttributeError) as e:
        raise MotionError(f"malformed motion file: {e}") from None
    motion.validate()
    # keyframe velocities must already respect the velocity limit
    for kf in motion.keyframes:
        for j, v in kf.velocities.items():
            vm = (motion.vel_limit.get(j, math.inf)
                  if isinstance(motion.vel_limit, dict) else motion.vel_limit)
            if abs(v) > vm + 1e-9:
                raise MotionError(
                    f"motion {motion.name}: keyframe velocity {j}={v} "
                    f"exceeds limit {vm}")
    return motion


def save_motion(motion: KeyframeMotion, filename) -> None:
    tree = {
        "name": motion.name,
        "joints": list(motion.joints),
        "keyframes": [
            {"t": kf.t, "positions": dict(kf.positions),
             "velocities": dict(kf.velocities),
             **({"efforts": dict(kf.efforts)} if kf.efforts else {})}
            for kf in motion.keyframes],
    }
    if motion.vel_limit != math.inf or motion.acc_limit != math.inf:
        tree["limits"] = {}
        if motion.vel_limit != math.inf:
            tree["limits"]["velocity"] = motion.vel_limit
        if motion.acc_limit != math.inf:
            tree["limits"]["acceleration"] = motion.acc_limit
    with open(filename, "w", encoding="utf-8") as f:
        yaml.safe_dump(tree, f, sort_keys=False)


class MotionPlayer:
    """Motion module playing named keyframe motions inside the control loop."""

    BRIDGE_TIME = 0.4  # s, move-to-start segment when first keyframe is at t=0

    def __init__(self, motions: Optional[dict[str, KeyframeMotion]] = None):
        self.motions = dict(motions or {})
        self._active: Optional[KeyframeMotion] = None
        self._planned: Optional[KeyframeMotion] = None
        self._t0: Optional[float] = None

    def add(self, motion: KeyframeMotion) -> None:
        self.motions[motion.name] = motion

    @property
    def playing(self) -> Optional[str]:
        return self._active.name if self._active is not None else None

    def play(self, name: str, current_q: dict[str, float], t: float) -> None:
        if name not in self.motions:
            raise MotionError(f"unknown motion {name!r}")
        motion = self.motions[name]
        # bridge from the current pose into the first keyframe
        first = motion.keyframes[0]
        bridge = max(first.t, self.BRIDGE_TIME)
        keyframes = [Keyframe(0.0,
                              {j: current_q.get(j, first.positions[j])
                               for j in motion.joints},
                              {j: 0.0 for j in motion.joints})]
        for kf in motion.keyframes:
            keyframes.append(Keyframe(bridge + kf.t - first.t,
                                      dict(kf.positions), dict(kf.velocities),
                                      dict(kf.efforts)))
        planned = KeyframeMotion(motion.name, list(motion.joints), keyframes,
                                 motion.vel_limit, motion.acc_limit)
        planned.plan()
        self._active = motion
        self._planned = planned
        self._t0 = t

    def stop(self) -> None:
        self._active = self._planned = self._t0 = None

    def step(self, t: float) -> Optional[dict[str, tuple[float, float, float]]]:
        """Targets for the active motion, or None when idle. Auto-finishes."""
        if self._planned is None:
            return None
        rel = t - self._t0
        if rel >= self._planned.duration:
            out = self._planned.sample(self._planned.duration)
            self.stop()
            return out
        return self._planned.sample(max(rel, 0.0))
