"""Hierarchical behavior framework with graded inhibitions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable

import numpy as np

from ..game import GamePhase, GameState

EPSILON = 1e-6


class ConfigurationError(ValueError):
    pass


@dataclass
class SensorView:
    """Abstracted inputs for the behavior layers; no raw images or joints."""

    t: float = 0.0
    ball_ego: np.ndarray | None = None  # (x, y) m, None when invalid
    ball_confidence: float = 0.0
    goal_world: np.ndarray = field(
        default_factory=lambda: np.array([4.5, 0.0]))
    pose: np.ndarray = field(default_factory=lambda: np.zeros(3))
    pose_confidence: float = 0.0
    game: GameState = field(default_factory=GameState)
    attitude: tuple[float, float, float] = (0.0, 0.0, 0.0)
    obstacles: list = field(default_factory=list)  # egocentric (x, y)
    motion_active: bool = False
    play_active: float = 0.0  # written by the soccer layer

    @property
    def ball_valid(self) -> bool:
        return self.ball_ego is not None


@dataclass
class ActuatorOutputs:
    gait: tuple[float, float, float] = (0.0, 0.0, 0.0)
    walk: bool = False
    gaze: tuple[float, float] = (0.0, 0.0)
    motion_request: str | None = None


@dataclass
class Contribution:
    """What one behavior wants per actuator channel; None leaves a channel."""

    gait: tuple[float, float, float] | None = None
    walk: bool = False
    gaze: tuple[float, float] | None = None
    motion_request: str | None = None


@dataclass
class Behavior:
    name: str
    activation: Callable[[SensorView], float]
    execute: Callable[[SensorView, float], Contribution]


@dataclass
class Inhibition:
    inhibitor: str
    inhibitee: str


class BehaviorLayer:
    def __init__(self, name: str, behaviors: list[Behavior],
                 inhibitions: list[Inhibition]):
        self.name = name
        self.behaviors = {b.name: b for b in behaviors}
        if len(self.behaviors) != len(behaviors):
            raise ConfigurationError("duplicate behavior names")
        for inh in inhibitions:
            for end in (inh.inhibitor, inh.inhibitee):
                if end not in self.behaviors:
                    raise ConfigurationError(f"unknown behavior {end!r}")
        self.inhibitions = list(inhibitions)
        self.order = self._topological_order()

    def _topological_order(self) -> list[str]:
        incoming: dict[str, set] = {n: set() for n in self.behaviors}
        for inh in self.inhibitions:
            incoming[inh.inhibitee].add(inh.inhibitor)
        order = []
        ready = sorted(n for n, deps in incoming.items() if not deps)
        pending = {n: set(d) for n, d in incoming.items() if d}
        while ready:
            n = ready.pop(0)
            order.append(n)
            newly = []
            for m, deps in list(pending.items()):
                deps.discard(n)
                if not deps:
                    newly.append(m)
                    del pending[m]
            ready = sorted(ready + newly)
        if pending:
            raise ConfigurationError(
                f"inhibition cycle among {sorted(pending)}")
        return order

    def resolve(self, raw: dict[str, float]) -> dict[str, float]:
        """effective(b) = raw(b) * product over inhibitors i of (1 - effective(i))."""
        effective: dict[str, float] = {}
        for name in self.order:
            r = raw[name]
            if not 0.0 <= r <= 1.0:
                raise ValueError(f"raw activation of {name!r} out of [0,1]")
            factor = 1.0
            for inh in self.inhibitions:
                if inh.inhibitee == name:
                    factor *= 1.0 - effective[inh.inhibitor]
            effective[name] = r * factor
        return effective

    def step(self, view: SensorView) -> tuple[ActuatorOutputs, dict]:
        raw = {n: float(b.activation(view))
               for n, b in self.behaviors.items()}
        effective = self.resolve(raw)
        contributions = []
        for name in self.order:
            act = effective[name]
            if act > EPSILON:
                contributions.append(
                    (act, name, self.behaviors[name].execute(view, act)))
        return merge_contributions(contributions), effective


def merge_contributions(contributions: list) -> ActuatorOutputs:
    """Weighted mean on continuous channels, max activation on discrete."""
    out = ActuatorOutputs()
    gait_sum = np.zeros(3)
    gait_w = 0.0
    gaze_sum = np.zeros(2)
    gaze_w = 0.0
    walk_best = (-1.0, False)
    motion_best = (-1.0, None)
    for act, _, contrib in contributions:
        if contrib.gait is not None:
            gait_sum += act * np.asarray(contrib.gait, dtype=float)
            gait_w += act
            if act > walk_best[0]:
                walk_best = (act, contrib.walk)
        if contrib.gaze is not None:
            gaze_sum += act * np.asarray(contrib.gaze, dtype=float)
            gaze_w += act
        if contrib.motion_request is not None and act > motion_best[0]:
            motion_best = (act, contrib.motion_request)
    if gait_w > 0.0:
        out.gait = tuple(gait_sum / gait_w)
        out.walk = walk_best[1]
    if gaze_w > 0.0:
        out.gaze = tuple(gaze_sum / gaze_w)
    out.motion_request = motion_best[1]
    return out


class BehaviorStack:
    """Soccer layer feeding the control layer."""

    def __init__(self, soccer: BehaviorLayer, control: BehaviorLayer):
        self.soccer = soccer
        self.control = control
        self.last_activations: dict[str, dict[str, float]] = {}

    def step(self, view: SensorView) -> ActuatorOutputs:
        _, soccer_eff = self.soccer.step(view)
        play = soccer_eff.get("play_soccer", 0.0)
        view = replace(view, play_active=play)
        out, control_eff = self.control.step(view)
        self.last_activations = {"soccer": soccer_eff, "control": control_eff}
        return out
