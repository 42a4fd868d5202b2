"""The 125 Hz robot control loop, hardware-interface contract and dummy plant.

Per cycle, strictly in order: read hardware feedback, publish joint/IMU
state, step state-estimation consumers, step the active motion modules,
compose the hardware command (optionally with torque-feed-forward
compliance) and write it out. Lockstep mode advances simulated time by
exactly one tick per cycle; wall mode uses a hybrid sleep/spin timer and
logs overruns.
"""

from __future__ import annotations

import logging
import math
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np

from . import model as robot_model
from .geometry import rot_rpy

log = logging.getLogger(__name__)

TICK = 0.008  # s, nominal 125 Hz
GRAVITY = 9.81


class HardwareFault(Exception):
    """Raised by a hardware interface on a read/write failure."""


@dataclass
class HardwareCommand:
    position: np.ndarray          # rad per joint
    velocity: np.ndarray          # rad/s per joint
    torque_ff: np.ndarray         # N m feed-forward per joint
    effort: np.ndarray            # [0, 1] per joint

    @classmethod
    def hold(cls, q: np.ndarray, effort: float = 1.0) -> "HardwareCommand":
        n = len(q)
        return cls(np.array(q, dtype=float), np.zeros(n), np.zeros(n),
                   np.full(n, float(effort)))

    def validate(self) -> None:
        for name in ("position", "velocity", "torque_ff", "effort"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise HardwareFault(f"non-finite command {name}")
        if np.any(self.effort < -1e-12) or np.any(self.effort > 1.0 + 1e-12):
            raise HardwareFault("effort outside [0, 1]")


@dataclass
class HardwareFeedback:
    position: np.ndarray
    velocity: np.ndarray
    temperature: np.ndarray       # degC per joint
    accel: np.ndarray             # body frame m/s^2 (specific force)
    gyro: np.ndarray              # body frame rad/s
    compass: np.ndarray           # world-frame heading unit 2-vector
    battery: float                # V
    buttons: tuple[bool, bool, bool]
    stamp: float


class HardwareInterface(Protocol):
    """Plugin contract between the control loop and the servo/sensor plant.

    A real-bus implementation would live behind this same contract; only the
    simulated dummy interface ships with the package.
    """

    def read(self) -> HardwareFeedback: ...

    def write(self, command: HardwareCommand, dt: float) -> None: ...


@dataclass
class DummyInterfaceConfig:
    delay_cycles: int = 0
    noise_position: float = 0.0   # rad, gaussian sigma
    noise_accel: float = 0.0      # m/s^2
    noise_gyro: float = 0.0       # rad/s
    noise_compass: float = 0.0
    bandwidth: float = 20.0       # 1/s first-order servo tracking rate
    velocity_limit: float = 8.0   # rad/s
    spring_constant: float = 0.0  # N m/rad; > 0 makes the servo sag under load
    seed: int = 0

    def validate(self) -> None:
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be > 0")
        if self.delay_cycles < 0:
            raise ValueError("delay_cycles must be >= 0")
        for name in ("noise_position", "noise_accel", "noise_gyro"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


class DummyInterface:
    """Simulated servo plant: velocity-limited first-order lag with
    configurable measurement noise and command delay."""

    def __init__(self, n_joints: int, config: Optional[DummyInterfaceConfig] = None,
                 initial_q: Optional[np.ndarray] = None):
        self.config = config or DummyInterfaceConfig()
        self.config.validate()
        self.n = n_joints
        self.q = np.zeros(n_joints) if initial_q is None else np.array(
            initial_q, dtype=float)
        self.qdot = np.zeros(n_joints)
        self.rng = np.random.default_rng(self.config.seed)
        self._delay: deque = deque(maxlen=self.config.delay_cycles + 1)
        self._stamp = 0.0
        # attitude_source() -> (roll, pitch, yaw, body_rates[3]); overridden
        # by the world simulator, defaults to a level stationary trunk
        self.attitude_source: Callable = lambda: (0.0, 0.0, 0.0, np.zeros(3))
        self.temperature = np.full(n_joints, 38.0)
        self.battery = 16.0
        self.buttons = (False, False, False)
        self.faulted = False
        # load_torque(q) -> per-joint external torque the servo must resist;
        # with spring_constant > 0 it sags the tracking point by tau / k
        self.load_torque: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def write(self, command: HardwareCommand, dt: float = TICK) -> None:
        if self.faulted:
            raise HardwareFault("dummy interface faulted")
        command.validate()
        self._delay.append(command)
        cmd = self._delay[0]  # command issued delay_cycles ago
        target = cmd.position
        if self.load_torque is not None and self.config.spring_constant > 0:
            target = target - self.load_torque(self.q) / self.config.spring_constant
        err = target - self.q
        qdot_cmd = self.config.bandwidth * cmd.effort * err
        np.clip(qdot_cmd, -self.config.velocity_limit,
                self.config.velocity_limit, out=qdot_cmd)
        self.q = self.q + qdot_cmd * dt
        self.qdot = qdot_cmd
        self._stamp += dt

    def read(self) -> HardwareFeedback:
        if self.faulted:
            raise HardwareFault("dummy interface faulted")
        c = self.config
        roll, pitch, yaw, rates = self.attitude_source()
        R = rot_rpy(roll, pitch, yaw)
        accel = R.T @ np.array([0.0, 0.0, GRAVITY])
        accel = accel + self.rng.normal(0.0, c.noise_accel, 3) if c.noise_accel \
            else accel
        gyro = np.asarray(rates, dtype=float) + (
            self.rng.normal(0.0, c.noise_gyro, 3) if c.noise_gyro else 0.0)
        heading = np.array([math.cos(yaw), math.sin(yaw)])
        if c.noise_compass:
            heading = heading + self.rng.normal(0.0, c.noise_compass, 2)
        heading = heading / np.linalg.norm(heading)
        pos = self.q + (self.rng.normal(0.0, c.noise_position, self.n)
                        if c.noise_position else 0.0)
        return HardwareFeedback(
            position=pos, velocity=self.qdot.copy(),
            temperature=self.temperature.copy(),
            accel=np.asarray(accel, dtype=float), gyro=gyro, compass=heading,
            battery=self.battery, buttons=self.buttons, stamp=self._stamp)

    def step_command(self, command: HardwareCommand,
                     dt: float = TICK) -> HardwareFeedback:
        """One combined write+read cycle (convenience for tests/tools)."""
        self.write(command, dt)
        return self.read()


def compliant_command(q_des: np.ndarray, qdot_des: np.ndarray,
                      tau_ff: np.ndarray, stiffness: float,
                      effort: np.ndarray | float) -> HardwareCommand:
    """Realize feed-forward torque as a position offset against the servo
    spring constant: commanded position = q_des + tau_ff / k."""
    if stiffness <= 0:
        raise ValueError("stiffness must be > 0")
    tau_ff = np.asarray(tau_ff, dtype=float)
    if not np.all(np.isfinite(tau_ff)):
        raise HardwareFault("non-finite feed-forward torque")
    q_des = np.asarray(q_des, dtype=float)
    n = len(q_des)
    eff = np.full(n, float(effort)) if np.isscalar(effort) else \
        np.asarray(effort, dtype=float)
    return HardwareCommand(q_des + tau_ff / stiffness,
                           np.asarray(qdot_des, dtype=float).copy(),
                           tau_ff.copy(), eff)


@dataclass
class TimingStats:
    periods: list[float] = field(default_factory=list)
    overruns: int = 0

    @property
    def mean_period(self) -> float:
        return float(np.mean(self.periods)) if self.periods else 0.0

    @property
    def p99_jitter(self) -> float:
        if not self.periods:
            return 0.0
        jitter = np.abs(np.array(self.periods) - TICK)
        return float(np.percentile(jitter, 99))


class ControlLoop:
    """Fixed-timestep control loop driving one hardware interface.

    Motion modules are callables step(feedback, t, dt) returning a mapping
    joint name -> target; a target is a float position or a (position,
    velocity[, effort]) tuple. Modules registered later override earlier
    ones per joint.
    """

    def __init__(self, model: robot_model.RobotModel,
                 interface: HardwareInterface, bus=None,
                 tick: float = TICK, compliance_stiffness: Optional[float] = None):
        self.model = model
        self.interface = interface
        self.bus = bus
        self.tick = tick
        self.compliance_stiffness = compliance_stiffness
        self.t = 0.0
        self.cycle = 0
        self.modules: list[tuple[str, Callable]] = []
        self.estimators: list[Callable] = []
        self.pre_cycle_hooks: list[Callable] = []
        self.faulted = False
        self.fault_reason = ""
        self._effort = 0.0
        self._fade_target = 0.0
        self._fade_rate = 0.0
        self._joint_index = {n: i for i, n in enumerate(model.joint_names)}
        n = model.joint_count
        self._q_des = np.zeros(n)
        self._qdot_des = np.zeros(n)
        self._effort_des = np.ones(n)
        self._initialized = False
        self.force_relax_sources: list[Callable[[], bool]] = []
        self.last_feedback: Optional[HardwareFeedback] = None
        self.timing = TimingStats()

    # -- registration ----------------------------------------------------

    def add_module(self, name: str, step: Callable) -> None:
        self.modules.append((name, step))

    def add_estimator(self, step: Callable) -> None:
        """step(feedback, t, dt); runs before the motion modules each cycle."""
        self.estimators.append(step)

    # -- fading ----------------------------------------------------------

    def fade(self, target: float, duration: float) -> None:
        """Linearly ramp all joint efforts to target over duration seconds."""
        if duration < 0:
            raise ValueError("duration must be >= 0")
        target = max(0.0, min(1.0, target))
        if duration == 0:
            self._effort = target
            self._fade_target = target
            self._fade_rate = 0.0
        else:
            self._fade_target = target
            self._fade_rate = (target - self._effort) / duration

    @property
    def effort(self) -> float:
        return self._effort

    @property
    def motion_state(self) -> str:
        if self._effort != self._fade_target:
            return "FADING"
        return "RELAXED" if self._effort == 0.0 else "ACTIVE"

    def _step_fade(self, dt: float) -> None:
        if self._effort != self._fade_target:
            step = self._fade_rate * dt
            nxt = self._effort + step
            if (step >= 0 and nxt >= self._fade_target) or \
               (step < 0 and nxt <= self._fade_target):
                self._effort = self._fade_target
            else:
                self._effort = nxt

    # -- fault handling --------------------------------------------------

    def _enter_safe_state(self, reason: str) -> None:
        if not self.faulted:
            self.faulted = True
            self.fault_reason = reason
            log.error("control loop entering relaxed-safe state: %s", reason)

    def reset_fault(self) -> None:
        self.faulted = False
        self.fault_reason = ""

    # -- cycle -----------------------------------------------------------

    def step(self) -> None:
        """Run exactly one control cycle and advance simulated time."""
        dt = self.tick
        for hook in self.pre_cycle_hooks:
            hook(self.t, dt)
        try:
            fb = self.interface.read()
        except HardwareFault as e:
            self._enter_safe_state(f"read fault: {e}")
            self._write_safe()
            self.t += dt
            self.cycle += 1
            return
        self.last_feedback = fb
        if not self._initialized:
            self._q_des = fb.position.copy()
            self._initialized = True

        if self.bus is not None:
            self.bus.publish("/joint_states", fb, stamp=self.t)
            self.bus.publish("/imu", {"accel": fb.accel, "gyro": fb.gyro},
                             stamp=self.t)
            self.bus.publish("/compass", fb.compass, stamp=self.t)

        for est in self.estimators:
            est(fb, self.t, dt)

        targets: dict[str, tuple] = {}
        if not self.faulted:
            for name, step_fn in self.modules:
                try:
                    out = step_fn(fb, self.t, dt)
                except Exception as e:
                    self._enter_safe_state(f"module {name} raised: {e!r}")
                    break
                if out:
                    targets.update(out)
        self._apply_targets(targets)
        self._step_fade(dt)

        cmd = self._compose()
        try:
            self.interface.write(cmd, dt)
        except HardwareFault as e:
            self._enter_safe_state(f"write fault: {e}")
        if self.bus is not None:
            self.bus.publish("/diagnostics", {
                "battery": fb.battery,
                "max_temperature": float(np.max(fb.temperature)),
                "motion_state": self.motion_state,
                "faulted": self.faulted,
                "effort": self._effort,
            }, stamp=self.t)
        self.t += dt
        self.cycle += 1

    def _apply_targets(self, targets: dict) -> None:
        for name, target in targets.items():
            i = self._joint_index.get(name)
            if i is None:
                continue
            if isinstance(target, tuple):
                self._q_des[i] = target[0]
                self._qdot_des[i] = target[1] if len(target) > 1 else 0.0
                self._effort_des[i] = target[2] if len(target) > 2 else 1.0
            else:
                self._q_des[i] = float(target)
                self._qdot_des[i] = 0.0
                self._effort_des[i] = 1.0

    def _compose(self) -> HardwareCommand:
        relax = self.faulted or any(src() for src in self.force_relax_sources)
        effort = 0.0 if relax else self._effort
        eff = self._effort_des * effort
        if self.compliance_stiffness is not None and not relax:
            tau = robot_model.inverse_dynamics(
                self.model, self._q_des, self._qdot_des,
                np.zeros(self.model.joint_count))
            return compliant_command(self._q_des, self._qdot_des, tau,
                                     self.compliance_stiffness, eff)
        n = self.model.joint_count
        return HardwareCommand(self._q_des.copy(), self._qdot_des.copy(),
                               np.zeros(n), eff)

    def _write_safe(self) -> None:
        n = self.model.joint_count
        cmd = HardwareCommand(self._q_des.copy(), np.zeros(n), np.zeros(n),
                              np.zeros(n))
        try:
            self.interface.write(cmd, self.tick)
        except HardwareFault:
            pass

    # -- run modes -------------------------------------------------------

    def run_lockstep(self, cycles: int) -> None:
        for _ in range(cycles):
            self.step()

    def run_wall(self, duration: float,
                 stop: Optional[threading.Event] = None) -> TimingStats:
        """Wall-clock mode: hybrid sleep/spin timing, overruns logged."""
        stats = TimingStats()
        start = time.perf_counter()
        next_t = start + self.tick
        last = start
        while time.perf_counter() - start < duration:
            if stop is not None and stop.is_set():
                break
            self.step()
            now = time.perf_counter()
            if now > next_t + self.tick:
                stats.overruns += 1
                log.warning("control cycle overrun: %.3f ms late",
                            1e3 * (now - next_t))
                next_t = now
            else:
                while True:
                    remaining = next_t - time.perf_counter()
                    if remaining <= 0:
                        break
                    if remaining > 0.0015:
                        time.sleep(remaining - 0.001)
                    # spin for the last millisecond
            now = time.perf_counter()
            stats.periods.append(now - last)
            last = now
            next_t += self.tick
        self.timing = stats
        return stats
