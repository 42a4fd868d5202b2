"""Launch-file driven composition of the full robot system.

A launch file is a small YAML document naming the nodes to start plus the
scenario, config and motion resources they need. System() builds every
node onto one shared bus, starts them in declaration order and tears them
down in reverse; run_headless() drives the whole stack in lockstep
against the world simulator for CI-style scenario runs.
"""

from __future__ import annotations

import importlib.resources
import logging
import os
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from . import model as robot_model
from .behavior.node import BehaviorNode
from .config import ConfigServer
from .control import ControlLoop, DummyInterface
from .estimation.attitude import AttitudeEstimate, AttitudeFilter
from .estimation.fieldmap import LandmarkMap
from .estimation.mcl import MonteCarloLocalizer
from .game import GamePhase
from .geometry import pose_compose
from .motion.fall import FallProtection, FallState
from .motion.gait import Gait, GaitCommand, GaitParams
from .motion.head import HeadControl
from .motion.player import MotionPlayer, load_motion
from .sim import WorldSim, load_scenario, make_sim
from .telemetry import BagWriter, PlotRecorder, TelemetryGateway, record_topics

log = logging.getLogger(__name__)

CONFIG_ROOT_ENV = "SOCCERBOT_CONFIG_ROOT"

KNOWN_NODES = ("world_sim", "robot_control", "motion_modules", "perception",
               "state_estimation", "behavior", "telemetry")
KNOWN_KEYS = {"name", "nodes", "interface", "config", "motions", "clock",
              "seed", "scenario", "duration", "gateway_port", "overrides",
              "bag_topics"}

DEFAULT_BAG_TOPICS = ["/gait/cmd", "/gait/odometry", "/localization/pose",
                      "/game/state", "/sim/truth"]


class LaunchError(Exception):
    pass


def declare_default_params(config: ConfigServer) -> None:
    """Declare the tunable parameter set shared by launcher and CLI."""
    gp = GaitParams()
    config.declare("/gait/maxVelX", gp.max_vel_x, min=0.0, max=0.5,
                   unit="m/s")
    config.declare("/gait/maxVelY", gp.max_vel_y, min=0.0, max=0.3,
                   unit="m/s")
    config.declare("/gait/maxOmega", gp.max_omega, min=0.0, max=1.5,
                   unit="rad/s")
    config.declare("/gait/frequency", gp.frequency, min=0.5, max=3.0,
                   unit="Hz")


def data_dir() -> Path:
    return Path(str(importlib.resources.files("soccerbot.data")))


def config_root() -> Path:
    root = os.environ.get(CONFIG_ROOT_ENV)
    return Path(root) if root else data_dir()


def resolve_resource(name: str, base: Optional[Path] = None,
                     subdir: str = "") -> Path:
    """Find a referenced file next to the launch file, under the config
    root, or in the packaged data directory (in that order)."""
    candidates = []
    p = Path(name)
    if p.is_absolute():
        candidates.append(p)
    else:
        if base is not None:
            candidates.append(base / name)
        for root in (config_root(), data_dir()):
            candidates.append(root / subdir / name if subdir else root / name)
            candidates.append(root / name)
    for c in candidates:
        if c.is_file():
            return c
    raise LaunchError(f"resource not found: {name}")


@dataclass
class LaunchSpec:
    name: str = "launch"
    nodes: list = dc_field(default_factory=lambda: list(KNOWN_NODES))
    interface: str = "dummy"
    config: Optional[str] = None
    motions: list = dc_field(
        default_factory=lambda: ["kick", "getup_prone", "getup_supine"])
    clock: str = "lockstep"
    seed: int = 0
    scenario: Optional[str] = None
    duration: float = 120.0
    gateway_port: int = 0
    overrides: dict = dc_field(default_factory=dict)
    bag_topics: list = dc_field(
        default_factory=lambda: list(DEFAULT_BAG_TOPICS))
    base_dir: Optional[Path] = None


def parse_launch(filename, strict: bool = True) -> LaunchSpec:
    path = Path(filename)
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise LaunchError(f"cannot read launch file: {exc}") from exc
    except yaml.YAMLError as exc:
        raise LaunchError(f"launch file does not parse: {exc}") from exc
    if not isinstance(raw, dict):
        raise LaunchError("launch file must hold a mapping")
    unknown = set(raw) - KNOWN_KEYS
    if unknown:
        msg = f"unknown launch keys: {sorted(unknown)}"
        if strict:
            raise LaunchError(msg)
        log.warning(msg)
    spec = LaunchSpec(base_dir=path.parent)
    for key in KNOWN_KEYS & set(raw):
        setattr(spec, key, raw[key])
    for node in spec.nodes:
        if node not in KNOWN_NODES:
            raise LaunchError(f"unknown node: {node}")
    if spec.interface not in ("dummy", "external"):
        raise LaunchError(f"unknown interface: {spec.interface}")
    if spec.clock not in ("lockstep", "wall"):
        raise LaunchError(f"unknown clock mode: {spec.clock}")
    # referenced files must exist at validation time
    if spec.config is not None:
        spec.config = str(resolve_resource(spec.config, spec.base_dir))
    if spec.scenario is not None:
        spec.scenario = str(resolve_resource(spec.scenario, spec.base_dir,
                                             subdir="scenarios"))
    elif "world_sim" in spec.nodes and strict:
        raise LaunchError("world_sim node needs a scenario")
    resolved = []
    for name in spec.motions:
        fname = name if name.endswith(".yaml") else f"{name}.yaml"
        resolved.append(str(resolve_resource(fname, spec.base_dir,
                                             subdir="motions")))
    spec.motion_files = resolved
    return spec


class System:
    """Running handle for one launched system.

    Nodes are built in a fixed order onto one bus; stop() tears them
    down in reverse and is idempotent. A failure during build leaves no
    node running.
    """

    def __init__(self, spec: LaunchSpec):
        self.spec = spec
        self.started = False
        self._teardown: list = []
        from .msgbus import MessageBus
        self.bus = MessageBus()
        self._teardown.append(self.bus.shutdown)
        try:
            self._build()
        except Exception:
            self._run_teardown()
            raise

    # -- construction --------------------------------------------------

    def _build(self) -> None:
        spec = self.spec
        self.config = ConfigServer(spec.config)
        self._teardown.append(self.config.shutdown)
        self.recorder = PlotRecorder()
        self._declare_params()

        self.sim: Optional[WorldSim] = None
        self.scenario = None
        if "world_sim" in spec.nodes:
            self.scenario = load_scenario(spec.scenario)
            self.scenario.seed = spec.seed
            self.sim = make_sim(self.scenario)
            self._events = sorted(self.scenario.events,
                                  key=lambda e: e["t"])
        else:
            self._events = []

        self.loop: Optional[ControlLoop] = None
        self.gait: Optional[Gait] = None
        self.player: Optional[MotionPlayer] = None
        self.head: Optional[HeadControl] = None
        self.fall: Optional[FallProtection] = None
        if "robot_control" in spec.nodes:
            if spec.interface == "external":
                raise LaunchError(
                    "no external hardware interface is attached")
            self.model = robot_model.load_model(
                data_dir() / "robot_default.yaml")
            self.interface = DummyInterface(self.model.joint_count)
            self.loop = ControlLoop(self.model, self.interface, bus=self.bus)
            self.bus.advertise_service(
                "/motion/fade",
                lambda req: self._fade_service(req))
            if "motion_modules" in spec.nodes:
                self._build_motion_modules()

        self.attitude_filter: Optional[AttitudeFilter] = None
        self.attitude = AttitudeEstimate()
        self.mcl: Optional[MonteCarloLocalizer] = None
        if "state_estimation" in spec.nodes:
            self.attitude_filter = AttitudeFilter()
            self.mcl = MonteCarloLocalizer(LandmarkMap(), seed=spec.seed)

        self.behavior: Optional[BehaviorNode] = None
        if "behavior" in spec.nodes:
            self.behavior = BehaviorNode(self.bus)

        self.gateway: Optional[TelemetryGateway] = None
        if "telemetry" in spec.nodes:
            self.gateway = TelemetryGateway(
                bus=self.bus, config=self.config, recorder=self.recorder,
                port=spec.gateway_port,
                publishers={
                    "/gait/cmd": lambda v: GaitCommand(**(v or {})),
                    "/head/target": lambda v: tuple(v or (0.0, 0.0)),
                    "/motion/request": str,
                })

        self._odom_sub = self.bus.subscribe("/gait/odometry", queue_size=32)
        self._motion_req = self.bus.subscribe("/motion/request", queue_size=8)
        self._kick_contact_t: Optional[float] = None
        self._pending_odom = (0.0, 0.0, 0.0)
        self._fall_events = {"injected": 0, "recovered": 0}
        self.history: list[dict] = []

    def _declare_params(self) -> None:
        declare_default_params(self.config)
        for path, value in self.spec.overrides.items():
            try:
                self.config.set(path, value)
            except Exception:
                self.config.declare(path, value)

    def _build_motion_modules(self) -> None:
        params = GaitParams(
            max_vel_x=self.config.get("/gait/maxVelX"),
            max_vel_y=self.config.get("/gait/maxVelY"),
            max_omega=self.config.get("/gait/maxOmega"),
            frequency=self.config.get("/gait/frequency"))
        self.gait = Gait(bus=self.bus, params=params)
        self.loop.add_module(
            "gait", lambda fb, t, dt: self.gait.step(t, dt))
        self.head = HeadControl()
        self._head_sub = self.bus.subscribe("/head/target", queue_size=4)
        self.loop.add_module("head", self._head_module)
        self.player = MotionPlayer()
        for fname in getattr(self.spec, "motion_files", []):
            self.player.add(load_motion(fname))
        self.loop.add_module("player", self._player_module)
        self.fall = FallProtection()
        self.loop.force_relax_sources.append(lambda: self.fall.relax)
        self.loop.fade(1.0, 0.0)

    def _head_module(self, fb, t, dt):
        msg = self._head_sub.latest()
        if msg is not None:
            az, el = msg.payload
            self.head.set_target(az, el)
        return self.head.step(dt)

    def _player_module(self, fb, t, dt):
        out = self.player.step(t)
        if not out:
            return {}
        return {name: (p, v) for name, (p, v, _a) in out.items()}

    def _fade_service(self, req):
        target = 0.0 if req in (None, "out", 0, 0.0) else 1.0
        self.loop.fade(target, 0.5)
        return {"state": "FADING", "target": target}

    # -- lifecycle -----------------------------------------------------

    def start(self) -> "System":
        if self.started:
            return self
        if self.gateway is not None:
            self.gateway.start()
            self._teardown.append(self.gateway.stop)
        self.started = True
        return self

    def stop(self) -> None:
        self._run_teardown()
        self.started = False

    def _run_teardown(self) -> None:
        while self._teardown:
            fn = self._teardown.pop()
            try:
                fn()
            except Exception:
                log.exception("teardown step failed")

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    # -- headless lockstep loop ---------------------------------------

    def run_headless(self, duration: Optional[float] = None,
                     bag_file: Optional[str] = None,
                     stop_on_goal: bool = False) -> dict:
        """Drive sim + control + estimation + behavior in lockstep.

        Returns a result dict with the score, fall bookkeeping and a
        success flag suitable for a CI exit code.
        """
        if self.sim is None or self.loop is None:
            raise LaunchError("headless run needs world_sim and "
                              "robot_control nodes")
        sim = self.sim
        duration = duration if duration is not None else self.spec.duration
        dt = self.loop.tick
        behavior_div = 2   # ~62 Hz
        vision_div = 12    # ~10 Hz perception / estimation
        total = int(round(duration / dt))
        events = list(self._events)
        mode = self.scenario.mode if self.scenario else "geometric"
        odom_acc = (0.0, 0.0, 0.0)
        goal_time: Optional[float] = None
        drain_bag = close_bag = None
        writer = None
        if bag_file is not None:
            drain_bag, close_bag = record_topics(self.bus,
                                                 self.spec.bag_topics)
            writer = BagWriter(bag_file, start_time=sim.state.t)

        prev_phase = sim.state.game.phase
        for k in range(total):
            t = sim.state.t
            while events and events[0]["t"] <= t:
                self._apply_event(events.pop(0))
            game = sim.referee_step(dt)
            if game.phase is not prev_phase:
                # READY teleports robot and ball back to kickoff spots
                if game.phase is GamePhase.READY and self.mcl is not None:
                    self.mcl.reinitialize()
                prev_phase = game.phase
            self.bus.publish("/game/state", game, stamp=t)

            self.loop.step()
            delta = (0.0, 0.0, 0.0)
            for msg in self._odom_sub.drain():
                delta = pose_compose(delta, msg.payload)
            walking = self.gait is not None and self.gait.state.stepping \
                and self.gait.command.walk and not self.fall_active
            kick = self._kick_due(t)
            sim.step(delta, kick=kick, walking=walking, dt=dt)
            odom_acc = pose_compose(odom_acc, delta)

            if sim.state.score > 0 and goal_time is None:
                goal_time = sim.state.t
                if stop_on_goal:
                    break

            if k % vision_div == 0:
                odom_acc = self._estimation_tick(mode, odom_acc,
                                                 dt * vision_div)
            if k % behavior_div == 0:
                self._behavior_tick(t)
            if writer is not None and k % 25 == 0:
                for rec in drain_bag():
                    writer.write(rec.stamp, rec.path, rec.payload)
            self.recorder.record("/gait/phase", sim.state.t,
                                 self.gait.state.phase if self.gait else 0.0)

        if writer is not None:
            for rec in drain_bag():
                writer.write(rec.stamp, rec.path, rec.payload)
            close_bag()
            writer.finalize()
        success = sim.state.score > 0 or (
            self._fall_events["injected"] > 0 and
            self._fall_events["injected"] == self._fall_events["recovered"])
        return {"score": sim.state.score, "duration": sim.state.t,
                "goal_time": goal_time, "falls": dict(self._fall_events),
                "success": success}

    @property
    def fall_active(self) -> bool:
        return self.fall is not None and self.fall.state is not FallState.OK

    def _apply_event(self, ev: dict) -> None:
        kind = ev["type"]
        if kind == "fall":
            self.sim.inject_fall(ev.get("kind", "prone"))
            self._fall_events["injected"] += 1
        elif kind == "place_ball":
            self.sim.state.ball_pos = np.array(ev["pos"], dtype=float)
            self.sim.state.ball_vel = np.zeros(2)
        elif kind == "place_robot":
            self.sim.state.pose = np.array(ev["pose"], dtype=float)
        elif kind == "add_obstacle":
            self.sim.state.obstacles.append(np.array(ev["pos"], dtype=float))
        else:
            raise LaunchError(f"unknown scenario event type: {kind}")

    def _estimation_tick(self, mode: str, odom_acc, dt: float):
        sim = self.sim
        obs = sim.gen_observations(mode=mode, noise=True)
        t = obs["stamp"]
        self.bus.publish("/vision/detections", obs["detections"], stamp=t)
        self.bus.publish("/sim/truth", {
            "pose": sim.state.pose.copy(),
            "ball": sim.state.ball_pos.copy(),
            "attitude": sim.state.attitude,
        }, stamp=t)
        if self.attitude_filter is not None:
            self.attitude = self.attitude_filter.update(
                self.attitude, obs["gyro"], obs["accel"], dt,
                compass=obs["compass"])
            self.bus.publish("/imu/attitude", self.attitude, stamp=t)
        if self.mcl is not None:
            belief = self.mcl.step(odom_acc, obs["detections"].all(),
                                   compass=obs["compass"], stamp=t)
            self.bus.publish("/localization/pose", belief, stamp=t)
            self.recorder.record("/localization/confidence", t,
                                 belief.confidence)
        self._fall_tick(obs, dt, t)
        belief = self.mcl.belief.mean if self.mcl is not None else \
            np.zeros(3)
        conf = self.mcl.belief.confidence if self.mcl is not None else 0.0
        self.history.append({
            "t": t,
            "true_x": float(sim.state.pose[0]),
            "true_y": float(sim.state.pose[1]),
            "true_theta": float(sim.state.pose[2]),
            "belief_x": float(belief[0]),
            "belief_y": float(belief[1]),
            "belief_theta": float(belief[2]),
            "ball_x": float(sim.state.ball_pos[0]),
            "ball_y": float(sim.state.ball_pos[1]),
            "confidence": float(conf),
            "score": sim.state.score,
        })
        return (0.0, 0.0, 0.0)

    def _fall_tick(self, obs, dt: float, t: float) -> None:
        if self.fall is None:
            return
        was = self.fall.state
        current_q = {}
        if self.loop.last_feedback is not None:
            current_q = dict(zip(self.model.joint_names,
                                 self.loop.last_feedback.position))
        state = self.fall.step(self.attitude.roll, self.attitude.pitch,
                               obs["accel"], obs["gyro"], dt,
                               player=self.player, current_q=current_q, t=t)
        if state in (FallState.GETUP_PRONE, FallState.GETUP_SUPINE) and \
                self.player is not None and self.player.playing is None:
            # the kinematic plant stands back up when the motion finishes
            self.sim.clear_fall()
        if state is FallState.RECOVERED and was is not FallState.RECOVERED:
            self._fall_events["recovered"] += 1
        self.recorder.record("/fall/state", t, state.name)

    def _behavior_tick(self, t: float) -> None:
        playing = self.player.playing if self.player is not None else None
        self.bus.publish("/motion/state",
                         {"playing": playing is not None, "name": playing},
                         stamp=t)
        if self.behavior is not None:
            self.behavior.step(t)
        for msg in self._motion_req.drain():
            self._handle_motion_request(msg.payload, t)

    def _handle_motion_request(self, name: str, t: float) -> None:
        if self.player is None or self.player.playing is not None or \
                self.fall_active:
            return
        try:
            current_q = {}
            if self.loop.last_feedback is not None:
                current_q = dict(zip(self.model.joint_names,
                                     self.loop.last_feedback.position))
            self.player.play(name, current_q, t)
        except Exception as exc:
            log.warning("motion request %s rejected: %s", name, exc)
            return
        if name == "kick":
            self._kick_contact_t = t + 0.5 * self.player._planned.duration

    def _kick_due(self, t: float) -> bool:
        if self._kick_contact_t is not None and t >= self._kick_contact_t:
            self._kick_contact_t = None
            return True
        return False


def launch(filename, strict: bool = True) -> System:
    return System(parse_launch(filename, strict=strict)).start()
