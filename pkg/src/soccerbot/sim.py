"""Kinematic soccer-world simulator: ground truth, referee, observations.

The robot plant is the gait odometry corrupted by slip noise; the ball is
a point mass with dry friction.  Observations come either as geometric
egocentric vectors with gaussian noise or through the full synthetic
render + perception pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace

import numpy as np
import yaml

from .field import FieldSpec
from .game import GamePhase, GameState
from .geometry import rot_rpy, wrap_angle
from .vision.detect import Detection, DetectionSet, DetectorConfig, \
    detect_objects
from .vision.fisheye import FisheyeModel, default_camera_pose
from .vision.lut import default_lut
from .vision.render import Scene, render_synthetic
from .vision.segment import segment

GRAVITY = 9.81


@dataclass
class SimConfig:
    slip_sigma: tuple[float, float, float] = (0.05, 0.05, 0.05)  # per axis
    ball_friction: float = 0.8  # m/s^2
    kick_speed: float = 2.5  # m/s
    kick_window_x: tuple[float, float] = (0.05, 0.35)
    kick_window_y: float = 0.18
    contact_radius: float = 0.28
    dribble_epsilon: float = 0.08  # ball leaves contact slightly faster
    fov: float = math.pi  # horizontal cone
    max_range: float = 6.5
    obs_sigma_ball: float = 0.03
    obs_sigma_landmark: float = 0.08
    obs_sigma_obstacle: float = 0.08
    compass_sigma: float = 0.05
    gyro_sigma: float = 0.005
    accel_sigma: float = 0.05
    wobble_amplitude: float = 0.02  # rad of gait-phase trunk wobble
    wobble_frequency: float = 1.8
    phase_initial: float = 1.0
    phase_ready: float = 1.5
    phase_set: float = 0.5
    kickoff_robot: tuple[float, float, float] = (-1.0, 0.0, 0.0)
    kickoff_ball: tuple[float, float] = (0.0, 0.0)
    fall_ramp_time: float = 0.3


@dataclass
class WorldState:
    t: float = 0.0
    pose: np.ndarray = dc_field(default_factory=lambda: np.zeros(3))
    attitude: tuple[float, float] = (0.0, 0.0)  # roll, pitch
    ball_pos: np.ndarray = dc_field(default_factory=lambda: np.zeros(2))
    ball_vel: np.ndarray = dc_field(default_factory=lambda: np.zeros(2))
    obstacles: list = dc_field(default_factory=list)
    game: GameState = dc_field(default_factory=GameState)
    score: int = 0


class WorldSim:
    def __init__(self, field: FieldSpec | None = None,
                 config: SimConfig | None = None, seed: int | None = None):
        self.field = field if field is not None else FieldSpec()
        self.config = config if config is not None else SimConfig()
        self.rng = np.random.default_rng(seed)
        self.state = WorldState()
        self.state.pose = np.array(self.config.kickoff_robot, dtype=float)
        self.state.ball_pos = np.array(self.config.kickoff_ball, dtype=float)
        self._phase_t = 0.0
        self._walk_phase = 0.0
        self._fall_kind: str | None = None
        self._fall_progress = 0.0
        self._camera_pose = default_camera_pose()
        self._fisheye = FisheyeModel()
        self._lut = default_lut()
        self._detector = DetectorConfig()

    # -- dynamics ---------------------------------------------------------

    def step(self, odom_delta=(0.0, 0.0, 0.0), kick: bool = False,
             walking: bool = False, dt: float = 0.02) -> WorldState:
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        st = self.state
        cfg = self.config
        dx, dy, dth = odom_delta
        if any(abs(v) > 0.0 for v in odom_delta):
            sx, sy, sth = cfg.slip_sigma
            dx *= 1.0 + self.rng.normal(0.0, sx)
            dy *= 1.0 + self.rng.normal(0.0, sy)
            dth *= 1.0 + self.rng.normal(0.0, sth)
        if self._fall_kind is None:
            c, s = math.cos(st.pose[2]), math.sin(st.pose[2])
            st.pose[0] += c * dx - s * dy
            st.pose[1] += s * dx + c * dy
            st.pose[2] = wrap_angle(st.pose[2] + dth)

        # ball friction
        speed = float(np.linalg.norm(st.ball_vel))
        if speed > 0.0:
            drop = cfg.ball_friction * dt
            st.ball_vel *= max(0.0, speed - drop) / speed
        st.ball_pos += st.ball_vel * dt

        ego = self.ball_ego()
        if kick and self._ball_in_kick_window(ego):
            heading = np.array([math.cos(st.pose[2]), math.sin(st.pose[2])])
            st.ball_vel = cfg.kick_speed * heading
        elif walking and self._fall_kind is None:
            dist = float(np.linalg.norm(st.ball_pos - st.pose[:2]))
            forward = dx > 0.0
            if dist < cfg.contact_radius and forward:
                push = st.ball_pos - st.pose[:2]
                norm = float(np.linalg.norm(push))
                direction = push / norm if norm > 1e-9 else \
                    np.array([math.cos(st.pose[2]), math.sin(st.pose[2])])
                robot_speed = math.hypot(dx, dy) / dt
                st.ball_vel = (robot_speed + cfg.dribble_epsilon) * direction

        self._clamp_ball()
        if walking:
            self._walk_phase += 2.0 * math.pi * cfg.wobble_frequency * dt
        self._update_attitude(dt, walking)
        st.t += dt
        return st

    def _ball_in_kick_window(self, ego) -> bool:
        cfg = self.config
        return cfg.kick_window_x[0] <= ego[0] <= cfg.kick_window_x[1] and \
            abs(ego[1]) <= cfg.kick_window_y

    def _clamp_ball(self) -> None:
        st = self.state
        limit_x = self.field.half_length + self.field.border
        limit_y = self.field.half_width + self.field.border
        for axis, limit in ((0, limit_x), (1, limit_y)):
            if abs(st.ball_pos[axis]) > limit:
                st.ball_pos[axis] = math.copysign(limit, st.ball_pos[axis])
                st.ball_vel[axis] = 0.0

    def _update_attitude(self, dt: float, walking: bool) -> None:
        cfg = self.config
        wobble_r = cfg.wobble_amplitude * math.sin(self._walk_phase) \
            if walking else 0.0
        wobble_p = 0.5 * cfg.wobble_amplitude * math.sin(2 * self._walk_phase) \
            if walking else 0.0
        if self._fall_kind is not None:
            self._fall_progress = min(
                1.0, self._fall_progress + dt / cfg.fall_ramp_time)
            tilt = self._fall_progress * math.radians(85.0)
            pitch = tilt if self._fall_kind == "prone" else -tilt
            self.state.attitude = (0.0, pitch)
        else:
            self.state.attitude = (wobble_r, wobble_p)

    def inject_fall(self, kind: str) -> None:
        if kind not in ("prone", "supine"):
            raise ValueError("fall kind must be prone or supine")
        self._fall_kind = kind
        self._fall_progress = 0.0

    def clear_fall(self) -> None:
        self._fall_kind = None
        self._fall_progress = 0.0

    @property
    def fallen(self) -> bool:
        return self._fall_kind is not None

    def ball_ego(self) -> np.ndarray:
        st = self.state
        c, s = math.cos(st.pose[2]), math.sin(st.pose[2])
        d = st.ball_pos - st.pose[:2]
        return np.array([c * d[0] + s * d[1], -s * d[0] + c * d[1]])

    # -- referee ----------------------------------------------------------

    def referee_step(self, dt: float = 0.02) -> GameState:
        st = self.state
        cfg = self.config
        game = st.game
        hl = self.field.half_length
        hw = self.field.goal_width / 2.0
        if game.phase == GamePhase.PLAYING and \
                st.ball_pos[0] > hl and abs(st.ball_pos[1]) < hw:
            st.score += 1
            game.phase = GamePhase.READY
            self._phase_t = 0.0
            self.reset_kickoff()
            return game
        self._phase_t += dt
        if game.phase == GamePhase.INITIAL and \
                self._phase_t >= cfg.phase_initial:
            game.phase = GamePhase.READY
            self._phase_t = 0.0
        elif game.phase == GamePhase.READY and \
                self._phase_t >= cfg.phase_ready:
            game.phase = GamePhase.SET
            self._phase_t = 0.0
        elif game.phase == GamePhase.SET and self._phase_t >= cfg.phase_set:
            game.phase = GamePhase.PLAYING
            self._phase_t = 0.0
        return game

    def reset_kickoff(self) -> None:
        self.state.pose = np.array(self.config.kickoff_robot, dtype=float)
        self.state.ball_pos = np.array(self.config.kickoff_ball, dtype=float)
        self.state.ball_vel = np.zeros(2)

    # -- observations -----------------------------------------------------

    def _visible(self, ego, noiseless_range=None) -> bool:
        rng = noiseless_range if noiseless_range is not None else \
            math.hypot(ego[0], ego[1])
        if rng > self.config.max_range:
            return False
        return abs(math.atan2(ego[1], ego[0])) <= self.config.fov / 2.0

    def _ego(self, world_xy) -> np.ndarray:
        st = self.state
        c, s = math.cos(st.pose[2]), math.sin(st.pose[2])
        d = np.asarray(world_xy, dtype=float) - st.pose[:2]
        return np.array([c * d[0] + s * d[1], -s * d[0] + c * d[1]])

    def gen_observations(self, mode: str = "geometric", noise: bool = True
                         ) -> dict:
        st = self.state
        cfg = self.config
        if mode == "geometric":
            detections = self._geometric_detections(noise)
        elif mode == "rendered":
            detections = self._rendered_detections()
        else:
            raise ValueError("mode must be geometric or rendered")
        compass = wrap_angle(st.pose[2] + (
            self.rng.normal(0.0, cfg.compass_sigma) if noise else 0.0))
        roll, pitch = st.attitude
        rot = rot_rpy(roll, pitch, st.pose[2])
        accel = rot.T @ np.array([0.0, 0.0, GRAVITY])
        gyro = np.zeros(3)
        if noise:
            accel = accel + self.rng.normal(0.0, cfg.accel_sigma, 3)
            gyro = gyro + self.rng.normal(0.0, cfg.gyro_sigma, 3)
        return {
            "detections": detections,
            "compass": compass,
            "accel": accel,
            "gyro": gyro,
            "attitude": (roll, pitch, st.pose[2]),
            "game": replace(st.game),
            "stamp": st.t,
        }

    def _noisy(self, ego, sigma, noise):
        if not noise:
            return np.array([ego[0], ego[1], 0.0])
        return np.array([ego[0] + self.rng.normal(0.0, sigma),
                         ego[1] + self.rng.normal(0.0, sigma), 0.0])

    def _geometric_detections(self, noise: bool) -> DetectionSet:
        cfg = self.config
        out = DetectionSet(stamp=self.state.t)
        ego = self.ball_ego()
        if self._visible(ego):
            out.balls.append(Detection(
                "ball", (0.0, 0.0), self._noisy(ego, cfg.obs_sigma_ball,
                                                noise), 0.9))
        for post in self.field.posts():
            ego = self._ego(post)
            if self._visible(ego):
                out.posts.append(Detection(
                    "post", (0.0, 0.0),
                    self._noisy(ego, cfg.obs_sigma_landmark, noise), 0.8))
        for x, y, kind in self.field.crossings():
            ego = self._ego((x, y))
            if self._visible(ego):
                out.crossings.append(Detection(
                    "crossing", (0.0, 0.0),
                    self._noisy(ego, cfg.obs_sigma_landmark, noise), 0.6,
                    crossing_type=kind))
        for obs in self.state.obstacles:
            ego = self._ego(obs)
            if self._visible(ego):
                out.obstacles.append(Detection(
                    "obstacle", (0.0, 0.0),
                    self._noisy(ego, cfg.obs_sigma_obstacle, noise), 0.7))
        return out

    def _rendered_detections(self) -> DetectionSet:
        st = self.state
        scene = Scene(field=self.field,
                      ball=(float(st.ball_pos[0]), float(st.ball_pos[1])),
                      obstacles=[tuple(o) for o in st.obstacles])
        img = render_synthetic(scene, self._camera_pose, self._fisheye,
                               robot_pose=tuple(st.pose), stamp=st.t)
        binaries = segment(img, self._lut)
        return detect_objects(binaries, self._fisheye, self._camera_pose,
                              self._detector, stamp=st.t)


@dataclass
class ScenarioSpec:
    name: str = "scenario"
    seed: int = 0
    mode: str = "geometric"
    duration: float = 120.0
    robot_pose: tuple[float, float, float] = (-1.0, 0.0, 0.0)
    ball: tuple[float, float] = (0.0, 0.0)
    obstacles: list = dc_field(default_factory=list)
    events: list = dc_field(default_factory=list)  # {t, type, ...}
    sim: dict = dc_field(default_factory=dict)  # SimConfig overrides


def parse_scenario(raw: dict) -> ScenarioSpec:
    if not isinstance(raw, dict):
        raise ValueError("scenario file must hold a mapping")
    spec = ScenarioSpec()
    known = {"name", "seed", "mode", "duration", "robot_pose", "ball",
             "obstacles", "events", "sim"}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
    for key in known & set(raw):
        setattr(spec, key, raw[key])
    spec.robot_pose = tuple(float(v) for v in spec.robot_pose)
    spec.ball = tuple(float(v) for v in spec.ball)
    spec.obstacles = [tuple(float(v) for v in o) for o in spec.obstacles]
    for ev in spec.events:
        if "t" not in ev or "type" not in ev:
            raise ValueError("scenario events need t and type")
    return spec


def load_scenario(path) -> ScenarioSpec:
    with open(path) as fh:
        return parse_scenario(yaml.safe_load(fh))


def make_sim(spec: ScenarioSpec, field: FieldSpec | None = None) -> WorldSim:
    config = SimConfig(**spec.sim) if spec.sim else SimConfig()
    sim = WorldSim(field=field, config=config, seed=spec.seed)
    sim.state.pose = np.array(spec.robot_pose, dtype=float)
    sim.state.ball_pos = np.array(spec.ball, dtype=float)
    sim.state.obstacles = [np.array(o, dtype=float) for o in spec.obstacles]
    return sim
