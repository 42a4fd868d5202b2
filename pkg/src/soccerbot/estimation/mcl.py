"""Monte Carlo localization over goal posts, line crossings and compass."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from ..geometry import wrap_angle
from .fieldmap import LandmarkMap


@dataclass
class MCLConfig:
    n_particles: int = 250
    sigma_landmark: float = 0.3  # m, egocentric landmark likelihood
    sigma_compass: float = 0.2  # rad
    p_floor: float = 1e-4
    noise_xy: float = 0.15  # odometry noise sigma per meter traveled
    noise_theta: float = 0.25  # heading noise sigma per unit of motion
    resample_ratio: float = 0.5  # resample when ESS < ratio * N
    jitter_xy: float = 0.08  # roughening applied to resampled copies
    jitter_theta: float = 0.08
    flip_confirm: int = 3  # consecutive compass disagreements before a flip


@dataclass
class PoseBelief:
    mean: np.ndarray  # (x, y, theta)
    covariance: np.ndarray  # 3x3
    confidence: float
    stamp: float = 0.0


def init_uniform(lmap: LandmarkMap, n: int,
                 rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    x0, x1, y0, y1 = lmap.bounds()
    particles = np.column_stack([
        rng.uniform(x0, x1, n),
        rng.uniform(y0, y1, n),
        rng.uniform(-math.pi, math.pi, n),
    ])
    weights = np.full(n, 1.0 / n)
    return particles, weights


def mcl_predict(particles: np.ndarray, delta: tuple[float, float, float],
                config: MCLConfig, rng: np.random.Generator | None = None
                ) -> np.ndarray:
    """Move every particle by the body-frame odometry increment."""
    dx, dy, dth = delta
    c = np.cos(particles[:, 2])
    s = np.sin(particles[:, 2])
    out = particles.copy()
    out[:, 0] += c * dx - s * dy
    out[:, 1] += s * dx + c * dy
    out[:, 2] = np.mod(out[:, 2] + dth + math.pi, 2.0 * math.pi) - math.pi
    travel = math.hypot(dx, dy) + abs(dth)
    if rng is not None and travel > 0.0:
        n = len(out)
        out[:, 0] += rng.normal(0.0, config.noise_xy * travel, n)
        out[:, 1] += rng.normal(0.0, config.noise_xy * travel, n)
        out[:, 2] += rng.normal(0.0, config.noise_theta * travel, n)
        out[:, 2] = np.mod(out[:, 2] + math.pi, 2.0 * math.pi) - math.pi
    return out


def _detection_kind(det) -> str:
    if det.kind == "post":
        return "post"
    if det.kind == "crossing":
        return det.crossing_type
    return det.kind


def mcl_correct(particles: np.ndarray, weights: np.ndarray, detections,
                lmap: LandmarkMap, config: MCLConfig,
                compass: float | None = None
                ) -> tuple[np.ndarray, bool]:
    """Reweight particles; returns (weights, reinitialize_flag).

    `detections` is any iterable of objects with kind, ego and, for
    crossings, crossing_type attributes (a DetectionSet works via .all()).
    """
    if hasattr(detections, "all"):
        detections = detections.all()
    w = weights.astype(float).copy()
    c = np.cos(particles[:, 2])
    s = np.sin(particles[:, 2])
    var = config.sigma_landmark ** 2
    for det in detections:
        kind = _detection_kind(det)
        try:
            landmarks = lmap.landmarks(kind)
        except KeyError:
            continue
        if len(landmarks) == 0:
            continue
        ex, ey = float(det.ego[0]), float(det.ego[1])
        # egocentric prediction error has the same norm in the world frame
        ox = particles[:, 0] + c * ex - s * ey
        oy = particles[:, 1] + s * ex + c * ey
        d2 = (landmarks[:, 0][None, :] - ox[:, None]) ** 2 + \
             (landmarks[:, 1][None, :] - oy[:, None]) ** 2
        lik = np.exp(-d2.min(axis=1) / (2.0 * var))
        w *= np.maximum(lik, config.p_floor)
    if compass is not None:
        diff = np.mod(compass - particles[:, 2] + math.pi,
                      2.0 * math.pi) - math.pi
        lik = np.exp(-diff ** 2 / (2.0 * config.sigma_compass ** 2))
        w *= np.maximum(lik, config.p_floor)
    total = w.sum()
    if not np.isfinite(total) or total <= 0.0:
        return np.full(len(w), 1.0 / len(w)), True
    return w / total, False


def systematic_resample(particles: np.ndarray, weights: np.ndarray,
                        rng: np.random.Generator) -> np.ndarray:
    n = len(particles)
    positions = (rng.uniform(0.0, 1.0) + np.arange(n)) / n
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    idx = np.searchsorted(cumulative, positions)
    return particles[idx].copy()


def effective_sample_size(weights: np.ndarray) -> float:
    return 1.0 / float(np.sum(weights ** 2))


def belief_from_particles(particles: np.ndarray, weights: np.ndarray,
                          stamp: float = 0.0) -> PoseBelief:
    mx = float(np.sum(weights * particles[:, 0]))
    my = float(np.sum(weights * particles[:, 1]))
    mth = math.atan2(float(np.sum(weights * np.sin(particles[:, 2]))),
                     float(np.sum(weights * np.cos(particles[:, 2]))))
    dev = particles - np.array([mx, my, mth])
    dev[:, 2] = np.mod(dev[:, 2] + math.pi, 2.0 * math.pi) - math.pi
    cov = (weights[:, None] * dev).T @ dev
    cov = 0.5 * (cov + cov.T)
    confidence = 1.0 / (1.0 + float(cov[0, 0] + cov[1, 1]))
    return PoseBelief(np.array([mx, my, mth]), cov, confidence, stamp)


def mcl_resample_estimate(particles: np.ndarray, weights: np.ndarray,
                          config: MCLConfig, rng: np.random.Generator,
                          stamp: float = 0.0
                          ) -> tuple[np.ndarray, np.ndarray, PoseBelief]:
    belief = belief_from_particles(particles, weights, stamp)
    n = len(particles)
    if effective_sample_size(weights) < config.resample_ratio * n:
        particles = systematic_resample(particles, weights, rng)
        if config.jitter_xy > 0.0:
            particles[:, 0] += rng.normal(0.0, config.jitter_xy, n)
            particles[:, 1] += rng.normal(0.0, config.jitter_xy, n)
        if config.jitter_theta > 0.0:
            particles[:, 2] = np.mod(
                particles[:, 2] + rng.normal(0.0, config.jitter_theta, n)
                + math.pi, 2.0 * math.pi) - math.pi
        weights = np.full(n, 1.0 / n)
    return particles, weights, belief


class MonteCarloLocalizer:
    """Stateful wrapper running predict/correct/resample over the bus data."""

    def __init__(self, lmap: LandmarkMap | None = None,
                 config: MCLConfig | None = None, seed: int | None = None):
        self.lmap = lmap if lmap is not None else LandmarkMap()
        self.config = config if config is not None else MCLConfig()
        self.rng = np.random.default_rng(seed)
        self.particles, self.weights = init_uniform(
            self.lmap, self.config.n_particles, self.rng)
        self.belief = belief_from_particles(self.particles, self.weights)
        self._flip_count = 0

    def reinitialize(self) -> None:
        self.particles, self.weights = init_uniform(
            self.lmap, self.config.n_particles, self.rng)
        self._flip_count = 0

    def predict(self, delta) -> None:
        self.particles = mcl_predict(self.particles, delta, self.config,
                                     self.rng)

    def correct(self, detections, compass: float | None = None) -> None:
        self.weights, reinit = mcl_correct(self.particles, self.weights,
                                           detections, self.lmap,
                                           self.config, compass)
        if reinit:
            self.reinitialize()
            return
        if compass is not None:
            self._check_mode_flip(compass)

    def _check_mode_flip(self, compass: float) -> None:
        """Escape capture of the 180-degree mirror mode.

        The field is symmetric under rotation about its center, so the
        landmark likelihood cannot separate the two modes and the floor
        on the compass factor lets a collapsed cloud persist in the
        wrong one. Once the heading cloud is tight but persistently
        opposes the compass, mirror every particle onto the other mode.
        """
        cw = float(np.sum(self.weights * np.cos(self.particles[:, 2])))
        sw = float(np.sum(self.weights * np.sin(self.particles[:, 2])))
        resultant = math.hypot(cw, sw)
        mean_theta = math.atan2(sw, cw)
        if resultant > 0.8 and \
                abs(wrap_angle(mean_theta - compass)) > math.pi / 2.0:
            self._flip_count += 1
        else:
            self._flip_count = 0
        if self._flip_count >= self.config.flip_confirm:
            self.particles[:, :2] *= -1.0
            self.particles[:, 2] = np.mod(
                self.particles[:, 2], 2.0 * math.pi) - math.pi
            self._flip_count = 0

    def resample_estimate(self, stamp: float = 0.0) -> PoseBelief:
        self.particles, self.weights, self.belief = mcl_resample_estimate(
            self.particles, self.weights, self.config, self.rng, stamp)
        return self.belief

    def step(self, delta, detections, compass: float | None = None,
             stamp: float = 0.0) -> PoseBelief:
        self.predict(delta)
        self.correct(detections, compass)
        return self.resample_estimate(stamp)
