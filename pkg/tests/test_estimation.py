import math
from dataclasses import dataclass

import numpy as np
import pytest

from soccerbot.estimation import (AttitudeEstimate, AttitudeFilter,
                                  LandmarkMap, MCLConfig,
                                  MonteCarloLocalizer, mcl_correct,
                                  mcl_predict, mcl_resample_estimate)
from soccerbot.estimation.mcl import (belief_from_particles,
                                      effective_sample_size, init_uniform,
                                      systematic_resample)
from soccerbot.geometry import rot_rpy, wrap_angle

G = 9.81


def accel_for(roll, pitch, yaw=0.0):
    return rot_rpy(roll, pitch, yaw).T @ np.array([0.0, 0.0, G])


class TestAttitudeFilter:
    def test_aligned_is_fixed_point(self):
        filt = AttitudeFilter()
        est = AttitudeEstimate()
        out = filt.update(est, np.zeros(3), np.array([0.0, 0.0, G]), 0.008)
        assert out.roll == 0.0 and out.pitch == 0.0 and out.yaw == 0.0

    def test_converges_from_twenty_degrees(self):
        filt = AttitudeFilter()
        rng = np.random.default_rng(2)
        for _ in range(5):
            tilt = math.radians(20.0)
            ang = rng.uniform(0, 2 * math.pi)
            est = AttitudeEstimate(roll=tilt * math.cos(ang),
                                   pitch=tilt * math.sin(ang))
            accel = np.array([0.0, 0.0, G])
            for _ in range(int(3.0 / 0.008)):
                est = filt.update(est, np.zeros(3), accel, 0.008)
            err = math.hypot(est.roll, est.pitch)
            assert err < math.radians(0.5)

    def test_gyro_bias_rejected(self):
        filt = AttitudeFilter()
        est = AttitudeEstimate()
        gyro = np.array([0.02, 0.0, 0.0])
        accel = np.array([0.0, 0.0, G])
        for _ in range(int(60.0 / 0.008)):
            est = filt.update(est, gyro, accel, 0.008)
        assert math.hypot(est.roll, est.pitch) < math.radians(2.0)
        assert est.bias[0] == pytest.approx(0.02, abs=0.005)

    def test_step_response_latency(self):
        # 90% of a tilt step is reached in 1/k_acc seconds (+-20%)
        filt = AttitudeFilter(k_acc=2.0, k_bias=0.0)
        est = AttitudeEstimate()
        target = math.radians(10.0)
        accel = accel_for(target, 0.0)
        t = 0.0
        while est.roll < 0.9 * target:
            est = filt.update(est, np.zeros(3), accel, 0.008)
            t += 0.008
            assert t < 2.0
        assert t == pytest.approx(1.0 / filt.k_acc, rel=0.2)

    def test_accel_gate_skips_correction(self):
        filt = AttitudeFilter()
        est = AttitudeEstimate(roll=0.3)
        shaking = np.array([0.0, 0.0, 2.0 * G])
        out = filt.update(est, np.zeros(3), shaking, 0.008)
        assert out.roll == pytest.approx(0.3)

    def test_gyro_integration(self):
        filt = AttitudeFilter()
        est = AttitudeEstimate()
        gyro = np.array([0.0, 0.5, 0.0])
        bad_accel = np.array([0.0, 0.0, 0.0])  # gated out
        for _ in range(125):
            est = filt.update(est, gyro, bad_accel, 0.008)
        assert est.pitch == pytest.approx(0.5, rel=1e-9)

    def test_compass_fuses_yaw(self):
        filt = AttitudeFilter(k_mag=2.0)
        est = AttitudeEstimate()
        accel = np.array([0.0, 0.0, G])
        for _ in range(int(3.0 / 0.008)):
            est = filt.update(est, np.zeros(3), accel, 0.008, compass=1.0)
        assert est.yaw == pytest.approx(1.0, abs=1e-3)

    def test_angles_stay_wrapped(self):
        filt = AttitudeFilter()
        est = AttitudeEstimate()
        gyro = np.array([0.0, 0.0, 3.0])
        for _ in range(1000):
            est = filt.update(est, gyro, np.zeros(3), 0.008)
        assert -math.pi < est.yaw <= math.pi


class TestLandmarkMap:
    def test_types_present(self):
        lmap = LandmarkMap()
        assert len(lmap.landmarks("post")) == 4
        assert len(lmap.landmarks("L")) == 4
        assert len(lmap.landmarks("T")) == 2
        assert len(lmap.landmarks("X")) == 2

    def test_symmetric_under_half_turn(self):
        lmap = LandmarkMap()
        for kind in lmap.types:
            pts = lmap.landmarks(kind)
            for p in pts:
                flipped = -p
                dist = np.min(np.linalg.norm(pts - flipped, axis=1))
                assert dist < 1e-9

    def test_unknown_type(self):
        with pytest.raises(KeyError):
            LandmarkMap().landmarks("banana")


@dataclass
class Obs:
    kind: str
    ego: np.ndarray
    crossing_type: str | None = None


def ego_of(pose, lm):
    x, y, th = pose
    c, s = math.cos(th), math.sin(th)
    dx, dy = lm[0] - x, lm[1] - y
    return np.array([c * dx + s * dy, -s * dx + c * dy, 0.0])


def post_observations(lmap, pose):
    return [Obs("post", ego_of(pose, p)) for p in lmap.landmarks("post")[:2]]


def crossing_observations(lmap, pose):
    return [Obs("crossing", ego_of(pose, (x, y)), t)
            for x, y, t in lmap.field.crossings()]


class TestPredict:
    def test_zero_delta_unchanged(self):
        rng = np.random.default_rng(0)
        particles, _ = init_uniform(LandmarkMap(), 100, rng)
        out = mcl_predict(particles, (0.0, 0.0, 0.0), MCLConfig(), rng)
        assert np.array_equal(out, particles)

    def test_advance_along_own_heading(self):
        particles = np.array([[0.0, 0.0, 0.0],
                              [0.0, 0.0, math.pi / 2],
                              [1.0, 1.0, math.pi]])
        out = mcl_predict(particles, (0.1, 0.0, 0.0), MCLConfig(), rng=None)
        assert np.allclose(out[0], [0.1, 0.0, 0.0])
        assert np.allclose(out[1], [0.0, 0.1, math.pi / 2])
        assert np.allclose(out[2], [0.9, 1.0, -math.pi], atol=1e-12) or \
            np.allclose(out[2], [0.9, 1.0, math.pi], atol=1e-12)

    def test_noise_grows_spread(self):
        rng = np.random.default_rng(1)
        particles = np.zeros((500, 3))
        out = mcl_predict(particles, (0.2, 0.0, 0.0), MCLConfig(), rng)
        w = np.full(500, 1 / 500)
        before = belief_from_particles(particles, w).covariance
        after = belief_from_particles(out, w).covariance
        assert np.trace(after[:2, :2]) >= np.trace(before[:2, :2])


class TestCorrect:
    def setup_method(self):
        self.lmap = LandmarkMap()
        self.cfg = MCLConfig()

    def test_true_pose_outweighs_offset(self):
        pose = (2.0, 0.5, 0.2)
        obs = post_observations(self.lmap, pose)
        particles = np.array([[2.0, 0.5, 0.2], [3.0, 0.5, 0.2]])
        w, reinit = mcl_correct(particles, np.array([0.5, 0.5]), obs,
                                self.lmap, self.cfg)
        assert not reinit
        assert w[0] > w[1]

    def test_weights_normalized(self):
        rng = np.random.default_rng(5)
        particles, weights = init_uniform(self.lmap, 300, rng)
        obs = post_observations(self.lmap, (1.0, 0.0, 0.0))
        w, _ = mcl_correct(particles, weights, obs, self.lmap, self.cfg,
                           compass=0.0)
        assert abs(w.sum() - 1.0) < 1e-12

    def test_compass_only_depends_on_heading(self):
        particles = np.array([[0.0, 0.0, 0.1], [3.0, -2.0, 0.1],
                              [0.0, 0.0, 1.5]])
        w, _ = mcl_correct(particles, np.full(3, 1 / 3), [], self.lmap,
                           self.cfg, compass=0.1)
        assert w[0] == pytest.approx(w[1])
        assert w[2] < w[0]

    def test_underflow_raises_reinit(self):
        particles = np.array([[0.0, 0.0, 0.0]])
        obs = [Obs("post", np.array([100.0, 0.0, 0.0]))]
        cfg = MCLConfig(p_floor=0.0)
        w, reinit = mcl_correct(particles, np.array([1.0]), obs, self.lmap,
                                cfg)
        assert reinit

    def test_floor_guards_outliers(self):
        pose = (2.0, 0.5, 0.2)
        obs = post_observations(self.lmap, pose)
        obs.append(Obs("post", np.array([-8.0, 5.0, 0.0])))  # nonsense
        particles = np.array([[2.0, 0.5, 0.2]])
        w, reinit = mcl_correct(particles, np.array([1.0]), obs, self.lmap,
                                self.cfg)
        assert not reinit
        assert w[0] == 1.0


class TestResampleEstimate:
    def test_single_heavy_particle(self):
        particles = np.array([[1.0, 2.0, 0.5]] + [[0.0, 0.0, 0.0]] * 9)
        weights = np.array([1.0] + [0.0] * 9)
        cfg = MCLConfig(jitter_xy=0.0, jitter_theta=0.0)
        rng = np.random.default_rng(0)
        out, w, belief = mcl_resample_estimate(particles, weights, cfg, rng)
        assert np.all(out == particles[0])
        assert np.allclose(belief.mean, [1.0, 2.0, 0.5])

    def test_uniform_weights_no_resample(self):
        particles = np.arange(30, dtype=float).reshape(10, 3)
        weights = np.full(10, 0.1)
        assert effective_sample_size(weights) == pytest.approx(10.0)
        out, w, _ = mcl_resample_estimate(particles, weights, MCLConfig(),
                                          np.random.default_rng(0))
        assert np.array_equal(out, particles)

    def test_circular_mean(self):
        particles = np.array([[0.0, 0.0, math.radians(175.0)],
                              [0.0, 0.0, math.radians(-175.0)]])
        belief = belief_from_particles(particles, np.array([0.5, 0.5]))
        assert abs(wrap_angle(belief.mean[2] - math.pi)) < 1e-9

    def test_covariance_psd_and_confidence(self):
        rng = np.random.default_rng(3)
        particles, weights = init_uniform(LandmarkMap(), 200, rng)
        belief = belief_from_particles(particles, weights)
        eig = np.linalg.eigvalsh(belief.covariance)
        assert np.all(eig >= -1e-12)
        assert 0.0 <= belief.confidence <= 1.0

    def test_resampling_unbiased(self):
        rng = np.random.default_rng(9)
        particles = np.arange(30, dtype=float).reshape(10, 3)
        weights = rng.dirichlet(np.ones(10))
        counts = np.zeros(10)
        runs = 1000
        for _ in range(runs):
            out = systematic_resample(particles, weights, rng)
            for i in range(10):
                counts[i] += np.sum(out[:, 0] == particles[i, 0])
        expected = 10 * weights * runs
        assert np.all(np.abs(counts - expected) < 0.12 * runs)


class TestConvergence:
    def test_two_posts_and_compass(self):
        lmap = LandmarkMap()
        true = (2.0, 0.5, 0.2)
        obs = post_observations(lmap, true)
        # closed-form triangulation from one post fixes the position
        post = lmap.landmarks("post")[0]
        c, s = math.cos(true[2]), math.sin(true[2])
        o = obs[0].ego
        tri = post - np.array([c * o[0] - s * o[1], s * o[0] + c * o[1]])
        assert np.allclose(tri, true[:2], atol=1e-12)

        for seed in range(3):
            cfg = MCLConfig(n_particles=1000)
            rng = np.random.default_rng(seed)
            particles, weights = init_uniform(lmap, 1000, rng)
            for _ in range(30):
                weights, _ = mcl_correct(particles, weights, obs, lmap, cfg,
                                         compass=true[2])
                particles, weights, belief = mcl_resample_estimate(
                    particles, weights, cfg, rng)
            err = np.hypot(belief.mean[0] - true[0],
                           belief.mean[1] - true[1])
            ang = abs(wrap_angle(belief.mean[2] - true[2]))
            assert err < 0.1
            assert ang < math.radians(5.0)

    def bimodal_cloud(self, rng, true, mirror, n=1000):
        half = n // 2
        p1 = np.column_stack([rng.normal(true[0], 0.3, half),
                              rng.normal(true[1], 0.3, half),
                              rng.normal(true[2], 0.2, half)])
        p2 = np.column_stack([rng.normal(mirror[0], 0.3, half),
                              rng.normal(mirror[1], 0.3, half),
                              rng.normal(mirror[2], 0.2, half)])
        return np.vstack([p1, p2]), np.full(n, 1.0 / n)

    def test_symmetry_needs_compass(self):
        lmap = LandmarkMap()
        true = (1.0, 0.5, 0.3)
        mirror = (-1.0, -0.5, wrap_angle(0.3 + math.pi))
        obs = crossing_observations(lmap, true)
        cfg = MCLConfig(n_particles=1000)

        def run(seed, compass):
            rng = np.random.default_rng(seed)
            particles, weights = self.bimodal_cloud(rng, true, mirror)
            for _ in range(20):
                weights, _ = mcl_correct(particles, weights, obs, lmap, cfg,
                                         compass=compass)
                particles, weights, _ = mcl_resample_estimate(
                    particles, weights, cfg, rng)
            near1 = np.hypot(particles[:, 0] - true[0],
                             particles[:, 1] - true[1]) < 1.0
            near2 = np.hypot(particles[:, 0] - mirror[0],
                             particles[:, 1] - mirror[1]) < 1.0
            return near1.mean(), near2.mean()

        for seed in (0, 1, 2):
            m1, m2 = run(seed, compass=None)
            assert m1 >= 0.2 and m2 >= 0.2
        for seed in (0, 1, 2):
            m1, m2 = run(seed, compass=true[2])
            assert m1 >= 0.9


class TestLocalizerClass:
    def test_step_api(self):
        lmap = LandmarkMap()
        true = (2.0, 0.5, 0.2)
        loc = MonteCarloLocalizer(lmap, MCLConfig(n_particles=500), seed=4)
        obs = post_observations(lmap, true)
        for _ in range(30):
            belief = loc.step((0.0, 0.0, 0.0), obs, compass=true[2])
        assert np.hypot(belief.mean[0] - true[0],
                        belief.mean[1] - true[1]) < 0.15

    def test_reinitialize_spreads(self):
        loc = MonteCarloLocalizer(seed=1)
        loc.particles[:] = 0.0
        loc.reinitialize()
        assert loc.particles[:, 0].std() > 1.0
