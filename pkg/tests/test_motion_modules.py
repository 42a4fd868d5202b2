import math

import numpy as np
import pytest

from soccerbot.motion import (FallProtection, FallState, Gait, GaitCommand,
                              GaitState, HeadControl, Keyframe, KeyframeMotion,
                              MotionPlayer, load_motion)
from soccerbot.motion.gait import GaitParams, gait_step
from soccerbot.motion.player import MotionError, parse_motion, save_motion


def simple_motion(name="wave", v_lim=10.0, a_lim=100.0):
    joints = ["a", "b"]
    kfs = [
        Keyframe(0.0, {"a": 0.0, "b": 0.0}, {"a": 0.0, "b": 0.0}),
        Keyframe(1.0, {"a": 1.0, "b": -0.5}, {"a": 0.0, "b": 0.0},
                 efforts={"a": 0.7}),
        Keyframe(2.0, {"a": 0.0, "b": 0.0}, {"a": 0.0, "b": 0.0}),
    ]
    return KeyframeMotion(name, joints, kfs, vel_limit=v_lim, acc_limit=a_lim)


class TestKeyframeMotion:
    def test_sample_at_keyframe_times_exact(self):
        m = simple_motion()
        m.plan()
        out = m.sample(1.0)
        assert out["a"][0] == pytest.approx(1.0, abs=1e-9)
        assert out["a"][1] == pytest.approx(0.0, abs=1e-9)
        assert out["b"][0] == pytest.approx(-0.5, abs=1e-9)

    def test_sample_end_holds_final_values(self):
        m = simple_motion()
        out = m.sample(m.duration)
        assert out["a"][0] == pytest.approx(0.0, abs=1e-9)

    def test_out_of_range_rejected(self):
        m = simple_motion()
        m.plan()
        with pytest.raises(MotionError):
            m.sample(-0.5)
        with pytest.raises(MotionError):
            m.sample(m.duration + 0.1)

    def test_effort_held_stepwise(self):
        m = simple_motion()
        assert m.sample(0.5)["a"][2] == 1.0   # before the override keyframe
        assert m.sample(1.5)["a"][2] == 0.7   # override held during segment 2

    def test_velocity_matches_finite_difference(self):
        m = simple_motion()
        h = 1e-6
        for t in (0.3, 0.7, 1.2, 1.8):
            fd = (m.sample(t + h)["a"][0] - m.sample(t - h)["a"][0]) / (2 * h)
            assert fd == pytest.approx(m.sample(t)["a"][1], abs=1e-4)

    def test_c0_continuity_randomized_motions(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            n_kf = rng.integers(2, 6)
            times = np.cumsum(rng.uniform(0.1, 1.0, n_kf))
            v_max, a_max = rng.uniform(1, 4), rng.uniform(5, 50)
            kfs = []
            for t in times:
                kfs.append(Keyframe(
                    float(t), {"j": float(rng.uniform(-2, 2))},
                    {"j": float(rng.uniform(-v_max, v_max))}))
            m = KeyframeMotion("r", ["j"], kfs, v_max, a_max)
            m.plan()
            for bt in m._times[1:-1]:
                lo = m.sample(bt - 1e-12)
                hi = m.sample(bt + 1e-12)
                assert lo["j"][0] == pytest.approx(hi["j"][0], abs=1e-9)
                assert lo["j"][1] == pytest.approx(hi["j"][1], abs=1e-6)

    def test_nonincreasing_times_rejected(self):
        kfs = [Keyframe(0.5, {"j": 0.0}, {"j": 0.0}),
               Keyframe(0.5, {"j": 1.0}, {"j": 0.0})]
        with pytest.raises(MotionError):
            KeyframeMotion("bad", ["j"], kfs).validate()

    def test_keyframe_joint_mismatch_rejected(self):
        kfs = [Keyframe(0.0, {"j": 0.0}, {"j": 0.0}),
               Keyframe(1.0, {"other": 1.0}, {"other": 0.0})]
        with pytest.raises(MotionError):
            KeyframeMotion("bad", ["j"], kfs).validate()

    def test_file_roundtrip(self, tmp_path):
        m = simple_motion()
        path = tmp_path / "wave.yaml"
        save_motion(m, str(path))
        loaded = load_motion(str(path))
        assert loaded.name == "wave"
        assert loaded.joints == m.joints
        assert loaded.keyframes[1].positions == m.keyframes[1].positions
        assert loaded.keyframes[1].efforts == {"a": 0.7}

    def test_shipped_motions_parse_and_plan(self):
        import importlib.resources
        root = importlib.resources.files("soccerbot.data").joinpath("motions")
        names = set()
        for entry in root.iterdir():
            import yaml
            m = parse_motion(yaml.safe_load(entry.read_text()))
            m.plan()
            assert m.duration > 0
            names.add(m.name)
        assert {"kick", "getup_prone", "getup_supine"} <= names


class TestMotionPlayer:
    def test_bridges_from_current_pose(self):
        player = MotionPlayer({"wave": simple_motion()})
        player.play("wave", {"a": 0.5, "b": 0.2}, t=10.0)
        out = player.step(10.0)
        assert out["a"][0] == pytest.approx(0.5, abs=1e-9)
        assert out["b"][0] == pytest.approx(0.2, abs=1e-9)

    def test_finishes_and_reports_idle(self):
        player = MotionPlayer({"wave": simple_motion()})
        player.play("wave", {"a": 0.0, "b": 0.0}, t=0.0)
        t, dt = 0.0, 0.008
        while player.playing is not None:
            player.step(t)
            t += dt
            assert t < 10.0
        assert player.step(t) is None

    def test_unknown_motion(self):
        player = MotionPlayer()
        with pytest.raises(MotionError):
            player.play("nope", {}, 0.0)


class TestGait:
    def test_step_in_place_zero_odometry_and_symmetry(self):
        p = GaitParams()
        state = GaitState()
        cmd = GaitCommand(walk=True)
        odom = np.zeros(3)
        samples = {}
        dt = 0.008
        n_cycle = int(round(1.0 / (p.frequency * dt)))
        for i in range(4 * n_cycle):
            targets, delta = gait_step(cmd, state, dt, p)
            odom += delta
            samples[i] = (targets, state.phase)
        np.testing.assert_allclose(odom, 0.0, atol=1e-12)
        # left and right sagittal patterns mirror half a cycle apart
        half = n_cycle // 2
        for i in range(n_cycle, 2 * n_cycle):
            a, _ = samples[i]
            b, _ = samples[i - half]
            assert a["l_knee_pitch"] == pytest.approx(b["r_knee_pitch"], abs=0.02)

    def test_forward_command_integrates_odometry(self):
        state = GaitState()
        cmd = GaitCommand(vx=0.1, walk=True)
        pose = np.zeros(3)
        dt = 0.008
        for _ in range(int(10.0 / dt)):
            _, delta = gait_step(cmd, state, dt)
            pose += delta  # theta stays 0 so body frame == odom frame
        assert pose[0] == pytest.approx(1.0, rel=1e-9)
        assert pose[1] == pytest.approx(0.0, abs=1e-12)

    def test_turn_command_integrates_heading(self):
        state = GaitState()
        cmd = GaitCommand(omega=0.2, walk=True)
        theta = 0.0
        dt = 0.008
        steps = int(round((math.pi / 0.2) / dt))
        for _ in range(steps):
            _, delta = gait_step(cmd, state, dt)
            theta += delta[2]
        # exact open-loop integration, up to the tick quantization of t_end
        assert theta == pytest.approx(steps * 0.2 * dt, rel=1e-12)
        assert theta == pytest.approx(math.pi, abs=0.2 * dt)

    def test_commands_clamp(self):
        p = GaitParams(max_vel_x=0.2)
        state = GaitState()
        _, delta = gait_step(GaitCommand(vx=5.0, walk=True), state, 0.008, p)
        assert delta[0] == pytest.approx(0.2 * 0.008)

    def test_periodicity(self):
        p = GaitParams()
        state = GaitState(stepping=True)
        cmd = GaitCommand(vx=0.1, vy=0.02, omega=0.1, walk=True)
        state.phase = 1.234
        t0, _ = gait_step(cmd, state, 1e-9, p)
        state.phase = 1.234 + 2 * math.pi - 2 * math.pi  # same phase mod 2 pi
        t1, _ = gait_step(cmd, state, 1e-9, p)
        for j in t0:
            assert t0[j] == pytest.approx(t1[j], abs=1e-6)

    def test_halt_at_double_support(self):
        state = GaitState()
        dt = 0.008
        walk = GaitCommand(vx=0.1, walk=True)
        for _ in range(20):
            gait_step(walk, state, dt)
        halt = GaitCommand(walk=False)
        for _ in range(200):
            _, delta = gait_step(halt, state, dt)
            assert delta == (0.0, 0.0, 0.0)
        assert not state.stepping
        assert state.phase % math.pi == pytest.approx(0.0, abs=1e-9)


class TestHeadControl:
    def test_zero_target_stays(self):
        h = HeadControl()
        out = h.step(0.008)
        assert out == {"neck_yaw": 0.0, "neck_pitch": 0.0}

    def test_slew_rate(self):
        h = HeadControl(slew_rate=2.0)
        h.set_target(1.0, 0.0)
        out = h.step(0.008)
        assert out["neck_yaw"] == pytest.approx(0.016)

    def test_joint_limit_clamp(self):
        h = HeadControl(slew_rate=100.0, yaw_limit=2.0)
        h.set_target(5.0, 0.0)
        for _ in range(100):
            out = h.step(0.05)
        assert out["neck_yaw"] == pytest.approx(2.0)


class TestFallProtection:
    ACCEL_UP = np.array([0.0, 0.0, 9.81])

    def test_threshold_with_confirmation(self):
        fp = FallProtection()
        for _ in range(2):
            fp.step(0.0, math.radians(70), self.ACCEL_UP, np.zeros(3), 0.008)
        assert fp.state is FallState.OK
        fp.step(0.0, math.radians(70), self.ACCEL_UP, np.zeros(3), 0.008)
        assert fp.state is FallState.RELAXED
        assert fp.relax

    def test_single_cycle_blip_ignored(self):
        fp = FallProtection()
        fp.step(0.0, math.radians(70), self.ACCEL_UP, np.zeros(3), 0.008)
        fp.step(0.0, 0.0, self.ACCEL_UP, np.zeros(3), 0.008)
        fp.step(0.0, math.radians(70), self.ACCEL_UP, np.zeros(3), 0.008)
        fp.step(0.0, math.radians(70), self.ACCEL_UP, np.zeros(3), 0.008)
        assert fp.state is FallState.OK

    def test_prone_selection_chest_down(self):
        fp = FallProtection(settle_time=0.1)
        for _ in range(3):
            fp.step(0.0, math.radians(80), self.ACCEL_UP, np.zeros(3), 0.008)
        assert fp.state is FallState.RELAXED
        # chest down: gravity along +x body axis, so accel reads -x
        accel = np.array([-9.81, 0.0, 0.0])
        for _ in range(20):
            fp.step(0.0, math.radians(80), accel, np.zeros(3), 0.01)
        assert fp.state is FallState.GETUP_PRONE

    def test_supine_selection_back_down(self):
        fp = FallProtection(settle_time=0.1)
        for _ in range(3):
            fp.step(0.0, math.radians(-80), self.ACCEL_UP, np.zeros(3), 0.008)
        accel = np.array([9.81, 0.0, 0.0])
        for _ in range(20):
            fp.step(0.0, math.radians(-80), accel, np.zeros(3), 0.01)
        assert fp.state is FallState.GETUP_SUPINE

    def test_recovery_cycle(self):
        fp = FallProtection(settle_time=0.05)
        player = MotionPlayer({"getup_prone": simple_motion("getup_prone")})
        for _ in range(3):
            fp.step(0.0, math.radians(80), self.ACCEL_UP, np.zeros(3), 0.008)
        accel = np.array([-9.81, 0.0, 0.0])
        t = 0.0
        for _ in range(10):
            fp.step(0.0, math.radians(80), accel, np.zeros(3), 0.01,
                    player=player, current_q={"a": 0.0, "b": 0.0}, t=t)
            t += 0.01
        assert fp.state is FallState.GETUP_PRONE
        # play the motion out, then report upright
        while player.playing is not None:
            player.step(t)
            t += 0.05
        fp.step(0.0, 0.0, self.ACCEL_UP, np.zeros(3), 0.01, player=player, t=t)
        assert fp.state is FallState.RECOVERED
        fp.step(0.0, 0.0, self.ACCEL_UP, np.zeros(3), 0.01, player=player, t=t)
        assert fp.state is FallState.OK

    def test_missing_getup_motion_stays_relaxed(self):
        fp = FallProtection(settle_time=0.05)
        player = MotionPlayer()  # empty library
        for _ in range(3):
            fp.step(0.0, math.radians(80), self.ACCEL_UP, np.zeros(3), 0.008)
        accel = np.array([-9.81, 0.0, 0.0])
        for _ in range(10):
            fp.step(0.0, math.radians(80), accel, np.zeros(3), 0.01,
                    player=player, t=0.0)
        assert fp.state is FallState.RELAXED
        assert fp.error

    def test_exhaustive_small_traces_reach_relaxed_only_via_confirmation(self):
        # model-check all tilt sequences of length 6: RELAXED reachable only
        # through >= 3 consecutive over-threshold cycles
        import itertools
        for bits in itertools.product([0, 1], repeat=6):
            fp = FallProtection()
            relaxed_at = None
            for i, b in enumerate(bits):
                pitch = math.radians(75 if b else 10)
                fp.step(0.0, pitch, self.ACCEL_UP, np.zeros(3), 0.008)
                if fp.state is FallState.RELAXED and relaxed_at is None:
                    relaxed_at = i
            if relaxed_at is not None:
                assert relaxed_at >= 2
                assert bits[relaxed_at - 2:relaxed_at + 1] == (1, 1, 1)
            else:
                # no run of 3 consecutive over-threshold cycles
                assert "111" not in "".join(map(str, bits))
