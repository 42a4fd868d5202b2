import math

import numpy as np
import pytest

from soccerbot.field import FieldSpec
from soccerbot.vision import (ColorLUT, DetectorConfig, DimensionError,
                              Downscaler, FisheyeModel, HorizonError, ImageYUV,
                              NOMINAL_YUV, Scene, default_camera_pose,
                              default_lut, detect_objects, downscale, fit_lut,
                              project_point, project_points, render_classes,
                              render_synthetic, segment, unproject_pixel,
                              unproject_pixels)
from soccerbot.vision.lut import (CLASS_GREEN, CLASS_NONE, CLASS_ORANGE,
                                  CLASS_WHITE, LUT_SIZE)

MODEL = FisheyeModel()
CAM = default_camera_pose()
LUT = default_lut()


def uniform_image(name):
    data = np.empty((600, 800, 3), dtype=np.uint8)
    data[:] = NOMINAL_YUV[name]
    return ImageYUV(data)


class TestFisheye:
    def test_principal_point_is_optical_axis(self):
        d = unproject_pixels(np.array([MODEL.cx, MODEL.cy]), MODEL)
        assert np.allclose(d, [0.0, 0.0, 1.0])

    def test_image_circle_edge_is_ninety_degrees(self):
        r = MODEL.focal * math.pi / 2
        d = unproject_pixels(np.array([MODEL.cx + r, MODEL.cy]), MODEL)
        assert d[2] == pytest.approx(0.0, abs=1e-12)
        assert d[0] == pytest.approx(1.0)

    def test_radius_proportional_to_angle(self):
        for theta in [0.1, 0.5, 1.0, 1.4]:
            p = np.array([math.sin(theta), 0.0, math.cos(theta)])
            uv = project_points(p, MODEL)
            r = math.hypot(uv[0] - MODEL.cx, uv[1] - MODEL.cy)
            assert r == pytest.approx(MODEL.focal * theta, abs=1e-9)

    def test_projection_unprojection_inverse(self):
        # random ground points whose rays stay within 75 deg off-axis
        rng = np.random.default_rng(7)
        count = 0
        worst = 0.0
        while count < 10_000:
            pts = np.column_stack([rng.uniform(0.2, 6.0, 2000),
                                   rng.uniform(-4.0, 4.0, 2000),
                                   np.zeros(2000)])
            rot = CAM[:3, :3]
            origin = CAM[:3, 3]
            dirs = (pts - origin) @ rot
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            keep = dirs[:, 2] > math.cos(math.radians(75))
            for p in pts[keep]:
                uv = project_point(p, MODEL, CAM)
                back = unproject_pixel(uv, MODEL, CAM)
                worst = max(worst, float(np.linalg.norm(back - p)))
                count += 1
                if count == 10_000:
                    break
        assert worst < 1e-6

    def test_horizon_error(self):
        # pixel looking level or up cannot hit the ground
        level = default_camera_pose(pitch=0.0)
        with pytest.raises(HorizonError):
            unproject_pixel(np.array([MODEL.cx, MODEL.cy]), MODEL, level)

    def test_unit_vector_mode(self):
        d = unproject_pixel(np.array([420.0, 330.0]), MODEL, CAM,
                            assume_ground=False)
        assert np.linalg.norm(d) == pytest.approx(1.0)


class TestColorLUT:
    def test_file_roundtrip(self, tmp_path):
        path = tmp_path / "colors.lut"
        LUT.save(path)
        assert path.stat().st_size == LUT_SIZE
        again = ColorLUT.load(path)
        assert np.array_equal(again.table, LUT.table)

    def test_truncated_file_rejected(self, tmp_path):
        path = tmp_path / "bad.lut"
        path.write_bytes(b"\x00" * 100)
        with pytest.raises(ValueError):
            ColorLUT.load(path)

    def test_classifies_nominal_colors(self):
        for name, code in [("orange", 1), ("yellow", 2), ("green", 3),
                           ("white", 4), ("black", 5)]:
            y, u, v = NOMINAL_YUV[name]
            assert LUT.classify_pixel(y, u, v) == code

    def test_background_is_none(self):
        y, u, v = NOMINAL_YUV["none"]
        assert LUT.classify_pixel(y, u, v) == CLASS_NONE

    def test_fit_from_samples(self):
        rng = np.random.default_rng(3)
        samples = {name: NOMINAL_YUV[name] + rng.normal(0, 3, (50, 3))
                   for name in ("orange", "green")}
        lut = fit_lut(samples, radius=40.0)
        assert lut.classify_pixel(*NOMINAL_YUV["orange"]) == CLASS_ORANGE
        assert lut.classify_pixel(*NOMINAL_YUV["green"]) == CLASS_GREEN
        assert lut.classify_pixel(*NOMINAL_YUV["white"]) == CLASS_NONE


class TestSegment:
    def test_uniform_orange(self):
        bins = segment(uniform_image("orange"), LUT)
        assert bins["orange"].mask.all()
        for name in ("yellow", "green", "white", "black"):
            assert not bins[name].mask.any()

    def test_nine_of_sixteen_votes(self):
        img = uniform_image("none")
        img.data[0:3, 0:3] = NOMINAL_YUV["orange"]  # 9 of the top-left block
        bins = segment(img, LUT)
        assert bins["orange"].mask[0, 0]
        assert bins["orange"].mask.sum() == 1

    def test_seven_votes_insufficient(self):
        img = uniform_image("none")
        img.data[0, 0:4] = NOMINAL_YUV["orange"]
        img.data[1, 0:3] = NOMINAL_YUV["orange"]
        bins = segment(img, LUT)
        assert not bins["orange"].mask.any()

    def test_tie_break_priority(self):
        img = uniform_image("none")
        img.data[0:2, 0:4] = NOMINAL_YUV["orange"]
        img.data[2:4, 0:4] = NOMINAL_YUV["yellow"]
        bins = segment(img, LUT)
        assert bins["orange"].mask[0, 0]
        assert not bins["yellow"].mask[0, 0]

    def test_outputs_disjoint(self):
        rng = np.random.default_rng(11)
        palette = np.array([NOMINAL_YUV[n] for n in
                            ("orange", "yellow", "green", "white", "black",
                             "none")], dtype=np.uint8)
        picks = rng.integers(0, 6, size=(600, 800))
        bins = segment(ImageYUV(palette[picks]), LUT)
        total = np.zeros((150, 200), dtype=int)
        for b in bins.values():
            total += b.mask.astype(int)
        assert total.max() <= 1

    def test_dimension_error(self):
        with pytest.raises(DimensionError):
            segment(ImageYUV(np.zeros((100, 100, 3), dtype=np.uint8)), LUT)


class TestDownscale:
    def test_factor_four_dimensions(self):
        out = downscale(uniform_image("green"), 4)
        assert (out.height, out.width) == (150, 200)

    def test_uniform_preserved(self):
        out = downscale(uniform_image("green"), 8)
        assert np.all(out.data == np.array(NOMINAL_YUV["green"], np.uint8))

    def test_block_average(self):
        img = uniform_image("none")
        img.data[0:4, 0:4] = 0
        img.data[0:2, 0:4] = 100
        out = downscale(img, 4)
        assert np.all(out.data[0, 0] == 50)

    def test_invalid_factor(self):
        with pytest.raises(ValueError):
            downscale(uniform_image("green"), 3)

    def test_throttle_keeps_rate(self):
        ds = Downscaler(factor=4, max_rate=5.0)
        emitted = 0
        for k in range(24):
            img = uniform_image("green")
            img.stamp = k / 24.0
            if ds.offer(img) is not None:
                emitted += 1
        assert emitted <= 5


def render_and_detect(pose, ball=None, obstacles=(), noise=0.0, rng=None,
                      config=None):
    scene = Scene(field=FieldSpec(), ball=ball, obstacles=list(obstacles))
    img = render_synthetic(scene, CAM, MODEL, robot_pose=pose, noise=noise,
                           rng=rng)
    return detect_objects(segment(img, LUT), MODEL, CAM, config)


class TestRender:
    def test_empty_field_horizon_split(self):
        classes = render_classes(Scene(field=None), CAM, MODEL)
        dirs = unproject_pixels(
            np.stack(np.meshgrid(np.arange(800) + 0.5, np.arange(600) + 0.5),
                     axis=-1).reshape(-1, 2), MODEL).reshape(600, 800, 3)
        world = dirs @ (CAM[:3, :3]).T
        v, u = np.mgrid[0:600, 0:800]
        inside = np.hypot(u + 0.5 - MODEL.cx, v + 0.5 - MODEL.cy) <= 299.0
        below = world[..., 2] < -1e-6
        above = world[..., 2] > 1e-6
        assert np.all(classes[inside & below] == CLASS_GREEN)
        assert np.all(classes[inside & above] == CLASS_NONE)

    def test_ball_centroid_pixel_is_orange(self):
        scene = Scene(field=FieldSpec(), ball=(1.0, 0.0))
        classes = render_classes(scene, CAM, MODEL)
        uv = project_point(np.array([1.0, 0.0, 0.08]), MODEL, CAM)
        assert classes[int(uv[1]), int(uv[0])] == CLASS_ORANGE

    def test_center_circle_closed_curve(self):
        classes = render_classes(Scene(field=FieldSpec()), CAM, MODEL,
                                 robot_pose=(-1.8, 0.0, 0.0))
        rows, cols = np.nonzero(classes == CLASS_WHITE)
        pts = []
        for r, c in zip(rows[::7], cols[::7]):
            try:
                p = unproject_pixel(np.array([c + 0.5, r + 0.5]), MODEL, CAM)
            except HorizonError:
                continue
            pts.append((p[0] - 1.8, p[1]))  # world frame
        pts = np.array(pts)
        ring = pts[np.abs(np.hypot(pts[:, 0], pts[:, 1]) - 0.75) < 0.1]
        angles = np.arctan2(ring[:, 1], ring[:, 0])
        # ring points seen in every quadrant: the curve closes around center
        hist, _ = np.histogram(angles, bins=8, range=(-math.pi, math.pi))
        assert np.all(hist > 0)
        # and the midline crosses it
        mid = pts[(np.abs(pts[:, 0]) < 0.06) & (np.abs(pts[:, 1]) < 0.5)]
        assert len(mid) > 0


class TestDetect:
    def test_no_orange_no_ball(self):
        ds = render_and_detect((0.0, 0.0, 0.0))
        assert ds.balls == []

    def test_ball_one_meter_ahead(self):
        ds = render_and_detect((0.0, 0.0, 0.0), ball=(1.0, 0.0))
        assert len(ds.balls) == 1
        err = np.linalg.norm(ds.balls[0].ego[:2] - np.array([1.0, 0.0]))
        assert err < 0.05

    def test_ball_range_sweep(self):
        for rng_m in np.linspace(0.5, 3.0, 6):
            ds = render_and_detect((-4.0, 0.0, 0.0),
                                   ball=(-4.0 + rng_m, 0.0))
            assert len(ds.balls) == 1
            est = math.hypot(*ds.balls[0].ego[:2])
            assert abs(est - rng_m) / rng_m < 0.05

    def test_post_pair_separation(self):
        ds = render_and_detect((0.0, 0.0, 0.0))
        assert len(ds.posts) == 2
        sep = np.linalg.norm(ds.posts[0].ego[:2] - ds.posts[1].ego[:2])
        assert sep == pytest.approx(2.6, rel=0.05)

    def test_obstacle_detected(self):
        ds = render_and_detect((0.0, 0.0, 0.0), obstacles=[(1.5, 0.3)])
        assert len(ds.obstacles) == 1
        assert np.linalg.norm(ds.obstacles[0].ego[:2] - [1.5, 0.3]) < 0.3

    def test_corner_typed_l(self):
        ds = render_and_detect((3.5, 2.0, math.pi / 4))
        kinds = [d.crossing_type for d in ds.crossings]
        assert kinds == ["L"]
        assert np.linalg.norm(ds.crossings[0].ego[:2] -
                              [math.sqrt(2), 0.0]) < 0.15

    def test_t_junction_typed(self):
        ds = render_and_detect((0.0, 1.5, math.pi / 2))
        assert [d.crossing_type for d in ds.crossings] == ["T"]

    def test_x_crossings_at_circle(self):
        ds = render_and_detect((0.0, 0.0, 0.0))
        xs = [d for d in ds.crossings if d.crossing_type == "X"]
        assert len(xs) == 2
        ys = sorted(d.ego[1] for d in xs)
        assert ys[0] == pytest.approx(-0.75, abs=0.1)
        assert ys[1] == pytest.approx(0.75, abs=0.1)

    def test_detections_on_ground_plane(self):
        ds = render_and_detect((0.0, 0.0, 0.0), ball=(1.0, 0.2),
                               obstacles=[(2.0, -0.5)])
        for d in ds.all():
            assert d.ego[2] == 0.0
            assert 0.0 <= d.confidence <= 1.0

    def test_noise_never_raises_mean_confidence(self):
        rng = np.random.default_rng(17)
        clean = []
        noisy = []
        for k in range(12):
            pose = (-1.0 + 0.2 * k, 0.1 * (k % 3 - 1), 0.0)
            ball = (pose[0] + 1.2, 0.1)
            ds0 = render_and_detect(pose, ball=ball)
            ds1 = render_and_detect(pose, ball=ball, noise=18.0, rng=rng)
            # per-scene totals, so a detection lost to noise counts as zero
            clean.append(sum(d.confidence for d in ds0.all()))
            noisy.append(sum(d.confidence for d in ds1.all()))
        assert np.mean(noisy) <= np.mean(clean) + 0.05
