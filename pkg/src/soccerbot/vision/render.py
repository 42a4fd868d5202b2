"""Synthetic fisheye renderer used as the camera stand-in.

Casts the equidistant ray of every pixel into a world-frame scene and
paints nominal class colors: green ground with white field lines, an
orange ball sphere, yellow goal-post cylinders and black obstacle
cylinders.  Used as a geometric oracle for the perception pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from ..field import FieldSpec
from .lut import (CLASS_BLACK, CLASS_GREEN, CLASS_NONE, CLASS_ORANGE,
                  CLASS_WHITE, CLASS_YELLOW, COLOR_CLASSES, NOMINAL_YUV)
from .fisheye import FisheyeModel, unproject_pixels
from .segment import ImageYUV


@dataclass
class Scene:
    """World-frame scene description."""

    field: FieldSpec | None = None
    ball: tuple[float, float] | None = None
    ball_radius: float = 0.08
    posts: list | None = None  # [(x, y)]; None means take them from field
    obstacles: list = dc_field(default_factory=list)  # [(x, y)]
    obstacle_radius: float = 0.15
    obstacle_height: float = 0.5

    def post_positions(self) -> list:
        if self.posts is not None:
            return list(self.posts)
        if self.field is not None:
            return self.field.posts()
        return []


_dir_cache: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}


def _pixel_rays(model: FisheyeModel) -> tuple[np.ndarray, np.ndarray]:
    """Unit ray per pixel in the camera frame plus the valid-circle mask."""
    key = (model.focal, model.cx, model.cy, model.circle_radius,
           model.width, model.height)
    if key not in _dir_cache:
        v, u = np.mgrid[0:model.height, 0:model.width]
        px = np.stack([u.ravel() + 0.5, v.ravel() + 0.5], axis=1)
        r = np.hypot(px[:, 0] - model.cx, px[:, 1] - model.cy)
        valid = (r <= model.circle_radius).reshape(model.height, model.width)
        dirs = unproject_pixels(px, model).reshape(model.height, model.width, 3)
        _dir_cache[key] = (dirs, valid)
    return _dir_cache[key]


def _ray_cylinder(origin, dirs, cx, cy, radius, height):
    """Smallest positive hit parameter per ray for a vertical cylinder."""
    ox, oy, oz = origin
    dx = dirs[..., 0]
    dy = dirs[..., 1]
    a = dx * dx + dy * dy
    fx = ox - cx
    fy = oy - cy
    b = 2.0 * (fx * dx + fy * dy)
    c = fx * fx + fy * fy - radius * radius
    disc = b * b - 4.0 * a * c
    hit = np.full(dirs.shape[:-1], np.inf)
    ok = (disc >= 0.0) & (a > 1e-12)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t0 = np.where(ok, (-b - sq) / (2.0 * a), np.inf)
        t1 = np.where(ok, (-b + sq) / (2.0 * a), np.inf)
    for t in (t0, t1):
        z = oz + t * dirs[..., 2]
        good = ok & (t > 1e-9) & (z >= 0.0) & (z <= height) & (t < hit)
        hit = np.where(good, t, hit)
    return hit


def _ray_sphere(origin, dirs, center, radius):
    oc = np.asarray(origin, dtype=float) - np.asarray(center, dtype=float)
    b = 2.0 * np.einsum("...k,k->...", dirs, oc)
    c = float(oc @ oc) - radius * radius
    disc = b * b - 4.0 * c
    hit = np.full(dirs.shape[:-1], np.inf)
    ok = disc >= 0.0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    t0 = np.where(ok, (-b - sq) / 2.0, np.inf)
    good = ok & (t0 > 1e-9)
    hit = np.where(good, t0, hit)
    return hit


def _segment_distance(x, y, seg):
    (x1, y1), (x2, y2) = seg
    vx, vy = x2 - x1, y2 - y1
    length2 = vx * vx + vy * vy
    t = ((x - x1) * vx + (y - y1) * vy) / length2
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(x - (x1 + t * vx), y - (y1 + t * vy))


def render_classes(scene: Scene, camera_pose: np.ndarray,
                   model: FisheyeModel | None = None,
                   robot_pose: tuple[float, float, float] = (0.0, 0.0, 0.0),
                   ) -> np.ndarray:
    """Class-code image for the scene; the geometry oracle behind render_synthetic.

    `camera_pose` is the camera in the footprint frame; `robot_pose` is
    the footprint (x, y, theta) in the world frame.
    """
    if model is None:
        model = FisheyeModel()
    dirs_cam, valid = _pixel_rays(model)
    x, y, theta = robot_pose
    ct, st = math.cos(theta), math.sin(theta)
    rz = np.array([[ct, -st, 0.0], [st, ct, 0.0], [0.0, 0.0, 1.0]])
    rot = rz @ camera_pose[:3, :3]
    origin = np.array([x, y, 0.0]) + rz @ camera_pose[:3, 3]
    if origin[2] <= 0.0:
        raise ValueError("camera must be above the ground")
    dirs = dirs_cam @ rot.T

    classes = np.zeros(dirs.shape[:2], dtype=np.uint8)
    depth = np.full(dirs.shape[:2], np.inf)

    dz = dirs[..., 2]
    below = dz < -1e-9
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ground = np.where(below, -origin[2] / dz, np.inf)
    t_finite = np.where(below, t_ground, 0.0)
    gx = origin[0] + t_finite * dirs[..., 0]
    gy = origin[1] + t_finite * dirs[..., 1]
    if scene.field is not None:
        f = scene.field
        on_turf = below & f.in_bounds(gx, gy, margin=f.border)
        white = np.zeros_like(on_turf)
        half = f.line_width / 2.0
        for seg in f.line_segments():
            white |= _segment_distance(gx, gy, seg) <= half
        ring = np.abs(np.hypot(gx, gy) - f.center_circle_radius) <= half
        white |= ring
        ground_class = np.where(white & on_turf, CLASS_WHITE,
                                np.where(on_turf, CLASS_GREEN, CLASS_NONE))
    else:
        ground_class = np.where(below, CLASS_GREEN, CLASS_NONE)
    hit_ground = below & (ground_class != CLASS_NONE)
    classes = np.where(hit_ground, ground_class, classes).astype(np.uint8)
    depth = np.where(hit_ground, t_ground, depth)

    if scene.ball is not None:
        bx, by = scene.ball
        t = _ray_sphere(origin, dirs, (bx, by, scene.ball_radius),
                        scene.ball_radius)
        closer = t < depth
        classes = np.where(closer, CLASS_ORANGE, classes).astype(np.uint8)
        depth = np.where(closer, t, depth)

    fspec = scene.field if scene.field is not None else FieldSpec()
    for px_, py_ in scene.post_positions():
        t = _ray_cylinder(origin, dirs, px_, py_, fspec.post_radius,
                          fspec.post_height)
        closer = t < depth
        classes = np.where(closer, CLASS_YELLOW, classes).astype(np.uint8)
        depth = np.where(closer, t, depth)

    for ox_, oy_ in scene.obstacles:
        t = _ray_cylinder(origin, dirs, ox_, oy_, scene.obstacle_radius,
                          scene.obstacle_height)
        closer = t < depth
        classes = np.where(closer, CLASS_BLACK, classes).astype(np.uint8)
        depth = np.where(closer, t, depth)

    classes = np.where(valid, classes, CLASS_NONE).astype(np.uint8)
    return classes


def render_synthetic(scene: Scene, camera_pose: np.ndarray,
                     model: FisheyeModel | None = None,
                     robot_pose: tuple[float, float, float] = (0.0, 0.0, 0.0),
                     noise: float = 0.0, rng: np.random.Generator | None = None,
                     stamp: float = 0.0) -> ImageYUV:
    if model is None:
        model = FisheyeModel()
    classes = render_classes(scene, camera_pose, model, robot_pose)
    palette = np.array([NOMINAL_YUV[name] for name in COLOR_CLASSES],
                       dtype=float)
    img = palette[classes]
    if noise > 0.0:
        if rng is None:
            rng = np.random.default_rng()
        img = img + rng.normal(0.0, noise, size=img.shape)
    img = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    return ImageYUV(img, stamp=stamp)
