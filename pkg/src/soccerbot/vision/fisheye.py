"""Equidistant fisheye camera model and ground-plane unprojection.

Conventions: the camera frame has +z along the optical axis, +x toward
increasing pixel column u and +y toward increasing pixel row v.  Camera
poses are 4x4 homogeneous transforms expressing the camera frame in the
trunk-footprint frame (x forward, y left, z up, origin on the ground
below the trunk).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..geometry import make_tf, rot_axis


class HorizonError(ValueError):
    """Ground-plane unprojection requested for a ray at or above the horizon."""


class ImageCircleError(ValueError):
    """Pixel lies outside the fisheye image circle."""


@dataclass
class FisheyeModel:
    focal: float = 300.0 / (math.pi / 2.0)  # px per radian off-axis
    cx: float = 400.0
    cy: float = 300.0
    circle_radius: float = 300.0
    width: int = 800
    height: int = 600

    def __post_init__(self):
        if self.focal <= 0.0:
            raise ValueError("focal length must be positive")

    @property
    def max_theta(self) -> float:
        return self.circle_radius / self.focal


def project_points(points_cam: np.ndarray, model: FisheyeModel) -> np.ndarray:
    """Project camera-frame points (N, 3) to pixel coordinates (N, 2).

    Points behind the camera (z < 0) still map via their off-axis angle,
    which exceeds pi/2 and lands outside the image circle for a 180 deg
    lens; callers filter on the circle radius.
    """
    pts = np.atleast_2d(np.asarray(points_cam, dtype=float))
    norms = np.linalg.norm(pts, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("cannot project the camera center")
    theta = np.arccos(np.clip(pts[:, 2] / norms, -1.0, 1.0))
    radial = np.hypot(pts[:, 0], pts[:, 1])
    r = model.focal * theta
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(radial > 0.0, r / np.where(radial > 0.0, radial, 1.0), 0.0)
    uv = np.empty((pts.shape[0], 2))
    uv[:, 0] = model.cx + pts[:, 0] * scale
    uv[:, 1] = model.cy + pts[:, 1] * scale
    if np.asarray(points_cam).ndim == 1:
        return uv[0]
    return uv


def unproject_pixels(pixels: np.ndarray, model: FisheyeModel) -> np.ndarray:
    """Pixel coordinates (N, 2) to unit ray directions (N, 3) in the camera frame."""
    px = np.atleast_2d(np.asarray(pixels, dtype=float))
    du = px[:, 0] - model.cx
    dv = px[:, 1] - model.cy
    r = np.hypot(du, dv)
    theta = r / model.focal
    sin_t = np.sin(theta)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(r > 0.0, sin_t / np.where(r > 0.0, r, 1.0), 0.0)
    dirs = np.empty((px.shape[0], 3))
    dirs[:, 0] = du * scale
    dirs[:, 1] = dv * scale
    dirs[:, 2] = np.cos(theta)
    if np.asarray(pixels).ndim == 1:
        return dirs[0]
    return dirs


def default_camera_pose(pitch: float = 0.6, height: float = 0.85,
                        forward: float = 0.02) -> np.ndarray:
    """Camera pose in the footprint frame, pitched down by `pitch` radians.

    At pitch 0 the optical axis points along footprint +x, image right
    along -y and image down along -z.
    """
    base = np.array([[0.0, 0.0, 1.0],
                     [-1.0, 0.0, 0.0],
                     [0.0, -1.0, 0.0]])
    rot = rot_axis(np.array([0.0, 1.0, 0.0]), pitch) @ base
    return make_tf(rot, np.array([forward, 0.0, height]))


def camera_pose_from_fk(link_pose: np.ndarray,
                        offset: np.ndarray | None = None) -> np.ndarray:
    """Camera pose from a forward-kinematics head link pose.

    `offset` is the camera transform in the head link frame; by default
    the camera sits 5 cm forward of the link origin looking along +x.
    """
    if offset is None:
        offset = default_camera_pose(pitch=0.0, height=0.0, forward=0.05)
    return link_pose @ offset


def project_point(point_fp: np.ndarray, model: FisheyeModel,
                  camera_pose: np.ndarray) -> np.ndarray:
    """Footprint-frame point to pixel coordinates."""
    rot = camera_pose[:3, :3]
    origin = camera_pose[:3, 3]
    p_cam = rot.T @ (np.asarray(point_fp, dtype=float) - origin)
    return project_points(p_cam, model)


def unproject_pixel(pixel: np.ndarray, model: FisheyeModel,
                    camera_pose: np.ndarray, assume_ground: bool = True,
                    ground_height: float = 0.0) -> np.ndarray:
    """Pixel to an egocentric vector in the footprint frame.

    With assume_ground the ray is intersected with the horizontal plane
    z = ground_height and a 3-vector on that plane is returned; otherwise
    a unit direction vector is returned.
    """
    px = np.asarray(pixel, dtype=float)
    r = math.hypot(px[0] - model.cx, px[1] - model.cy)
    if r > model.circle_radius + 1e-9:
        raise ImageCircleError(f"pixel {px} outside image circle")
    rot = camera_pose[:3, :3]
    origin = camera_pose[:3, 3]
    d = rot @ unproject_pixels(px, model)
    if not assume_ground:
        return d
    if d[2] >= -1e-12:
        raise HorizonError("ray does not intersect the ground plane")
    s = (ground_height - origin[2]) / d[2]
    hit = origin + s * d
    hit[2] = ground_height
    return hit
