"""Small rotation/transform helpers shared across the stack."""

from __future__ import annotations

import math

import numpy as np


def wrap_angle(a):
    """Wrap angle(s) into (-pi, pi]."""
    wrapped = np.mod(np.asarray(a) + np.pi, 2.0 * np.pi) - np.pi
    wrapped = np.where(wrapped == -np.pi, np.pi, wrapped)
    if np.isscalar(a) or np.ndim(a) == 0:
        return float(wrapped)
    return wrapped


def angle_diff(a, b):
    """Shortest signed difference a - b."""
    return wrap_angle(np.asarray(a) - np.asarray(b))


def rot_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rotation matrix about a unit axis (Rodrigues)."""
    axis = np.asarray(axis, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    x, y, z = axis
    K = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) * c + s * K + (1.0 - c) * np.outer(axis, axis)


def rot_rpy(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Rotation from roll-pitch-yaw (extrinsic x-y-z, i.e. Rz @ Ry @ Rx)."""
    return rot_axis(np.array([0.0, 0.0, 1.0]), yaw) @ \
        rot_axis(np.array([0.0, 1.0, 0.0]), pitch) @ \
        rot_axis(np.array([1.0, 0.0, 0.0]), roll)


def rpy_from_rot(R: np.ndarray) -> tuple[float, float, float]:
    """Inverse of rot_rpy (gimbal-safe enough for attitude display)."""
    pitch = math.asin(max(-1.0, min(1.0, -R[2, 0])))
    roll = math.atan2(R[2, 1], R[2, 2])
    yaw = math.atan2(R[1, 0], R[0, 0])
    return roll, pitch, yaw


def make_tf(R: np.ndarray, p: np.ndarray) -> np.ndarray:
    """4x4 homogeneous transform from rotation and translation."""
    T = np.eye(4)
    T[:3, :3] = R
    T[:3, 3] = np.asarray(p, dtype=float)
    return T


def tf_point(T: np.ndarray, p: np.ndarray) -> np.ndarray:
    return T[:3, :3] @ np.asarray(p, dtype=float) + T[:3, 3]


def rot2d(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def pose_compose(pose: tuple, delta: tuple) -> tuple:
    """Apply a body-frame (dx, dy, dtheta) increment to a planar (x, y, theta)."""
    x, y, th = pose
    dx, dy, dth = delta
    c, s = math.cos(th), math.sin(th)
    return (x + c * dx - s * dy, y + s * dx + c * dy, wrap_angle(th + dth))


def world_to_ego(pose: tuple, point_xy) -> np.ndarray:
    """World-frame planar point expressed in the robot's footprint frame."""
    x, y, th = pose
    d = np.asarray(point_xy, dtype=float) - np.array([x, y])
    return rot2d(-th) @ d


def ego_to_world(pose: tuple, point_xy) -> np.ndarray:
    x, y, th = pose
    return rot2d(th) @ np.asarray(point_xy, dtype=float) + np.array([x, y])
