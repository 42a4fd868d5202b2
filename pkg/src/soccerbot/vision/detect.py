"""Object detection on subsampled color-class images."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import ndimage
from skimage.morphology import convex_hull_image, skeletonize

from .fisheye import (FisheyeModel, HorizonError, ImageCircleError,
                      unproject_pixel)
from .segment import SUB_FACTOR, BinaryImage

FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
EIGHT_CONN = np.ones((3, 3), dtype=int)


@dataclass
class Detection:
    kind: str  # ball | post | obstacle | crossing
    pixel: tuple[float, float]  # full-resolution image coordinates
    ego: np.ndarray  # egocentric vector, footprint frame, z = 0
    confidence: float
    crossing_type: str | None = None


@dataclass
class DetectionSet:
    balls: list = dc_field(default_factory=list)
    posts: list = dc_field(default_factory=list)
    obstacles: list = dc_field(default_factory=list)
    crossings: list = dc_field(default_factory=list)
    stamp: float = 0.0

    def all(self) -> list:
        return self.balls + self.posts + self.obstacles + self.crossings


@dataclass
class DetectorConfig:
    ball_min_size: int = 3  # subsampled pixels
    ball_radius: float = 0.08
    post_min_size: int = 4
    post_aspect: float = 1.2  # bbox height/width threshold
    post_radius: float = 0.05
    obstacle_min_size: int = 4
    size_confidence_scale: float = 60.0
    corner_walk: int = 4  # skeleton steps used for corner angle estimates
    corner_angle: float = math.radians(135.0)
    crossing_min_range: float = 0.35  # skeletons under the feet are unreliable


def _full_res(col: float, row: float) -> tuple[float, float]:
    # center of a subsampled cell in source-image coordinates
    return (col * SUB_FACTOR + SUB_FACTOR / 2.0,
            row * SUB_FACTOR + SUB_FACTOR / 2.0)


def _blobs(mask: np.ndarray, structure, min_size: int):
    labels, count = ndimage.label(mask, structure=structure)
    out = []
    for idx in range(1, count + 1):
        blob = labels == idx
        size = int(blob.sum())
        if size >= min_size:
            out.append((size, blob))
    out.sort(key=lambda item: item[0], reverse=True)
    return out


def _size_confidence(size: int, scale: float) -> float:
    return min(1.0, size / scale)


def _safe_unproject(pixel, model, camera_pose, ground_height=0.0):
    try:
        return unproject_pixel(np.asarray(pixel), model, camera_pose,
                               assume_ground=True,
                               ground_height=ground_height)
    except (HorizonError, ImageCircleError):
        return None


def detect_objects(binaries: dict[str, BinaryImage], model: FisheyeModel,
                   camera_pose: np.ndarray, config: DetectorConfig | None = None,
                   stamp: float = 0.0) -> DetectionSet:
    if config is None:
        config = DetectorConfig()
    out = DetectionSet(stamp=stamp)

    green = binaries["green"].mask
    if green.any():
        hull = convex_hull_image(green)
    else:
        hull = np.zeros_like(green)
    in_field = hull if hull.any() else np.ones_like(green)

    orange = binaries["orange"].mask & in_field
    blobs = _blobs(orange, FOUR_CONN, config.ball_min_size)
    if blobs:
        size, blob = blobs[0]
        rows, cols = np.nonzero(blob)
        pixel = _full_res(cols.mean(), rows.mean())
        ego = _safe_unproject(pixel, model, camera_pose,
                              ground_height=config.ball_radius)
        if ego is not None:
            ego = np.array([ego[0], ego[1], 0.0])
            out.balls.append(Detection(
                "ball", pixel, ego,
                _size_confidence(size, config.size_confidence_scale)))

    for size, blob in _blobs(binaries["yellow"].mask, EIGHT_CONN,
                             config.post_min_size):
        if len(out.posts) >= 2:
            break
        rows, cols = np.nonzero(blob)
        height = rows.max() - rows.min() + 1
        width = cols.max() - cols.min() + 1
        if height / width < config.post_aspect:
            continue
        bottom = rows.max()
        foot_cols = cols[rows == bottom]
        pixel = _full_res(foot_cols.mean(), bottom + 0.5)
        ego = _safe_unproject(pixel, model, camera_pose)
        if ego is None:
            continue
        # the foot pixel sees the cylinder surface, not its axis
        rng = math.hypot(ego[0], ego[1])
        if rng > 0.0:
            ego = ego * (rng + config.post_radius) / rng
        out.posts.append(Detection(
            "post", pixel, ego,
            _size_confidence(size, config.size_confidence_scale)))

    black = binaries["black"].mask & in_field
    for size, blob in _blobs(black, EIGHT_CONN, config.obstacle_min_size):
        rows, cols = np.nonzero(blob)
        bottom = rows.max()
        foot_cols = cols[rows == bottom]
        pixel = _full_res(foot_cols.mean(), bottom + 0.5)
        ego = _safe_unproject(pixel, model, camera_pose)
        if ego is None:
            continue
        out.obstacles.append(Detection(
            "obstacle", pixel, ego,
            _size_confidence(size, config.size_confidence_scale)))

    white = binaries["white"].mask & in_field
    for col, row, ctype, conf in _find_crossings(white, config):
        pixel = _full_res(col, row)
        ego = _safe_unproject(pixel, model, camera_pose)
        if ego is None:
            continue
        if math.hypot(ego[0], ego[1]) < config.crossing_min_range:
            continue
        out.crossings.append(Detection("crossing", pixel, ego, conf,
                                       crossing_type=ctype))
    return out


def _find_crossings(white: np.ndarray, config: DetectorConfig):
    """Skeleton junctions and corners of the white line mask.

    Branch count at a skeleton point gives the type: 3 branches make a T,
    4 an X, and a 2-branch point whose arms bend sharply makes an L.
    """
    if not white.any():
        return []
    skel = skeletonize(white)
    if not skel.any():
        return []
    neighbor_count = ndimage.convolve(skel.astype(int), EIGHT_CONN,
                                      mode="constant") - skel.astype(int)
    neighbor_count[~skel] = 0

    results = []
    junction = skel & (neighbor_count >= 3)
    labels, count = ndimage.label(junction, structure=EIGHT_CONN)
    junction_centers = []
    for idx in range(1, count + 1):
        cluster = labels == idx
        rows, cols = np.nonzero(cluster)
        branches = _count_arms(skel, cluster, rows, cols)
        if branches < 3:
            continue
        ctype = "X" if branches >= 4 else "T"
        junction_centers.append((cols.mean(), rows.mean()))
        results.append((cols.mean(), rows.mean(), ctype, 0.6))

    corner = _corner_candidates(skel, neighbor_count, config)
    if corner.any():
        labels, count = ndimage.label(corner, structure=EIGHT_CONN)
        for idx in range(1, count + 1):
            rows, cols = np.nonzero(labels == idx)
            cx, cy = cols.mean(), rows.mean()
            # corners bordering a junction are just its arms
            near_junction = any(math.hypot(cx - jx, cy - jy) < 4.0
                                for jx, jy in junction_centers)
            if near_junction:
                continue
            results.append((cx, cy, "L", 0.5))
    return results


def _count_arms(skel: np.ndarray, cluster: np.ndarray, rows, cols,
                radius: int = 4) -> int:
    """Arms leaving a junction cluster: connected skeleton components in a
    small window around the cluster, the cluster and its halo excluded."""
    r0 = int(round(rows.mean()))
    c0 = int(round(cols.mean()))
    rlo, rhi = max(0, r0 - radius), min(skel.shape[0], r0 + radius + 1)
    clo, chi = max(0, c0 - radius), min(skel.shape[1], c0 + radius + 1)
    window = skel[rlo:rhi, clo:chi]
    halo = ndimage.binary_dilation(cluster[rlo:rhi, clo:chi],
                                   structure=EIGHT_CONN)
    arms = window & ~halo
    _, ncomp = ndimage.label(arms, structure=EIGHT_CONN)
    return ncomp


def _corner_candidates(skel: np.ndarray, neighbor_count: np.ndarray,
                       config: DetectorConfig) -> np.ndarray:
    pts = set(zip(*np.nonzero(skel)))
    offsets = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0),
               (1, 1)]
    out = np.zeros_like(skel)
    for r, c in zip(*np.nonzero(skel & (neighbor_count == 2))):
        neigh = [(r + dr, c + dc) for dr, dc in offsets
                 if (r + dr, c + dc) in pts]
        if len(neigh) != 2:
            continue
        # the two neighbors of a corner of one line are 8-adjacent runs;
        # walk each arm outward to average away pixelization
        ends = []
        for start in neigh:
            prev, cur = (r, c), start
            for _ in range(config.corner_walk - 1):
                nxt = [(cur[0] + dr, cur[1] + dc) for dr, dc in offsets
                       if (cur[0] + dr, cur[1] + dc) in pts
                       and (cur[0] + dr, cur[1] + dc) not in (prev, (r, c))]
                if len(nxt) != 1:
                    break
                prev, cur = cur, nxt[0]
            ends.append(cur)
        v1 = (ends[0][0] - r, ends[0][1] - c)
        v2 = (ends[1][0] - r, ends[1][1] - c)
        n1 = math.hypot(*v1)
        n2 = math.hypot(*v2)
        if n1 == 0.0 or n2 == 0.0:
            continue
        cosang = (v1[0] * v2[0] + v1[1] * v2[1]) / (n1 * n2)
        angle = math.acos(max(-1.0, min(1.0, cosang)))
        if angle < config.corner_angle:
            out[r, c] = True
    return out
