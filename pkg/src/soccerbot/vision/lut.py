"""YUV color lookup table for class segmentation.

The table maps (Y, U, V) quantized by right-shifting two bits to one of
six class codes.  On disk the table is exactly 262144 bytes of class
codes, Y-major then U then V (C order), no header.
"""

from __future__ import annotations

import numpy as np

# class codes; 0 is the none class and never forms a binary image
CLASS_NONE = 0
CLASS_ORANGE = 1
CLASS_YELLOW = 2
CLASS_GREEN = 3
CLASS_WHITE = 4
CLASS_BLACK = 5

COLOR_CLASSES = ("none", "orange", "yellow", "green", "white", "black")

# fixed tie-break order for segmentation votes, strongest first
CLASS_PRIORITY = (CLASS_ORANGE, CLASS_YELLOW, CLASS_GREEN, CLASS_WHITE,
                  CLASS_BLACK)

# nominal YUV centers used by the synthetic renderer and the default table
NOMINAL_YUV = {
    "orange": (140, 90, 200),
    "yellow": (200, 60, 150),
    "green": (100, 100, 90),
    "white": (235, 128, 128),
    "black": (25, 128, 128),
    "none": (160, 150, 120),
}

LUT_SIZE = 64 * 64 * 64


class ColorLUT:
    def __init__(self, table: np.ndarray | None = None):
        if table is None:
            table = np.zeros((64, 64, 64), dtype=np.uint8)
        table = np.asarray(table, dtype=np.uint8)
        if table.shape != (64, 64, 64):
            raise ValueError("LUT table must be 64x64x64")
        if table.max(initial=0) > 5:
            raise ValueError("LUT entries must be class codes 0..5")
        self.table = table

    def classify(self, image_yuv: np.ndarray) -> np.ndarray:
        """Per-pixel class codes for an (H, W, 3) uint8 YUV image."""
        img = np.asarray(image_yuv)
        if img.ndim != 3 or img.shape[2] != 3:
            raise ValueError("expected an (H, W, 3) YUV image")
        q = img.astype(np.uint8) >> 2
        return self.table[q[..., 0], q[..., 1], q[..., 2]]

    def classify_pixel(self, y: int, u: int, v: int) -> int:
        return int(self.table[y >> 2, u >> 2, v >> 2])

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.table.tobytes(order="C"))

    @classmethod
    def load(cls, path) -> "ColorLUT":
        with open(path, "rb") as fh:
            raw = fh.read()
        if len(raw) != LUT_SIZE:
            raise ValueError(f"LUT file must be {LUT_SIZE} bytes, "
                             f"got {len(raw)}")
        table = np.frombuffer(raw, dtype=np.uint8).reshape((64, 64, 64))
        return cls(table.copy())


def fit_lut(samples: dict[str, np.ndarray], radius: float = 45.0) -> ColorLUT:
    """Fit a LUT from labeled sample pixels.

    `samples` maps class names to (N, 3) arrays of YUV values.  Every
    table cell is assigned the nearest class center, provided the center
    lies within `radius` in YUV space; otherwise the cell stays none.
    """
    centers = []
    codes = []
    for name, pix in samples.items():
        if name == "none":
            continue
        code = COLOR_CLASSES.index(name)
        pix = np.asarray(pix, dtype=float).reshape(-1, 3)
        if len(pix) == 0:
            continue
        centers.append(pix.mean(axis=0))
        codes.append(code)
    table = np.zeros((64, 64, 64), dtype=np.uint8)
    if not centers:
        return ColorLUT(table)
    centers = np.array(centers)  # (C, 3)
    grid = np.stack(np.meshgrid(np.arange(64), np.arange(64), np.arange(64),
                                indexing="ij"), axis=-1)
    # cell centers in full-range YUV (quantization keeps the low two bits)
    yuv = grid.astype(float) * 4.0 + 1.5
    diff = yuv[..., None, :] - centers  # (64, 64, 64, C, 3)
    dist = np.linalg.norm(diff, axis=-1)
    best = np.argmin(dist, axis=-1)
    best_dist = np.min(dist, axis=-1)
    code_arr = np.array(codes, dtype=np.uint8)
    table = np.where(best_dist <= radius, code_arr[best], CLASS_NONE)
    return ColorLUT(table.astype(np.uint8))


def default_lut(radius: float = 45.0) -> ColorLUT:
    """LUT fit to the renderer's nominal class colors."""
    samples = {name: np.array([NOMINAL_YUV[name]])
               for name in COLOR_CLASSES if name != "none"}
    return fit_lut(samples, radius=radius)


def load_samples(path) -> dict[str, np.ndarray]:
    """Labeled-sample YAML file: class name -> list of [Y, U, V] rows."""
    import yaml

    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ValueError("sample file must map class names to pixel lists")
    out = {}
    for name, rows in raw.items():
        if name not in COLOR_CLASSES:
            raise ValueError(f"unknown color class {name!r}")
        out[name] = np.asarray(rows, dtype=float).reshape(-1, 3)
    return out
