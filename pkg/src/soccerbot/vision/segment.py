"""Color segmentation with 4x4 block subsampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lut import CLASS_PRIORITY, COLOR_CLASSES, ColorLUT

FULL_WIDTH = 800
FULL_HEIGHT = 600
SUB_FACTOR = 4
VOTE_THRESHOLD = 8


class DimensionError(ValueError):
    pass


@dataclass
class ImageYUV:
    data: np.ndarray  # (height, width, 3) uint8
    stamp: float = 0.0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.uint8)
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise DimensionError("image must be (H, W, 3)")

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass
class BinaryImage:
    label: str
    mask: np.ndarray  # (height, width) bool

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]


def segment(image: ImageYUV | np.ndarray, lut: ColorLUT) -> dict[str, BinaryImage]:
    """Classify at full resolution and vote per 4x4 block.

    A block sets the bit for a class when at least 8 of its 16 pixels
    carry that class; an 8/8 split goes to the higher-priority class
    (orange > yellow > green > white > black).
    """
    data = image.data if isinstance(image, ImageYUV) else np.asarray(image)
    if data.shape[:2] != (FULL_HEIGHT, FULL_WIDTH):
        raise DimensionError(
            f"expected {FULL_WIDTH}x{FULL_HEIGHT} input, got "
            f"{data.shape[1]}x{data.shape[0]}")
    classes = lut.classify(data)
    blocks = classes.reshape(FULL_HEIGHT // SUB_FACTOR, SUB_FACTOR,
                             FULL_WIDTH // SUB_FACTOR, SUB_FACTOR)
    out: dict[str, BinaryImage] = {}
    claimed = np.zeros((FULL_HEIGHT // SUB_FACTOR, FULL_WIDTH // SUB_FACTOR),
                       dtype=bool)
    for code in CLASS_PRIORITY:
        counts = (blocks == code).sum(axis=(1, 3))
        mask = (counts >= VOTE_THRESHOLD) & ~claimed
        claimed |= mask
        out[COLOR_CLASSES[code]] = BinaryImage(COLOR_CLASSES[code], mask)
    return out
