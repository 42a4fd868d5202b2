"""Block-average image downscaling with frame-rate throttling."""

from __future__ import annotations

import numpy as np

from .segment import ImageYUV

VALID_FACTORS = (2, 4, 8)


def downscale(image: ImageYUV, factor: int) -> ImageYUV:
    if factor not in VALID_FACTORS:
        raise ValueError(f"downscale factor must be one of {VALID_FACTORS}")
    data = image.data
    h, w = data.shape[:2]
    if h % factor or w % factor:
        raise ValueError("image dimensions must be divisible by the factor")
    blocks = data.reshape(h // factor, factor, w // factor, factor, 3)
    mean = blocks.mean(axis=(1, 3))
    return ImageYUV(np.rint(mean).astype(np.uint8), stamp=image.stamp)


class Downscaler:
    """Downscales frames and drops those arriving faster than max_rate."""

    def __init__(self, factor: int = 4, max_rate: float = 5.0):
        if factor not in VALID_FACTORS:
            raise ValueError(f"downscale factor must be one of {VALID_FACTORS}")
        if max_rate <= 0.0:
            raise ValueError("max_rate must be positive")
        self.factor = factor
        self.max_rate = max_rate
        self._last_emit: float | None = None

    def offer(self, image: ImageYUV) -> ImageYUV | None:
        """Returns the reduced frame, or None when throttled."""
        period = 1.0 / self.max_rate
        if self._last_emit is not None and \
                image.stamp - self._last_emit < period - 1e-12:
            return None
        self._last_emit = image.stamp
        return downscale(image, self.factor)
