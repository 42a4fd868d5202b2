"""Landmark map derived from the field geometry."""

from __future__ import annotations

import numpy as np

from ..field import FieldSpec


class LandmarkMap:
    """Goal posts and typed line crossings in the field frame.

    Landmark types: "post", "L", "T", "X".  The map is symmetric under a
    180 degree rotation about the field center, which is why the compass
    is needed to disambiguate the global pose.
    """

    def __init__(self, field: FieldSpec | None = None):
        self.field = field if field is not None else FieldSpec()
        self._by_type: dict[str, np.ndarray] = {}
        self._by_type["post"] = np.array(self.field.posts(), dtype=float)
        for kind in ("L", "T", "X"):
            pts = [(x, y) for x, y, t in self.field.crossings() if t == kind]
            self._by_type[kind] = np.array(pts, dtype=float)

    @property
    def types(self) -> tuple:
        return tuple(self._by_type.keys())

    def landmarks(self, kind: str) -> np.ndarray:
        if kind not in self._by_type:
            raise KeyError(f"unknown landmark type {kind!r}")
        return self._by_type[kind]

    def bounds(self, margin: float = 0.5) -> tuple:
        """(x_min, x_max, y_min, y_max) for particle initialization."""
        return (-self.field.half_length - margin,
                self.field.half_length + margin,
                -self.field.half_width - margin,
                self.field.half_width + margin)
