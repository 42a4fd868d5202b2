"""Soccer field geometry shared by rendering, localization and simulation.

World frame: origin at field center, x toward the opponent goal, y left,
z up.  All dimensions in meters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class FieldSpec:
    length: float = 9.0
    width: float = 6.0
    goal_width: float = 2.6
    center_circle_radius: float = 0.75
    border: float = 0.7  # green apron beyond the boundary lines
    line_width: float = 0.1
    post_radius: float = 0.05
    post_height: float = 0.8

    @property
    def half_length(self) -> float:
        return self.length / 2.0

    @property
    def half_width(self) -> float:
        return self.width / 2.0

    def line_segments(self) -> list[tuple[tuple[float, float], tuple[float, float]]]:
        hl, hw = self.half_length, self.half_width
        return [
            ((-hl, -hw), (hl, -hw)),
            ((-hl, hw), (hl, hw)),
            ((-hl, -hw), (-hl, hw)),
            ((hl, -hw), (hl, hw)),
            ((0.0, -hw), (0.0, hw)),
        ]

    def posts(self) -> list[tuple[float, float]]:
        hg = self.goal_width / 2.0
        hl = self.half_length
        return [(hl, hg), (hl, -hg), (-hl, hg), (-hl, -hg)]

    def crossings(self) -> list[tuple[float, float, str]]:
        """Line crossing landmarks with type L, T or X."""
        hl, hw = self.half_length, self.half_width
        r = self.center_circle_radius
        out = [(hl, hw, "L"), (hl, -hw, "L"), (-hl, hw, "L"), (-hl, -hw, "L"),
               (0.0, hw, "T"), (0.0, -hw, "T"),
               (0.0, r, "X"), (0.0, -r, "X")]
        return out

    def in_bounds(self, x, y, margin: float = 0.0):
        return (np.abs(x) <= self.half_length + margin) & \
               (np.abs(y) <= self.half_width + margin)
