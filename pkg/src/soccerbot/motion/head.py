"""Head control: slew-limited tracking of a commanded gaze direction."""

from __future__ import annotations

from dataclasses import dataclass


def _toward(current: float, target: float, max_step: float) -> float:
    delta = target - current
    if delta > max_step:
        delta = max_step
    elif delta < -max_step:
        delta = -max_step
    return current + delta


@dataclass
class HeadControl:
    """Drives the two neck joints toward an (azimuth, elevation) gaze target."""

    slew_rate: float = 2.0       # rad/s per axis
    yaw_limit: float = 2.0       # rad, from the neck_yaw joint spec
    pitch_limit: float = 0.9     # rad, from the neck_pitch joint spec
    yaw: float = 0.0
    pitch: float = 0.0
    target_azimuth: float = 0.0
    target_elevation: float = 0.0

    def set_target(self, azimuth: float, elevation: float) -> None:
        self.target_azimuth = azimuth
        self.target_elevation = elevation

    def step(self, dt: float) -> dict[str, float]:
        if dt <= 0:
            raise ValueError("dt must be > 0")
        max_step = self.slew_rate * dt
        az = max(-self.yaw_limit, min(self.yaw_limit, self.target_azimuth))
        el = max(-self.pitch_limit, min(self.pitch_limit, self.target_elevation))
        self.yaw = _toward(self.yaw, az, max_step)
        # elevation up = look up = negative neck pitch (y-axis convention)
        self.pitch = _toward(self.pitch, -el, max_step)
        return {"neck_yaw": self.yaw, "neck_pitch": self.pitch}
