"""Complementary attitude filter with gyro bias adaptation.

Body frame: x forward, y left, z up.  The accelerometer measures specific
force, so at rest it reads the gravity vector rotated into the body frame.
Correction gains are expressed as error decades per second: a gain k
shrinks the attitude error tenfold every 1/k seconds, putting the 90%
step response at 1/k seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import wrap_angle

GRAVITY = 9.81
_LN10 = math.log(10.0)


@dataclass
class AttitudeEstimate:
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0
    bias: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass
class AttitudeFilter:
    k_acc: float = 2.0  # decades/s of roll/pitch error toward accelerometer
    k_mag: float = 1.0  # decades/s of yaw error toward compass
    k_bias: float = 0.3  # 1/s^2, bias adaptation from the persistent correction
    accel_gate: float = 0.2  # fraction of g; larger mismatch skips correction
    gravity: float = GRAVITY

    def update(self, est: AttitudeEstimate, gyro: np.ndarray,
               accel: np.ndarray, dt: float,
               compass: float | None = None) -> AttitudeEstimate:
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        gyro = np.asarray(gyro, dtype=float)
        accel = np.asarray(accel, dtype=float)
        corrected = gyro - est.bias
        roll = wrap_angle(est.roll + corrected[0] * dt)
        pitch = wrap_angle(est.pitch + corrected[1] * dt)
        yaw = wrap_angle(est.yaw + corrected[2] * dt)
        bias = est.bias.copy()

        norm = float(np.linalg.norm(accel))
        if abs(norm - self.gravity) < self.gravity * self.accel_gate:
            roll_acc = math.atan2(accel[1], accel[2])
            pitch_acc = math.atan2(-accel[0],
                                   math.hypot(accel[1], accel[2]))
            blend = 1.0 - math.exp(-self.k_acc * _LN10 * dt)
            err_r = wrap_angle(roll_acc - roll)
            err_p = wrap_angle(pitch_acc - pitch)
            roll = wrap_angle(roll + blend * err_r)
            pitch = wrap_angle(pitch + blend * err_p)
            bias[0] -= self.k_bias * err_r * dt
            bias[1] -= self.k_bias * err_p * dt

        if compass is not None:
            blend = 1.0 - math.exp(-self.k_mag * _LN10 * dt)
            yaw = wrap_angle(yaw + blend * wrap_angle(compass - yaw))

        return AttitudeEstimate(roll, pitch, yaw, bias)
