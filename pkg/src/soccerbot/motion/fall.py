"""Fall protection: relax on attitude threshold, get up once settled.

State machine: OK -> RELAXED after N consecutive over-threshold cycles;
while RELAXED all servo efforts are forced to zero. Once the body is
quasi-static, the gravity direction in the body frame selects the prone or
supine get-up motion; when it finishes and the attitude is upright again the
module reports RECOVERED and returns to OK.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class FallState(enum.Enum):
    OK = "OK"
    RELAXED = "RELAXED"
    GETUP_PRONE = "GETUP_PRONE"
    GETUP_SUPINE = "GETUP_SUPINE"
    RECOVERED = "RECOVERED"


@dataclass
class FallProtection:
    fall_threshold: float = math.radians(60.0)
    confirm_cycles: int = 3
    settle_gyro: float = 0.3         # rad/s, quasi-static threshold
    settle_time: float = 0.5         # s below threshold before getting up
    prone_motion: str = "getup_prone"
    supine_motion: str = "getup_supine"

    state: FallState = FallState.OK
    error: str = ""
    _over_count: int = field(default=0, repr=False)
    _settled: float = field(default=0.0, repr=False)
    _pending_getup: FallState | None = field(default=None, repr=False)

    @property
    def relax(self) -> bool:
        """True while all efforts must be forced to zero."""
        return self.state is FallState.RELAXED

    def step(self, roll: float, pitch: float, accel, gyro, dt: float,
             player=None, current_q=None, t: float = 0.0) -> FallState:
        """Advance one control cycle.

        accel is the body-frame accelerometer reading (specific force, so
        gravity in the body frame is its negative); gyro the body rates.
        player, when given, is the MotionPlayer used for get-up playback.
        """
        if dt <= 0:
            raise ValueError("dt must be > 0")
        tilt = max(abs(roll), abs(pitch))

        if self.state is FallState.OK:
            if tilt > self.fall_threshold:
                self._over_count += 1
                if self._over_count >= self.confirm_cycles:
                    self.state = FallState.RELAXED
                    self._settled = 0.0
            else:
                self._over_count = 0

        elif self.state is FallState.RELAXED:
            if float(np.linalg.norm(gyro)) < self.settle_gyro:
                self._settled += dt
            else:
                self._settled = 0.0
            if self._settled >= self.settle_time:
                gravity_x = -float(np.asarray(accel, dtype=float)[0])
                prone = gravity_x > 0.0  # gravity along +x body axis: chest down
                target = FallState.GETUP_PRONE if prone else FallState.GETUP_SUPINE
                name = self.prone_motion if prone else self.supine_motion
                if player is not None:
                    try:
                        player.play(name, current_q or {}, t)
                    except Exception as e:
                        self.error = f"get-up motion unavailable: {e}"
                        self._settled = 0.0
                        return self.state
                self.state = target

        elif self.state in (FallState.GETUP_PRONE, FallState.GETUP_SUPINE):
            done = player is None or player.playing is None
            if done and tilt < self.fall_threshold:
                self.state = FallState.RECOVERED

        elif self.state is FallState.RECOVERED:
            self.state = FallState.OK
            self._over_count = 0

        return self.state

    def reset(self) -> None:
        self.state = FallState.OK
        self.error = ""
        self._over_count = 0
        self._settled = 0.0
