"""Plot-variable recording with circular buffers and timewarp queries.

Every recorded variable lives under a slash-separated path and keeps a
bounded history so the dashboard can scrub backwards in time while the
system keeps running. Recording is cheap and safe from any thread.
"""

from __future__ import annotations

import bisect
import logging
import threading
from collections import deque
from typing import Any, Optional

log = logging.getLogger(__name__)

DEFAULT_RETENTION = 30.0  # seconds of history per series
DEFAULT_RATE = 100.0  # assumed source rate when none is hinted


class OutOfWindowError(KeyError):
    """Query time predates the oldest retained sample."""


class UnknownSeriesError(KeyError):
    pass


class PlotSeries:
    """Circular buffer of (time, value) samples for one variable path."""

    def __init__(self, path: str, capacity: Optional[int] = None,
                 rate_hint: float = DEFAULT_RATE,
                 retention: float = DEFAULT_RETENTION):
        if capacity is None:
            capacity = max(2, int(round(retention * rate_hint)))
        self.path = path
        self.capacity = int(capacity)
        self.rate_hint = rate_hint
        self._times: deque = deque(maxlen=self.capacity)
        self._values: deque = deque(maxlen=self.capacity)
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._times)

    def record(self, time: float, value: Any) -> bool:
        """Append a sample; times must strictly increase.

        Returns False (and logs a warning) on a non-monotonic time
        instead of raising so a misbehaving source cannot kill the
        recording thread.
        """
        with self._lock:
            if self._times and time <= self._times[-1]:
                log.warning("non-monotonic sample on %s: %.6f after %.6f",
                            self.path, time, self._times[-1])
                return False
            self._times.append(time)
            self._values.append(value)
            return True

    def query(self, t: float) -> tuple[float, Any]:
        """Latest sample with time <= t (floor semantics)."""
        with self._lock:
            if not self._times:
                raise OutOfWindowError(f"{self.path}: no samples")
            if t < self._times[0]:
                raise OutOfWindowError(
                    f"{self.path}: {t} before oldest retained "
                    f"sample {self._times[0]}")
            i = bisect.bisect_right(self._times, t) - 1
            return self._times[i], self._values[i]

    def latest(self) -> tuple[float, Any]:
        with self._lock:
            if not self._times:
                raise OutOfWindowError(f"{self.path}: no samples")
            return self._times[-1], self._values[-1]

    def window(self, t_from: Optional[float] = None,
               t_to: Optional[float] = None) -> list[tuple[float, Any]]:
        """All retained samples with t_from <= time <= t_to."""
        with self._lock:
            pairs = list(zip(self._times, self._values))
        if t_from is not None:
            pairs = [p for p in pairs if p[0] >= t_from]
        if t_to is not None:
            pairs = [p for p in pairs if p[0] <= t_to]
        return pairs

    @property
    def oldest_time(self) -> Optional[float]:
        with self._lock:
            return self._times[0] if self._times else None


class PlotRecorder:
    """Tree of PlotSeries keyed by path, created lazily on first record."""

    def __init__(self, retention: float = DEFAULT_RETENTION):
        self.retention = retention
        self._series: dict[str, PlotSeries] = {}
        self._lock = threading.Lock()

    def declare(self, path: str, rate_hint: float = DEFAULT_RATE) -> PlotSeries:
        with self._lock:
            if path not in self._series:
                self._series[path] = PlotSeries(
                    path, rate_hint=rate_hint, retention=self.retention)
            return self._series[path]

    def record(self, path: str, time: float, value: Any) -> bool:
        return self.declare(path).record(time, value)

    def series(self, path: str) -> PlotSeries:
        with self._lock:
            try:
                return self._series[path]
            except KeyError:
                raise UnknownSeriesError(path) from None

    def paths(self) -> list[str]:
        with self._lock:
            return sorted(self._series)

    def query_timewarp(self, path: str, t: float) -> tuple[float, Any]:
        return self.series(path).query(t)

    def tree(self) -> dict:
        """Nested dict view of the path hierarchy; leaves map to None."""
        root: dict = {}
        for path in self.paths():
            node = root
            for part in path.strip("/").split("/"):
                node = node.setdefault(part, {})
        return root
