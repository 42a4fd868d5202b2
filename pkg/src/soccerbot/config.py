"""Centralized hierarchical parameter store with runtime mutation.

Parameters live at slash-separated paths ("/gait/maxVelX"). Nodes declare
parameters with a default and a range; values can be changed at runtime from
anywhere (CLI, dashboard, code) and every subscriber whose prefix covers the
path is notified. The whole tree persists to a sorted, human-readable YAML
file, one per robot.
"""

from __future__ import annotations

import io
import math
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import yaml


class ConfigError(Exception):
    pass


class ConfigNotFound(ConfigError):
    pass


class ConfigTypeError(ConfigError):
    pass


class ConfigParseError(ConfigError):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


_PARAM_TYPES = (bool, int, float, str)  # bool first: bool is a subclass of int


def _param_type(value: Any) -> type:
    for t in _PARAM_TYPES:
        if isinstance(value, t):
            return t
    raise ConfigTypeError(f"unsupported parameter type {type(value).__name__}")


def _check_path(path: str) -> str:
    if not path.startswith("/") or path.endswith("/") or "//" in path or len(path) < 2:
        raise ConfigError(f"bad parameter path {path!r}")
    return path


@dataclass
class ParamValue:
    value: Any
    type: type
    min: Optional[float] = None
    max: Optional[float] = None
    step: Optional[float] = None
    unit: str = ""

    def clamp(self, value):
        """Clamp numerics into [min, max]; returns (value, clamped flag)."""
        if self.type in (int, float) and not isinstance(value, bool):
            if self.min is not None and value < self.min:
                return self.type(self.min), True
            if self.max is not None and value > self.max:
                return self.type(self.max), True
        return value, False


@dataclass
class ChangeNotification:
    path: str
    value: Any
    revision: int


class ParamHandle:
    """Locally cached view of one parameter, updated on change notification."""

    def __init__(self, server: "ConfigServer", path: str):
        self._server = server
        self.path = path
        self._cached = server.get(path)

    @property
    def value(self):
        return self._cached

    def __call__(self):
        return self._cached

    def set(self, value) -> None:
        self._server.set(self.path, value)


class ConfigServer:
    """Parameter tree with prefix-change subscriptions and file persistence."""

    def __init__(self, startup_file: Optional[str] = None):
        self._params: dict[str, ParamValue] = {}
        self._pending: dict[str, Any] = {}  # file values for not-yet-declared paths
        self._handles: dict[str, list[ParamHandle]] = {}
        self._subs: list[tuple[str, Callable[[ChangeNotification], None]]] = []
        self._revision = 0
        self._lock = threading.RLock()
        self._queue: list[ChangeNotification] = []
        self._queue_cv = threading.Condition()
        self._dispatcher: Optional[threading.Thread] = None
        self._shutdown = False
        self.warnings: list[str] = []
        if startup_file is not None:
            self.load(startup_file)

    # -- declaration and access -----------------------------------------

    def declare(self, path: str, default: Any,
                min: Optional[float] = None, max: Optional[float] = None,
                step: Optional[float] = None, unit: str = "") -> ParamHandle:
        _check_path(path)
        ptype = _param_type(default)
        with self._lock:
            self._check_structure(path)
            existing = self._params.get(path)
            if existing is not None:
                if existing.type is not ptype:
                    raise ConfigTypeError(
                        f"{path}: redeclared as {ptype.__name__}, "
                        f"was {existing.type.__name__}")
                return self._make_handle(path)
            pv = ParamValue(default, ptype, min=min, max=max, step=step, unit=unit)
            if path in self._pending:
                raw = self._pending.pop(path)
                value, err = self._coerce(path, pv, raw)
                if err:
                    self.warnings.append(err)
                else:
                    value, clamped = pv.clamp(value)
                    if clamped:
                        self.warnings.append(
                            f"{path}: startup value {raw!r} clamped to {value!r}")
                    pv.value = value
            else:
                pv.value, clamped = pv.clamp(default)
                if clamped:
                    self.warnings.append(f"{path}: default clamped to {pv.value!r}")
            self._params[path] = pv
            return self._make_handle(path)

    def _check_structure(self, path: str) -> None:
        # No declared path may be a strict prefix (interior node) of another.
        for other in self._params:
            if other.startswith(path + "/") or path.startswith(other + "/"):
                raise ConfigError(
                    f"{path}: conflicts with declared parameter {other} "
                    "(interior nodes cannot hold values)")

    def _coerce(self, path: str, pv: ParamValue, raw: Any):
        if pv.type is float and isinstance(raw, int) and not isinstance(raw, bool):
            raw = float(raw)
        if not isinstance(raw, pv.type) or (pv.type is not bool and isinstance(raw, bool)):
            return None, (f"{path}: startup value {raw!r} has wrong type, "
                          f"expected {pv.type.__name__}; using default")
        return raw, None

    def _make_handle(self, path: str) -> ParamHandle:
        handle = ParamHandle(self, path)
        self._handles.setdefault(path, []).append(handle)
        return handle

    def get(self, path: str):
        with self._lock:
            pv = self._params.get(path)
            if pv is None:
                raise ConfigNotFound(path)
            return pv.value

    def describe(self, path: str) -> ParamValue:
        with self._lock:
            pv = self._params.get(path)
            if pv is None:
                raise ConfigNotFound(path)
            return ParamValue(pv.value, pv.type, pv.min, pv.max, pv.step, pv.unit)

    def paths(self) -> list[str]:
        with self._lock:
            return sorted(self._params)

    @property
    def revision(self) -> int:
        with self._lock:
            return self._revision

    # -- mutation and notification --------------------------------------

    def set(self, path: str, value: Any) -> Any:
        """Set a declared parameter; clamps numerics, notifies subscribers.

        Returns the stored (possibly clamped) value. A set to an identical
        value still counts as a mutation and still notifies.
        """
        with self._lock:
            pv = self._params.get(path)
            if pv is None:
                raise ConfigNotFound(path)
            if pv.type is float and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            if not isinstance(value, pv.type) or (
                    pv.type is not bool and isinstance(value, bool)):
                raise ConfigTypeError(
                    f"{path}: expected {pv.type.__name__}, got {type(value).__name__}")
            if pv.type is float and not math.isfinite(value):
                raise ConfigTypeError(f"{path}: non-finite value")
            value, clamped = pv.clamp(value)
            if clamped:
                self.warnings.append(f"{path}: set value clamped to {value!r}")
            pv.value = value
            self._revision += 1
            note = ChangeNotification(path, value, self._revision)
            for handle in self._handles.get(path, ()):
                handle._cached = value
        self._enqueue(note)
        return value

    def subscribe(self, prefix: str,
                  callback: Callable[[ChangeNotification], None]) -> None:
        """Notify callback for every set under prefix ("/" covers everything)."""
        if not prefix.startswith("/"):
            raise ConfigError(f"bad prefix {prefix!r}")
        with self._lock:
            self._subs.append((prefix.rstrip("/"), callback))
            self._ensure_dispatcher()

    def _covers(self, prefix: str, path: str) -> bool:
        return path == prefix or prefix == "" or path.startswith(prefix + "/")

    def _enqueue(self, note: ChangeNotification) -> None:
        with self._queue_cv:
            self._queue.append(note)
            self._queue_cv.notify()

    def _ensure_dispatcher(self) -> None:
        if self._dispatcher is None:
            self._dispatcher = threading.Thread(
                target=self._dispatch_loop, name="config-dispatch", daemon=True)
            self._dispatcher.start()

    def _dispatch_loop(self) -> None:
        while not self._shutdown:
            with self._queue_cv:
                while not self._queue and not self._shutdown:
                    self._queue_cv.wait(timeout=0.1)
                batch, self._queue = self._queue, []
            with self._lock:
                subs = list(self._subs)
            for note in batch:
                for prefix, callback in subs:
                    if self._covers(prefix, note.path):
                        try:
                            callback(note)
                        except Exception:
                            pass  # a broken subscriber must not stall setters

    def flush(self, timeout: float = 1.0) -> None:
        """Block until queued notifications have been dispatched (tests, CLI)."""
        import time
        end = time.monotonic() + timeout
        while time.monotonic() < end:
            with self._queue_cv:
                if not self._queue:
                    return
            time.sleep(0.001)

    def shutdown(self) -> None:
        self._shutdown = True
        with self._queue_cv:
            self._queue_cv.notify_all()

    # -- persistence -----------------------------------------------------

    def dump(self) -> str:
        """Canonical serialization: nested YAML mapping, sorted paths."""
        with self._lock:
            flat = {p: pv.value for p, pv in self._params.items()}
            flat.update(self._pending)
        tree: dict = {}
        for path in sorted(flat):
            node = tree
            parts = path.lstrip("/").split("/")
            for part in parts[:-1]:
                node = node.setdefault(part, {})
            node[parts[-1]] = flat[path]
        buf = io.StringIO()
        yaml.safe_dump(tree, buf, sort_keys=True, default_flow_style=False)
        return buf.getvalue()

    def save(self, filename: str) -> None:
        with open(filename, "w", encoding="utf-8") as f:
            f.write(self.dump())

    def load(self, filename: str) -> None:
        """Load a tree; declared paths are set (clamped), unknown paths pend."""
        with open(filename, "r", encoding="utf-8") as f:
            text = f.read()
        self.load_string(text)

    def load_string(self, text: str) -> None:
        try:
            tree = yaml.safe_load(text)
        except yaml.YAMLError as e:
            line = None
            mark = getattr(e, "problem_mark", None)
            if mark is not None:
                line = mark.line + 1
            raise ConfigParseError(str(e), line=line) from None
        if tree is None:
            tree = {}
        if not isinstance(tree, dict):
            raise ConfigParseError("top level must be a mapping")
        flat: dict[str, Any] = {}
        self._flatten("", tree, flat)
        with self._lock:
            for path, raw in flat.items():
                if path in self._params:
                    self.set(path, raw)
                else:
                    self._pending[path] = raw

    def _flatten(self, prefix: str, node: dict, out: dict[str, Any]) -> None:
        for key, val in node.items():
            path = f"{prefix}/{key}"
            if isinstance(val, dict):
                self._flatten(path, val, out)
            elif isinstance(val, _PARAM_TYPES):
                out[path] = val
            else:
                raise ConfigParseError(f"{path}: unsupported value {val!r}")
