"""In-process publish/subscribe topics and request/response services.

All modules of the stack talk to each other through a single MessageBus
instance. Topics carry typed payloads with bounded per-subscriber queues
(drop-oldest on overflow); services are synchronous request/response with a
deadline. Remote access goes through the telemetry gateway, never through
the bus directly.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor, TimeoutError as FutureTimeout
from dataclasses import dataclass, field
from typing import Any, Callable, Optional


class BusError(Exception):
    pass


class SchemaError(BusError):
    """Payload type conflicts with the schema registered for the topic."""


class ServiceUnavailable(BusError):
    """No handler is registered for the requested service."""


class ServiceTimeout(BusError):
    """The handler did not produce a response within the deadline."""


def _check_path(path: str) -> str:
    if not path or not path.startswith("/"):
        raise BusError(f"bad path {path!r}: must be non-empty and start with '/'")
    return path


@dataclass
class TopicMessage:
    topic: str
    stamp: float
    payload: Any


@dataclass
class _Topic:
    name: str
    schema: Optional[type] = None
    subscribers: list = field(default_factory=list)


class Subscription:
    """Handle yielding messages published after the subscription was made.

    Messages are held in a bounded FIFO; when full, the oldest queued message
    is dropped. Use drain() to take everything currently queued, or attach a
    callback at subscribe time to get pushed delivery on the bus dispatcher
    thread.
    """

    def __init__(self, bus: "MessageBus", topic: str, queue_size: int,
                 callback: Optional[Callable[[TopicMessage], None]] = None):
        if queue_size < 1:
            raise BusError("queue_size must be >= 1")
        self._bus = bus
        self.topic = topic
        self._queue: deque = deque(maxlen=queue_size)
        self._lock = threading.Lock()
        self._callback = callback
        self._closed = False

    def _deliver(self, msg: TopicMessage) -> None:
        with self._lock:
            if self._closed:
                return
            self._queue.append(msg)  # deque(maxlen) drops oldest
        if self._callback is not None:
            self._bus._wake_dispatcher()

    def drain(self) -> list[TopicMessage]:
        """Remove and return all queued messages, oldest first."""
        with self._lock:
            out = list(self._queue)
            self._queue.clear()
        return out

    def latest(self) -> Optional[TopicMessage]:
        """Drop everything but the newest queued message and return it."""
        msgs = self.drain()
        return msgs[-1] if msgs else None

    def close(self) -> None:
        with self._lock:
            self._closed = True
            self._queue.clear()
        self._bus._unsubscribe(self)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class MessageBus:
    """Topic/service hub shared by every node of a running stack."""

    def __init__(self):
        self._topics: dict[str, _Topic] = {}
        self._services: dict[str, Callable[[Any], Any]] = {}
        self._lock = threading.RLock()
        self._executor: Optional[ThreadPoolExecutor] = None
        self._dispatcher: Optional[threading.Thread] = None
        self._dispatch_event = threading.Event()
        self._shutdown = False

    # -- topics ---------------------------------------------------------

    def advertise(self, topic: str, schema: Optional[type] = None) -> None:
        _check_path(topic)
        with self._lock:
            t = self._topics.setdefault(topic, _Topic(topic))
            if schema is not None:
                if t.schema is not None and t.schema is not schema:
                    raise SchemaError(
                        f"topic {topic}: schema {schema.__name__} conflicts with "
                        f"registered {t.schema.__name__}")
                t.schema = schema

    def publish(self, topic: str, payload: Any, stamp: Optional[float] = None) -> None:
        _check_path(topic)
        if stamp is None:
            stamp = time.monotonic()
        with self._lock:
            t = self._topics.setdefault(topic, _Topic(topic))
            if t.schema is not None and not isinstance(payload, t.schema):
                raise SchemaError(
                    f"topic {topic}: payload {type(payload).__name__} does not match "
                    f"schema {t.schema.__name__}")
            subs = list(t.subscribers)
        msg = TopicMessage(topic, stamp, payload)
        for sub in subs:
            sub._deliver(msg)

    def subscribe(self, topic: str, queue_size: int = 10,
                  schema: Optional[type] = None,
                  callback: Optional[Callable[[TopicMessage], None]] = None) -> Subscription:
        _check_path(topic)
        sub = Subscription(self, topic, queue_size, callback)
        with self._lock:
            self.advertise(topic, schema)
            self._topics[topic].subscribers.append(sub)
            if callback is not None:
                self._ensure_dispatcher()
        return sub

    def _unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            t = self._topics.get(sub.topic)
            if t and sub in t.subscribers:
                t.subscribers.remove(sub)

    def topics(self) -> list[str]:
        with self._lock:
            return sorted(self._topics)

    # -- callback dispatch ----------------------------------------------

    def _ensure_dispatcher(self) -> None:
        if self._dispatcher is None:
            self._dispatcher = threading.Thread(
                target=self._dispatch_loop, name="bus-dispatch", daemon=True)
            self._dispatcher.start()

    def _wake_dispatcher(self) -> None:
        self._dispatch_event.set()

    def _dispatch_loop(self) -> None:
        while not self._shutdown:
            self._dispatch_event.wait(timeout=0.1)
            self._dispatch_event.clear()
            with self._lock:
                subs = [s for t in self._topics.values() for s in t.subscribers
                        if s._callback is not None]
            for sub in subs:
                for msg in sub.drain():
                    try:
                        sub._callback(msg)
                    except Exception:
                        pass  # a broken subscriber must not take down the bus

    def flush(self, timeout: float = 1.0) -> None:
        """Wait until all callback subscribers have drained their queues."""
        end = time.monotonic() + timeout
        while time.monotonic() < end:
            with self._lock:
                pending = any(
                    len(s._queue) > 0
                    for t in self._topics.values() for s in t.subscribers
                    if s._callback is not None)
            if not pending:
                return
            self._wake_dispatcher()
            time.sleep(0.001)

    # -- services -------------------------------------------------------

    def advertise_service(self, service: str, handler: Callable[[Any], Any]) -> None:
        _check_path(service)
        with self._lock:
            self._services[service] = handler

    def remove_service(self, service: str) -> None:
        with self._lock:
            self._services.pop(service, None)

    def call(self, service: str, request: Any = None, deadline: float = 1.0) -> Any:
        """Invoke a service handler; raises on missing handler or deadline."""
        _check_path(service)
        if deadline <= 0:
            raise BusError("deadline must be > 0")
        with self._lock:
            handler = self._services.get(service)
            if handler is None:
                raise ServiceUnavailable(service)
            if self._executor is None:
                self._executor = ThreadPoolExecutor(
                    max_workers=8, thread_name_prefix="bus-svc")
            executor = self._executor
        future = executor.submit(handler, request)
        try:
            return future.result(timeout=deadline)
        except FutureTimeout:
            raise ServiceTimeout(f"{service}: no response within {deadline}s") from None

    def shutdown(self) -> None:
        self._shutdown = True
        self._dispatch_event.set()
        with self._lock:
            executor, self._executor = self._executor, None
        if executor is not None:
            executor.shutdown(wait=False)
