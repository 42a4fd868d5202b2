"""WebSocket gateway exposing the bus, config tree and plot buffers.

Protocol: JSON text frames with the shape {"op", "id", "path", "payload"}.
Every request is answered with an ack frame carrying the request id, or
an error frame. Server-initiated frames (topic pushes, config change
fan-out, plot streams) carry no id.

Each client gets an independent bounded send queue with drop-oldest
overflow so a stalled browser can never back-pressure bus publishers.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import logging
import socket
import threading
import time
from collections import deque
from typing import Any, Optional

import numpy as np
from websockets.sync.server import serve

from .plotbuf import OutOfWindowError, PlotRecorder, UnknownSeriesError

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
SEND_QUEUE_SIZE = 256


def jsonable(obj: Any) -> Any:
    """Best-effort conversion of bus payloads into JSON-safe values."""
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, enum.Enum):
        return obj.name
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name))
                for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return str(obj)


class _Subscription:
    def __init__(self, sub, min_interval: float):
        self.sub = sub
        self.min_interval = min_interval
        self.last_sent = -1e18


class _Client:
    """Per-connection state: send queue, subscriptions, timewarp cursor."""

    def __init__(self, ws):
        self.ws = ws
        self.queue: deque = deque(maxlen=SEND_QUEUE_SIZE)
        self.lock = threading.Lock()
        self.wakeup = threading.Event()
        self.subs: dict[str, _Subscription] = {}
        self.streams: dict[str, _Subscription] = {}
        self.cursor: Optional[float] = None
        self.closed = False

    def enqueue(self, frame: dict) -> None:
        with self.lock:
            if self.closed:
                return
            self.queue.append(frame)  # deque(maxlen) drops oldest
        self.wakeup.set()

    def sender_loop(self) -> None:
        while True:
            self.wakeup.wait(timeout=0.5)
            self.wakeup.clear()
            while True:
                with self.lock:
                    if self.closed:
                        return
                    if not self.queue:
                        break
                    frame = self.queue.popleft()
                try:
                    self.ws.send(json.dumps(frame))
                except Exception:
                    return

    def close(self) -> None:
        with self.lock:
            self.closed = True
            self.queue.clear()
        self.wakeup.set()
        for entry in list(self.subs.values()):
            entry.sub.close()
        self.subs.clear()
        self.streams.clear()


class TelemetryGateway:
    """Serves the dashboard protocol on a background thread."""

    def __init__(self, bus=None, config=None,
                 recorder: Optional[PlotRecorder] = None,
                 host: str = "127.0.0.1", port: int = 0,
                 stream_poll_rate: float = 50.0,
                 publishers: Optional[dict] = None):
        self.bus = bus
        self.config = config
        # topics a client may publish to, with a coercion from the JSON
        # value to the bus payload type; everything else is read-only
        self.publishers = publishers if publishers is not None else {}
        self.recorder = recorder if recorder is not None else PlotRecorder()
        self.host = host
        self._requested_port = port
        self.port: Optional[int] = None
        self._stream_interval = 1.0 / stream_poll_rate
        self._clients: set[_Client] = set()
        self._clients_lock = threading.Lock()
        self._server = None
        self._threads: list[threading.Thread] = []
        self._stop = threading.Event()
        if self.config is not None:
            self.config.subscribe("/", self._on_config_change)

    # -- lifecycle ----------------------------------------------------

    def start(self) -> int:
        sock = socket.create_server((self.host, self._requested_port))
        self.port = sock.getsockname()[1]
        self._server = serve(self._handler, sock=sock)
        t = threading.Thread(target=self._server.serve_forever,
                             name="gateway-accept", daemon=True)
        t.start()
        self._threads.append(t)
        t = threading.Thread(target=self._stream_loop,
                             name="gateway-streams", daemon=True)
        t.start()
        self._threads.append(t)
        return self.port

    def stop(self) -> None:
        self._stop.set()
        with self._clients_lock:
            clients = list(self._clients)
        for c in clients:
            c.close()
            try:
                c.ws.close()
            except Exception:
                pass
        if self._server is not None:
            self._server.shutdown()
        for t in self._threads:
            t.join(timeout=2.0)

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()

    # -- connection handling ------------------------------------------

    def _handler(self, ws) -> None:
        client = _Client(ws)
        with self._clients_lock:
            self._clients.add(client)
        sender = threading.Thread(target=client.sender_loop,
                                  name="gateway-send", daemon=True)
        sender.start()
        try:
            for raw in ws:
                try:
                    frame = json.loads(raw)
                    if not isinstance(frame, dict) or "op" not in frame:
                        raise ValueError("frame must be an object with 'op'")
                except ValueError as exc:
                    client.enqueue({"op": "error", "id": None,
                                    "payload": {"message": str(exc)}})
                    continue
                self._dispatch(client, frame)
        except Exception:
            pass
        finally:
            with self._clients_lock:
                self._clients.discard(client)
            client.close()
            sender.join(timeout=1.0)

    def _dispatch(self, client: _Client, frame: dict) -> None:
        op = frame.get("op")
        rid = frame.get("id")
        path = frame.get("path")
        payload = frame.get("payload") or {}
        handler = getattr(self, f"_op_{op}", None)
        if handler is None:
            client.enqueue({"op": "error", "id": rid,
                            "payload": {"message": f"unknown op: {op}"}})
            return
        try:
            result = handler(client, path, payload)
            client.enqueue({"op": "ack", "id": rid, "path": path,
                            "payload": result})
        except (OutOfWindowError, UnknownSeriesError, PermissionError) as exc:
            client.enqueue({"op": "error", "id": rid, "path": path,
                            "payload": {"message": str(exc)}})
        except Exception as exc:
            log.exception("gateway op %s failed", op)
            client.enqueue({"op": "error", "id": rid, "path": path,
                            "payload": {"message": f"{type(exc).__name__}: "
                                                   f"{exc}"}})

    # -- ops ----------------------------------------------------------

    def _op_hello(self, client, path, payload):
        return {"version": PROTOCOL_VERSION}

    def _op_subscribe(self, client, path, payload):
        if self.bus is None:
            raise RuntimeError("no bus attached")
        if path in client.subs:
            return {"already": True}
        rate = float(payload.get("rate", 20.0))
        entry = _Subscription(None, 1.0 / rate if rate > 0 else 0.0)

        def on_msg(msg, entry=entry, client=client, path=path):
            now = time.monotonic()
            if now - entry.last_sent < entry.min_interval:
                return
            entry.last_sent = now
            client.enqueue({"op": "publish", "path": path,
                            "payload": {"stamp": msg.stamp,
                                        "value": jsonable(msg.payload)}})

        entry.sub = self.bus.subscribe(path, queue_size=4, callback=on_msg)
        client.subs[path] = entry
        return {"rate": rate}

    def _op_unsubscribe(self, client, path, payload):
        entry = client.subs.pop(path, None)
        if entry is not None:
            entry.sub.close()
        return {"removed": entry is not None}

    def _op_config_list(self, client, path, payload):
        if self.config is None:
            raise RuntimeError("no config server attached")
        out = []
        for p in self.config.paths():
            pv = self.config.describe(p)
            out.append({"path": p, "value": jsonable(pv.value),
                        "type": pv.type.__name__, "min": pv.min,
                        "max": pv.max, "step": pv.step, "unit": pv.unit})
        return {"params": out}

    def _op_config_get(self, client, path, payload):
        if self.config is None:
            raise RuntimeError("no config server attached")
        return {"value": jsonable(self.config.get(path))}

    def _op_config_set(self, client, path, payload):
        if self.config is None:
            raise RuntimeError("no config server attached")
        applied = self.config.set(path, payload["value"])
        return {"value": jsonable(applied)}

    def _op_plot_tree(self, client, path, payload):
        return {"tree": self.recorder.tree(),
                "paths": self.recorder.paths()}

    def _op_plot_fetch(self, client, path, payload):
        series = self.recorder.series(path)
        samples = series.window(payload.get("from"), payload.get("to"))
        return {"samples": [[t, jsonable(v)] for t, v in samples]}

    def _op_plot_stream(self, client, path, payload):
        self.recorder.series(path)  # raises if unknown
        rate = float(payload.get("rate", 10.0))
        client.streams[path] = _Subscription(
            None, 1.0 / rate if rate > 0 else 0.0)
        return {"rate": rate}

    def _op_plot_unstream(self, client, path, payload):
        return {"removed": client.streams.pop(path, None) is not None}

    def _op_timewarp(self, client, path, payload):
        # cursor may move backward freely; null returns to live
        t = payload.get("t")
        client.cursor = None if t is None else float(t)
        return {"cursor": client.cursor}

    def _op_query(self, client, path, payload):
        series = self.recorder.series(path)
        if client.cursor is None:
            t, v = series.latest()
        else:
            t, v = series.query(client.cursor)
        return {"time": t, "value": jsonable(v)}

    def _op_publish(self, client, path, payload):
        if self.bus is None:
            raise RuntimeError("no bus attached")
        coerce = self.publishers.get(path)
        if coerce is None:
            raise PermissionError(f"topic not writable: {path}")
        self.bus.publish(path, coerce(payload.get("value")))
        return {"published": True}

    def _op_bag_save(self, client, path, payload):
        from .bag import BagRecord, save_bag
        paths = payload.get("paths") or self.recorder.paths()
        t_from = payload.get("from")
        t_to = payload.get("to")
        records = []
        for p in paths:
            for t, v in self.recorder.series(p).window(t_from, t_to):
                records.append(BagRecord(t, p, v))
        filename = payload["file"]
        save_bag(records, filename)
        return {"file": filename, "count": len(records)}

    def _op_call(self, client, path, payload):
        if self.bus is None:
            raise RuntimeError("no bus attached")
        result = self.bus.call(path, payload.get("request"))
        return {"result": jsonable(result)}

    # -- pushes --------------------------------------------------------

    def _on_config_change(self, note) -> None:
        frame = {"op": "config_changed", "path": note.path,
                 "payload": {"value": jsonable(note.value),
                             "revision": note.revision}}
        with self._clients_lock:
            clients = list(self._clients)
        for c in clients:
            c.enqueue(frame)

    def _stream_loop(self) -> None:
        while not self._stop.wait(self._stream_interval):
            with self._clients_lock:
                clients = list(self._clients)
            for c in clients:
                for path, entry in list(c.streams.items()):
                    now = time.monotonic()
                    if now - entry.last_sent < entry.min_interval:
                        continue
                    try:
                        series = self.recorder.series(path)
                        if c.cursor is None:
                            t, v = series.latest()
                        else:
                            t, v = series.query(c.cursor)
                    except (OutOfWindowError, UnknownSeriesError):
                        continue
                    entry.last_sent = now
                    c.enqueue({"op": "plot", "path": path,
                               "payload": {"time": t, "value": jsonable(v)}})
