"""Bag logging: append-only record files with bit-exact replay.

Layout, all integers big-endian:

    magic           6 bytes   b"SBAG1\\n"
    header length   4 bytes   uint32
    header          JSON (utf-8): {"version", "start_time", "count"}
    per record:
        length      4 bytes   uint32
        body        pickled {"stamp", "path", "payload"}

Pickle keeps arbitrary python payloads (numpy arrays, dataclasses)
bit-exact through a save/load roundtrip.
"""

from __future__ import annotations

import io
import json
import pickle
import struct
import time as _time
from dataclasses import dataclass, field
from typing import Any, Optional

MAGIC = b"SBAG1\n"
BAG_VERSION = 1
_LEN = struct.Struct(">I")


class BagError(Exception):
    pass


@dataclass
class BagRecord:
    stamp: float
    path: str
    payload: Any


@dataclass
class LogBag:
    header: dict = field(default_factory=dict)
    records: list[BagRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)


def _encode_record(rec: BagRecord) -> bytes:
    body = pickle.dumps(
        {"stamp": rec.stamp, "path": rec.path, "payload": rec.payload},
        protocol=4)
    return _LEN.pack(len(body)) + body


def save_bag(records: list[BagRecord], filename: str,
             start_time: Optional[float] = None) -> None:
    records = sorted(records, key=lambda r: r.stamp)
    if start_time is None:
        start_time = records[0].stamp if records else 0.0
    header = {"version": BAG_VERSION, "start_time": start_time,
              "count": len(records)}
    hdr = json.dumps(header, sort_keys=True).encode()
    with open(filename, "wb") as f:
        f.write(MAGIC)
        f.write(_LEN.pack(len(hdr)))
        f.write(hdr)
        for rec in records:
            f.write(_encode_record(rec))


def load_bag(filename: str) -> LogBag:
    with open(filename, "rb") as f:
        data = f.read()
    buf = io.BytesIO(data)
    if buf.read(len(MAGIC)) != MAGIC:
        raise BagError(f"{filename}: bad magic bytes")
    try:
        (hlen,) = _LEN.unpack(buf.read(4))
        header = json.loads(buf.read(hlen).decode())
    except (struct.error, ValueError) as exc:
        raise BagError(f"{filename}: corrupt header: {exc}") from exc
    records = []
    index = 0
    while True:
        raw = buf.read(4)
        if not raw:
            break
        try:
            (blen,) = _LEN.unpack(raw)
            body = buf.read(blen)
            if len(body) != blen:
                raise BagError(
                    f"{filename}: truncated record {index}")
            d = pickle.loads(body)
            records.append(BagRecord(d["stamp"], d["path"], d["payload"]))
        except BagError:
            raise
        except Exception as exc:
            raise BagError(
                f"{filename}: corrupt record {index}: {exc}") from exc
        index += 1
    if header.get("count") is not None and header["count"] != len(records):
        raise BagError(f"{filename}: header count {header['count']} "
                       f"!= {len(records)} records read")
    bag = LogBag(header=header, records=records)
    return bag


class BagWriter:
    """Incremental writer for long recordings; finalize() fixes the count."""

    def __init__(self, filename: str, start_time: float = 0.0):
        self.filename = filename
        self.start_time = start_time
        self._records: list[BagRecord] = []

    def write(self, stamp: float, path: str, payload: Any) -> None:
        self._records.append(BagRecord(stamp, path, payload))

    def finalize(self) -> int:
        save_bag(self._records, self.filename, start_time=self.start_time)
        return len(self._records)


def record_topics(bus, topics: list[str], queue_size: int = 256):
    """Subscribe to topics and return (writer_fn, drain_fn).

    drain_fn() collects everything published since the last call as
    BagRecords.
    """
    subs = [bus.subscribe(t, queue_size=queue_size) for t in topics]

    def drain() -> list[BagRecord]:
        out = []
        for sub in subs:
            for msg in sub.drain():
                out.append(BagRecord(msg.stamp, msg.topic, msg.payload))
        out.sort(key=lambda r: r.stamp)
        return out

    def close() -> None:
        for sub in subs:
            sub.close()

    return drain, close


def replay(bag: LogBag, bus, realtime: bool = False,
           speed: float = 1.0) -> int:
    """Publish bag records onto the bus at original relative timing.

    With realtime=False records are published back to back with their
    original stamps preserved, which is what deterministic tests want.
    """
    if not bag.records:
        return 0
    t0 = bag.records[0].stamp
    wall0 = _time.monotonic()
    for topic in {r.path for r in bag.records}:
        bus.advertise(topic)
    for rec in bag.records:
        if realtime:
            target = wall0 + (rec.stamp - t0) / speed
            delay = target - _time.monotonic()
            if delay > 0:
                _time.sleep(delay)
        bus.publish(rec.path, rec.payload, stamp=rec.stamp)
    return len(bag.records)
