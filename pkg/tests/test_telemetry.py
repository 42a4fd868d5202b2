import json
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from websockets.sync.client import connect

from soccerbot.config import ConfigServer
from soccerbot.msgbus import MessageBus
from soccerbot.telemetry import (BagError, BagRecord, OutOfWindowError,
                                 PlotRecorder, PlotSeries, TelemetryGateway,
                                 UnknownSeriesError, load_bag, replay,
                                 save_bag)


class TestPlotSeries:
    def test_eviction(self):
        s = PlotSeries("/x", capacity=2)
        for t in (1.0, 2.0, 3.0):
            assert s.record(t, t * 10)
        assert len(s) == 2
        assert s.window() == [(2.0, 20.0), (3.0, 30.0)]

    def test_non_monotonic_rejected(self):
        s = PlotSeries("/x", capacity=10)
        assert s.record(1.0, "a")
        assert not s.record(1.0, "b")
        assert not s.record(0.5, "c")
        assert len(s) == 1

    def test_floor_semantics(self):
        s = PlotSeries("/x", capacity=10)
        for t in (1.0, 2.0, 3.0):
            s.record(t, int(t))
        assert s.query(2.5) == (2.0, 2)
        assert s.query(3.0) == (3.0, 3)
        assert s.query(99.0) == (3.0, 3)
        with pytest.raises(OutOfWindowError):
            s.query(0.5)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(0, 100, allow_nan=False), min_size=1,
                    max_size=60, unique=True),
           st.floats(-10, 110, allow_nan=False))
    def test_floor_matches_linear_scan(self, times, q):
        times = sorted(times)
        s = PlotSeries("/x", capacity=100)
        for i, t in enumerate(times):
            s.record(t, i)
        eligible = [t for t in times if t <= q]
        if not eligible:
            with pytest.raises(OutOfWindowError):
                s.query(q)
        else:
            t, v = s.query(q)
            assert t == eligible[-1]
            assert v == times.index(t)


class TestPlotRecorder:
    def test_tree_hierarchy(self):
        rec = PlotRecorder()
        rec.record("/a/b", 1.0, 1)
        rec.record("/a/c", 1.0, 2)
        rec.record("/d", 1.0, 3)
        assert rec.tree() == {"a": {"b": {}, "c": {}}, "d": {}}
        assert rec.paths() == ["/a/b", "/a/c", "/d"]

    def test_unknown_series(self):
        rec = PlotRecorder()
        with pytest.raises(UnknownSeriesError):
            rec.series("/nope")

    def test_query_timewarp(self):
        rec = PlotRecorder()
        for t in range(10):
            rec.record("/p", float(t), t * t)
        assert rec.query_timewarp("/p", 4.7) == (4.0, 16)


class TestBag:
    def make_records(self, n=100):
        rng = np.random.default_rng(0)
        recs = []
        for i in range(n):
            recs.append(BagRecord(0.01 * i, "/pose",
                                  rng.standard_normal(3)))
        return recs

    def test_roundtrip_identity(self, tmp_path):
        recs = self.make_records()
        path = str(tmp_path / "a.bag")
        save_bag(recs, path)
        bag = load_bag(path)
        assert bag.header["count"] == 100
        assert len(bag) == 100
        for a, b in zip(recs, bag.records):
            assert a.stamp == b.stamp
            assert a.path == b.path
            assert a.payload.dtype == b.payload.dtype
            assert np.array_equal(a.payload, b.payload)

    def test_save_deterministic(self, tmp_path):
        recs = self.make_records(20)
        p1, p2 = str(tmp_path / "1.bag"), str(tmp_path / "2.bag")
        save_bag(recs, p1)
        save_bag(recs, p2)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_corrupt_magic(self, tmp_path):
        path = tmp_path / "bad.bag"
        path.write_bytes(b"NOTABAG" + b"\x00" * 32)
        with pytest.raises(BagError, match="magic"):
            load_bag(str(path))

    def test_truncated_record_reports_index(self, tmp_path):
        path = str(tmp_path / "t.bag")
        save_bag(self.make_records(3), path)
        data = open(path, "rb").read()
        open(path, "wb").write(data[:-5])
        with pytest.raises(BagError, match="record 2"):
            load_bag(path)

    def test_replay_preserves_payloads_and_order(self, tmp_path):
        recs = self.make_records(50)
        path = str(tmp_path / "r.bag")
        save_bag(recs, path)
        bag = load_bag(path)
        bus = MessageBus()
        sub = bus.subscribe("/pose", queue_size=64)
        n = replay(bag, bus)
        bus.flush()
        msgs = sub.drain()
        bus.shutdown()
        assert n == 50
        assert len(msgs) == 50
        for rec, msg in zip(recs, msgs):
            assert msg.stamp == rec.stamp
            assert np.array_equal(msg.payload, rec.payload)


class Client:
    """Small protocol helper: request/ack matching with push buffering."""

    def __init__(self, port):
        self.ws = connect(f"ws://127.0.0.1:{port}")
        self.pushes = []
        self._next_id = 0

    def send_raw(self, text):
        self.ws.send(text)

    def request(self, op, path=None, payload=None, timeout=5.0):
        self._next_id += 1
        rid = self._next_id
        self.ws.send(json.dumps({"op": op, "id": rid, "path": path,
                                 "payload": payload}))
        deadline = time.monotonic() + timeout
        while True:
            frame = json.loads(self.ws.recv(timeout=deadline -
                                            time.monotonic()))
            if frame.get("id") == rid:
                return frame
            self.pushes.append(frame)

    def wait_push(self, op, timeout=5.0):
        for i, f in enumerate(self.pushes):
            if f["op"] == op:
                return self.pushes.pop(i)
        deadline = time.monotonic() + timeout
        while True:
            frame = json.loads(self.ws.recv(timeout=deadline -
                                            time.monotonic()))
            if frame["op"] == op:
                return frame
            self.pushes.append(frame)

    def close(self):
        self.ws.close()


@pytest.fixture
def system():
    bus = MessageBus()
    config = ConfigServer()
    config.declare("/gait/maxVelX", 0.2, min=0.0, max=0.5)
    recorder = PlotRecorder()
    gw = TelemetryGateway(bus=bus, config=config, recorder=recorder,
                          publishers={"/gait/cmd": lambda v: dict(v or {})})
    gw.start()
    yield bus, config, recorder, gw
    gw.stop()
    config.shutdown()
    bus.shutdown()


class TestGateway:
    def test_hello_ack_carries_id(self, system):
        _, _, _, gw = system
        c = Client(gw.port)
        frame = c.request("hello")
        assert frame["op"] == "ack"
        assert frame["payload"]["version"] >= 1
        c.close()

    def test_subscribe_receives_pushes(self, system):
        bus, _, _, gw = system
        bus.advertise("/pose_belief")
        c = Client(gw.port)
        assert c.request("subscribe", "/pose_belief",
                         {"rate": 100})["op"] == "ack"
        bus.publish("/pose_belief", {"x": 1.5}, stamp=2.0)
        bus.flush()
        frame = c.wait_push("publish")
        assert frame["path"] == "/pose_belief"
        assert frame["payload"]["stamp"] == 2.0
        assert frame["payload"]["value"] == {"x": 1.5}
        c.close()

    def test_config_set_clamps_and_fans_out(self, system):
        _, config, _, gw = system
        c1, c2 = Client(gw.port), Client(gw.port)
        c1.request("hello")
        c2.request("hello")
        ack = c1.request("config_set", "/gait/maxVelX", {"value": 9.0})
        assert ack["op"] == "ack"
        assert ack["payload"]["value"] == 0.5  # clamped to declared max
        assert config.get("/gait/maxVelX") == 0.5
        for c in (c1, c2):
            push = c.wait_push("config_changed")
            assert push["path"] == "/gait/maxVelX"
            assert push["payload"]["value"] == 0.5
        c1.close()
        c2.close()

    def test_config_list(self, system):
        _, _, _, gw = system
        c = Client(gw.port)
        params = c.request("config_list")["payload"]["params"]
        entry = [p for p in params if p["path"] == "/gait/maxVelX"][0]
        assert entry["value"] == 0.2
        assert entry["max"] == 0.5
        c.close()

    def test_plot_tree_fetch_and_timewarp_query(self, system):
        _, _, recorder, gw = system
        for t in range(5):
            recorder.record("/gait/phase", float(t), t * 0.1)
        c = Client(gw.port)
        tree = c.request("plot_tree")["payload"]
        assert "/gait/phase" in tree["paths"]
        samples = c.request("plot_fetch", "/gait/phase",
                            {"from": 2.0})["payload"]["samples"]
        assert [s[0] for s in samples] == [2.0, 3.0, 4.0]
        assert c.request("timewarp", None,
                         {"t": 2.5})["payload"]["cursor"] == 2.5
        q = c.request("query", "/gait/phase")["payload"]
        assert q["time"] == 2.0
        # cursor moves backward freely
        c.request("timewarp", None, {"t": 1.2})
        assert c.request("query", "/gait/phase")["payload"]["time"] == 1.0
        # live again
        c.request("timewarp", None, {"t": None})
        assert c.request("query", "/gait/phase")["payload"]["time"] == 4.0
        c.close()

    def test_query_before_window_errors(self, system):
        _, _, recorder, gw = system
        recorder.record("/x", 5.0, 1)
        c = Client(gw.port)
        c.request("timewarp", None, {"t": 1.0})
        frame = c.request("query", "/x")
        assert frame["op"] == "error"
        c.close()

    def test_malformed_json_keeps_connection(self, system):
        _, _, _, gw = system
        c = Client(gw.port)
        c.send_raw("{not json")
        err = c.wait_push("error")
        assert "message" in err["payload"]
        assert c.request("hello")["op"] == "ack"
        c.close()

    def test_unknown_op_errors(self, system):
        _, _, _, gw = system
        c = Client(gw.port)
        frame = c.request("frobnicate")
        assert frame["op"] == "error"
        assert "unknown op" in frame["payload"]["message"]
        c.close()

    def test_service_call(self, system):
        bus, _, _, gw = system
        bus.advertise_service("/motion/fade", lambda req: {"state": "RELAXED",
                                                           "req": req})
        c = Client(gw.port)
        frame = c.request("call", "/motion/fade", {"request": "all"})
        assert frame["payload"]["result"] == {"state": "RELAXED",
                                              "req": "all"}
        c.close()

    def test_publish_writable_topic(self, system):
        bus, _, _, gw = system
        sub = bus.subscribe("/gait/cmd", queue_size=4)
        c = Client(gw.port)
        frame = c.request("publish", "/gait/cmd",
                          {"value": {"vx": 0.1, "walk": True}})
        assert frame["op"] == "ack"
        bus.flush(timeout=2.0)
        msgs = sub.drain()
        assert msgs and msgs[-1].payload == {"vx": 0.1, "walk": True}
        c.close()

    def test_publish_read_only_topic(self, system):
        _, _, _, gw = system
        c = Client(gw.port)
        frame = c.request("publish", "/sim/truth", {"value": 1})
        assert frame["op"] == "error"
        assert "not writable" in frame["payload"]["message"]
        c.close()

    def test_bag_save_op(self, system, tmp_path):
        _, _, recorder, gw = system
        recorder.declare("/x")
        for k in range(20):
            recorder.record("/x", 0.1 * k, float(k))
        out = str(tmp_path / "flush.bag")
        c = Client(gw.port)
        frame = c.request("bag_save", None, {"file": out, "paths": ["/x"]})
        assert frame["payload"] == {"file": out, "count": 20}
        bag = load_bag(out)
        assert len(bag) == 20 and bag.records[0].payload == 0.0
        c.close()

    def test_stalled_client_never_blocks_publisher(self, system):
        bus, _, _, gw = system
        bus.advertise("/flood")
        c = Client(gw.port)
        c.request("subscribe", "/flood", {"rate": 10000})
        # client stops reading; publisher must stay fast regardless
        t0 = time.monotonic()
        for k in range(2000):
            bus.publish("/flood", k, stamp=float(k))
        bus.flush(timeout=5.0)
        assert time.monotonic() - t0 < 3.0
        c.close()
