import threading
import time

import pytest
from hypothesis import given, settings, strategies as st

from soccerbot.msgbus import (BusError, MessageBus, SchemaError,
                              ServiceTimeout, ServiceUnavailable)


@pytest.fixture
def bus():
    b = MessageBus()
    yield b
    b.shutdown()


class TestPublishSubscribe:
    def test_fifo_delivery(self, bus):
        sub = bus.subscribe("/a", queue_size=10)
        for i in range(3):
            bus.publish("/a", i)
        assert [m.payload for m in sub.drain()] == [0, 1, 2]

    def test_overflow_drops_oldest(self, bus):
        sub = bus.subscribe("/a", queue_size=2)
        for i in range(5):
            bus.publish("/a", i)
        assert [m.payload for m in sub.drain()] == [3, 4]

    def test_publish_without_subscribers(self, bus):
        bus.publish("/a", "hello")  # no error, message discarded

    def test_no_replay_before_subscribe(self, bus):
        bus.publish("/a", 1)
        sub = bus.subscribe("/a")
        assert sub.drain() == []

    def test_fanout(self, bus):
        s1 = bus.subscribe("/a")
        s2 = bus.subscribe("/a")
        bus.publish("/a", "x")
        assert [m.payload for m in s1.drain()] == ["x"]
        assert [m.payload for m in s2.drain()] == ["x"]

    def test_closed_subscription_stops_delivery(self, bus):
        sub = bus.subscribe("/a")
        sub.close()
        bus.publish("/a", 1)
        assert sub.drain() == []

    def test_bad_topic_path(self, bus):
        with pytest.raises(BusError):
            bus.publish("no-slash", 1)
        with pytest.raises(BusError):
            bus.subscribe("")

    def test_queue_size_must_be_positive(self, bus):
        with pytest.raises(BusError):
            bus.subscribe("/a", queue_size=0)

    def test_schema_enforcement(self, bus):
        bus.advertise("/typed", schema=int)
        bus.publish("/typed", 42)
        with pytest.raises(SchemaError):
            bus.publish("/typed", "not an int")

    def test_schema_conflict(self, bus):
        bus.advertise("/typed", schema=int)
        with pytest.raises(SchemaError):
            bus.advertise("/typed", schema=str)

    def test_callback_delivery(self, bus):
        got = []
        bus.subscribe("/cb", callback=lambda m: got.append(m.payload))
        for i in range(4):
            bus.publish("/cb", i)
        bus.flush()
        assert got == [0, 1, 2, 3]


class TestProperties:
    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(), min_size=1, max_size=40))
    def test_no_loss_when_queue_fits(self, payloads):
        bus = MessageBus()
        sub = bus.subscribe("/p", queue_size=len(payloads))
        for p in payloads:
            bus.publish("/p", p)
        assert [m.payload for m in sub.drain()] == payloads
        bus.shutdown()

    def test_per_publisher_fifo_under_interleaving(self):
        # two publisher threads; each publisher's subsequence must stay ordered
        bus = MessageBus()
        sub = bus.subscribe("/p", queue_size=10000)
        n = 500

        def pub(tag):
            for i in range(n):
                bus.publish("/p", (tag, i))

        threads = [threading.Thread(target=pub, args=(t,)) for t in "ab"]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        msgs = [m.payload for m in sub.drain()]
        for tag in "ab":
            seq = [i for (t, i) in msgs if t == tag]
            assert seq == list(range(n))
        bus.shutdown()


class TestServices:
    def test_echo(self, bus):
        bus.advertise_service("/echo", lambda req: req)
        assert bus.call("/echo", {"x": 1}, deadline=1.0) == {"x": 1}

    def test_unavailable(self, bus):
        with pytest.raises(ServiceUnavailable):
            bus.call("/nope", None, deadline=0.1)

    def test_timeout(self, bus):
        bus.advertise_service("/slow", lambda req: time.sleep(0.4))
        with pytest.raises(ServiceTimeout):
            bus.call("/slow", None, deadline=0.2)

    def test_totality(self, bus):
        # every call terminates with exactly one of response/unavailable/timeout
        bus.advertise_service("/ok", lambda r: "done")
        bus.advertise_service("/slow", lambda r: time.sleep(0.5))
        outcomes = []
        for svc in ("/ok", "/missing", "/slow"):
            try:
                outcomes.append(("response", bus.call(svc, None, deadline=0.15)))
            except ServiceUnavailable:
                outcomes.append(("unavailable", None))
            except ServiceTimeout:
                outcomes.append(("timeout", None))
        assert [o[0] for o in outcomes] == ["response", "unavailable", "timeout"]

    def test_bad_deadline(self, bus):
        bus.advertise_service("/ok", lambda r: r)
        with pytest.raises(BusError):
            bus.call("/ok", None, deadline=0.0)
