"""Tests for the deterministic pub/sub bus: tick delivery, gating, wiring."""

from __future__ import annotations

import pytest

from roverbench.bus import (
    InboxOverflowError,
    MessageBus,
    UnauthorizedPublisherError,
    UnknownSubscriberError,
    UnknownTopicError,
)
from roverbench.messages import (
    NODE_ENV_INTERFACE,
    NODE_WORLD,
    PayloadShapeError,
    Topology,
    server_node,
)
from roverbench.tracing import EventTracer


SAMPLE = {"wp": "A", "wind": 0, "radiation": 0, "env": "Fine"}


def make_bus(**kwargs) -> MessageBus:
    return MessageBus(Topology(), EventTracer(), **kwargs)


# -- delivery model ----------------------------------------------------------


class TestDelivery:
    """Publish at tick t, observe at tick t+1, in seq order."""

    def test_publish_is_not_visible_same_tick(self):
        """A published message stays pending until step_deliver closes the tick."""
        bus = make_bus()
        bus.subscribe(NODE_ENV_INTERFACE, "/env/sample")
        bus.publish(NODE_WORLD, "/env/sample", dict(SAMPLE))
        assert bus.inboxes[NODE_ENV_INTERFACE] == []

    def test_step_deliver_moves_message_next_tick(self):
        bus = make_bus()
        bus.subscribe(NODE_ENV_INTERFACE, "/env/sample")
        bus.publish(NODE_WORLD, "/env/sample", dict(SAMPLE))
        delivered = bus.step_deliver()
        assert bus.tick == 1
        assert [node for node, _ in delivered] == [NODE_ENV_INTERFACE]
        msg = delivered[0][1]
        assert msg.topic == "/env/sample"
        assert msg.tick == 0  # stamped with the publish tick
        assert bus.inboxes[NODE_ENV_INTERFACE] == [msg]

    def test_delivery_preserves_global_seq_order(self):
        """Messages on different topics arrive in the order they were published."""
        bus = make_bus()
        bus.subscribe(NODE_ENV_INTERFACE, "/env/sample")
        bus.subscribe(NODE_ENV_INTERFACE, "/pose")
        bus.publish(NODE_WORLD, "/env/sample", dict(SAMPLE))
        bus.publish(server_node("wheels"), "/pose", {"x": 1, "y": 0})
        bus.publish(NODE_WORLD, "/env/sample", {**SAMPLE, "wp": "B"})
        inbox = [msg for _, msg in bus.step_deliver()]
        assert [m.seq for m in inbox] == [0, 1, 2]
        assert [m.topic for m in inbox] == ["/env/sample", "/pose", "/env/sample"]

    def test_fanout_reaches_every_subscriber(self):
        bus = make_bus()
        bus.subscribe(NODE_WORLD, "/pose")
        bus.subscribe(NODE_ENV_INTERFACE, "/pose")
        bus.publish(server_node("wheels"), "/pose", {"x": 0, "y": 0})
        nodes = sorted(node for node, _ in bus.step_deliver())
        assert nodes == [NODE_ENV_INTERFACE, NODE_WORLD]

    def test_subscribers_snapshotted_at_publish_time(self):
        """A subscription added after publish does not receive the message."""
        bus = make_bus()
        bus.publish(NODE_WORLD, "/env/sample", dict(SAMPLE))
        bus.subscribe(NODE_ENV_INTERFACE, "/env/sample")
        assert bus.step_deliver() == []
        # The next publish does reach it.
        bus.publish(NODE_WORLD, "/env/sample", dict(SAMPLE))
        assert len(bus.step_deliver()) == 1

    def test_duplicate_subscribe_is_noop(self):
        bus = make_bus()
        bus.subscribe(NODE_ENV_INTERFACE, "/env/sample")
        bus.subscribe(NODE_ENV_INTERFACE, "/env/sample")
        bus.publish(NODE_WORLD, "/env/sample", dict(SAMPLE))
        assert len(bus.step_deliver()) == 1

    def test_drain_inbox_empties(self):
        bus = make_bus()
        bus.subscribe(NODE_ENV_INTERFACE, "/env/sample")
        bus.publish(NODE_WORLD, "/env/sample", dict(SAMPLE))
        bus.step_deliver()
        drained = bus.drain_inbox(NODE_ENV_INTERFACE)
        assert len(drained) == 1
        assert bus.drain_inbox(NODE_ENV_INTERFACE) == []

    def test_deliver_events_stamped_with_new_tick(self):
        """Publish events carry the publish tick, deliver events the arrival tick."""
        tracer = EventTracer()
        bus = MessageBus(Topology(), tracer)
        bus.subscribe(NODE_ENV_INTERFACE, "/env/sample")
        bus.publish(NODE_WORLD, "/env/sample", dict(SAMPLE))
        bus.step_deliver()
        kinds = {ev["kind"]: ev for ev in tracer.events}
        assert kinds["publish"]["t"] == 0
        assert kinds["deliver"]["t"] == 1

    def test_two_tick_pipeline(self):
        """Each step_deliver hands over exactly the prior tick's traffic."""
        bus = make_bus()
        bus.subscribe(NODE_ENV_INTERFACE, "/env/sample")
        bus.publish(NODE_WORLD, "/env/sample", dict(SAMPLE))
        first = bus.step_deliver()
        bus.publish(NODE_WORLD, "/env/sample", {**SAMPLE, "wp": "B"})
        second = bus.step_deliver()
        assert [m.payload["wp"] for _, m in first] == ["A"]
        assert [m.payload["wp"] for _, m in second] == ["B"]
        assert bus.tick == 2


# -- wiring validation -------------------------------------------------------


class TestWiring:
    def test_unknown_topic_on_publish(self):
        bus = make_bus()
        with pytest.raises(UnknownTopicError):
            bus.publish(NODE_WORLD, "/no/such/topic", {})

    def test_unknown_topic_on_subscribe(self):
        bus = make_bus()
        with pytest.raises(UnknownTopicError):
            bus.subscribe(NODE_WORLD, "/no/such/topic")

    def test_unauthorized_publisher(self):
        """Only the declared publisher of a topic may publish on it."""
        bus = make_bus()
        with pytest.raises(UnauthorizedPublisherError):
            bus.publish(NODE_ENV_INTERFACE, "/env/sample", dict(SAMPLE))

    def test_undeclared_subscriber_rejected(self):
        bus = make_bus()
        with pytest.raises(UnknownSubscriberError):
            bus.subscribe("agent", "/env/sample")

    def test_payload_shape_enforced(self):
        bus = make_bus()
        with pytest.raises(PayloadShapeError):
            bus.publish(NODE_WORLD, "/env/sample", {"wp": "A"})

    def test_wheel_telemetry_needs_six_speeds(self):
        bus = make_bus()
        with pytest.raises(PayloadShapeError):
            bus.publish(server_node("wheels"), "/wheels/telemetry", {"speeds": [0, 0]})

    def test_inbox_overflow_raises(self):
        bus = make_bus(inbox_limit=2)
        bus.subscribe(NODE_ENV_INTERFACE, "/env/sample")
        for _ in range(3):
            bus.publish(NODE_WORLD, "/env/sample", dict(SAMPLE))
        with pytest.raises(InboxOverflowError):
            bus.step_deliver()


# -- monitor gate ------------------------------------------------------------


class TestGate:
    def test_gate_veto_blocks_message(self):
        """A vetoed publish becomes a block event and reaches no inbox."""
        tracer = EventTracer()
        bus = MessageBus(Topology(), tracer)
        bus.subscribe(NODE_ENV_INTERFACE, "/env/sample")
        bus.gate = lambda event: event["payload"]["wp"] == "B"
        bus.publish(NODE_WORLD, "/env/sample", dict(SAMPLE))
        bus.publish(NODE_WORLD, "/env/sample", {**SAMPLE, "wp": "B"})
        delivered = bus.step_deliver()
        assert [m.payload["wp"] for _, m in delivered] == ["A"]
        kinds = [ev["kind"] for ev in tracer.events if ev["kind"] != "deliver"]
        assert kinds == ["publish", "block"]

    def test_gate_sees_publish_event_shape(self):
        seen = []
        bus = make_bus()
        bus.gate = lambda event: seen.append(event) or False
        bus.publish(NODE_WORLD, "/env/sample", dict(SAMPLE))
        (event,) = seen
        assert event["kind"] == "publish"
        assert event["topic"] == "/env/sample"
        assert event["t"] == 0

    def test_blocked_message_still_consumes_seq(self):
        """Seq numbers count publish attempts, vetoed or not."""
        bus = make_bus()
        bus.gate = lambda event: True
        first = bus.publish(NODE_WORLD, "/env/sample", dict(SAMPLE))
        bus.gate = None
        second = bus.publish(NODE_WORLD, "/env/sample", dict(SAMPLE))
        assert (first, second) == (0, 1)


# -- counters ----------------------------------------------------------------


class TestCounters:
    def test_counter_arithmetic(self):
        """attempts = published + blocked; delivered counts per-inbox copies."""
        bus = make_bus()
        bus.subscribe(NODE_WORLD, "/pose")
        bus.subscribe(NODE_ENV_INTERFACE, "/pose")
        calls = iter([False, True, False])
        bus.gate = lambda event: next(calls)
        for _ in range(3):
            bus.publish(server_node("wheels"), "/pose", {"x": 0, "y": 0})
        bus.step_deliver()
        counter = bus.counters["/pose"]
        assert counter["attempts"] == 3
        assert counter["published"] == 2
        assert counter["blocked"] == 1
        assert counter["delivered"] == 4  # two messages, two subscribers each
