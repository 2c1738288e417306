"""Deterministic tick engine: assembles the nodes and steps them in a fixed
order, delivering bus traffic between ticks.

Per tick: the environment publishes its samples, each effector server makes
progress, the agent host reasons, and then the bus delivers everything that
was published this tick so it arrives at the start of the next one.  State
snapshots are taken right after delivery, which keeps the pending queue empty
at every snapshot point.
"""

from __future__ import annotations

import itertools
import json

from .action_protocol import ClientEndpoint
from .agent import AgentHost, atom_text
from .bus import MessageBus
from .config import ScenarioConfig
from .effectors import build_servers
from .environment import World
from .messages import EFFECTORS, Topology, server_node
from .tracing import EventTracer

TRACE_FORMAT = 1

_SCHEDULES = tuple(itertools.permutations(range(4)))


class Model:
    """A fully wired system: bus, world, three servers, agent host."""

    def __init__(self, config: ScenarioConfig, tracer: EventTracer,
                 explore: bool = False, sink=None):
        self.config = config
        self.tracer = tracer
        topology = Topology()
        if config.mutant == "misroute-bus":
            # The wiring bug under test: arm goals land on the mast server.
            topology.reroute("/arm/goal", (server_node("mast"),))
        self.bus = MessageBus(topology, tracer, inbox_limit=config.inbox_limit)
        for spec in topology.topics.values():
            for node in spec.subscribers:
                self.bus.subscribe(node, spec.name)
        self.world = World(config, explore=explore, sink=sink)
        self.servers = build_servers(config, tracer, mutant=config.mutant)
        self.clients = {e: ClientEndpoint(e) for e in EFFECTORS}
        self.host = AgentHost(config, tracer, self.clients, mutant=config.mutant)

    @property
    def tick(self) -> int:
        return self.bus.tick

    def step_tick(self, sink=None) -> None:
        t = self.bus.tick
        self.world.step(t, self.bus, sink)
        order = range(4)
        if self.config.schedule_sensitivity and sink is not None:
            order = _SCHEDULES[sink.choose(("schedule",), tuple(range(len(_SCHEDULES))))]
        stages = [
            lambda: self.servers["wheels"].step(t, self.bus, sink),
            lambda: self.servers["arm"].step(t, self.bus, sink),
            lambda: self.servers["mast"].step(t, self.bus, sink),
            lambda: self.host.step(t, self.bus),
        ]
        for i in order:
            stages[i]()
        self.bus.step_deliver()

    def to_state(self) -> dict:
        # Inbox entries are sorted, not left in arrival order: same-tick
        # publishes from different stages are order-independent to every
        # consumer, so arrival order is scheduling noise, not state.
        return {
            "world": self.world.to_state(),
            "servers": {e: s.to_state() for e, s in sorted(self.servers.items())},
            "host": self.host.to_state(),
            "inboxes": {
                node: sorted(
                    (
                        {"topic": m.topic, "sender": m.sender, "payload": m.payload}
                        for m in msgs
                    ),
                    key=lambda entry: json.dumps(entry, sort_keys=True),
                )
                for node, msgs in sorted(self.bus.inboxes.items())
                if msgs
            },
        }


def header_event(config: ScenarioConfig, ticks: int | None = None) -> dict:
    event = {"t": 0, "kind": "header", "format": TRACE_FORMAT, "config": config.to_json()}
    if ticks is not None:
        event["ticks"] = ticks
    return event


def run_simulation(config: ScenarioConfig, ticks: int, trace_path: str | None = None,
                   monitor_engine=None) -> dict:
    """Run the mission for ``ticks`` ticks; returns a run summary."""
    sink_file = open(trace_path, "w", encoding="utf-8") if trace_path is not None else None
    tracer = EventTracer(sink=sink_file)
    visits: list[str] = []

    def watch(event: dict) -> None:
        if event.get("kind") == "belief" and event.get("op") == "add":
            atom = event["atom"]
            if atom.startswith("at("):
                visits.append(atom[3:-1])

    tracer.add_observer(watch)
    try:
        model = Model(config, tracer)
        if monitor_engine is not None:
            monitor_engine.attach(tracer, model.bus)
        tracer.emit(header_event(config, ticks))
        for _ in range(ticks):
            model.step_tick()
            if monitor_engine is not None:
                monitor_engine.on_tick(model.tick)
        verdicts = monitor_engine.finalize() if monitor_engine is not None else {}
        if trace_path is not None:
            with open(trace_path + ".explain", "w", encoding="utf-8") as fh:
                for entry in model.host.agent.explanations:
                    fh.write(json.dumps(entry, separators=(",", ":")) + "\n")
        summary = {
            "ticks": ticks,
            "final_tick": model.tick,
            "visited": visits,
            "beliefs": sorted(atom_text(b) for b in model.host.agent.beliefs),
            "pose": list(model.servers["wheels"].pose),
            "messages_published": sum(
                c["published"] for c in model.bus.counters.values()
            ),
            "messages_blocked": sum(c["blocked"] for c in model.bus.counters.values()),
            "verdicts": verdicts,
        }
        if trace_path is not None:
            summary["trace"] = trace_path
            summary["explanations"] = trace_path + ".explain"
        return summary
    finally:
        if sink_file is not None:
            sink_file.close()
