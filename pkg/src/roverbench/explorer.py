"""Explicit-state exploration of the closed agent/environment system.

The explorer enumerates every nondeterministic choice the model can make -
initial radiation levels, wind re-rolls on arrival, effector fault outcomes,
and (optionally) node scheduling order - and walks the induced state graph
breadth-first.  States are canonical JSON snapshots with every absolute-tick
quantity replaced by a relative counter, so the graph is finite whenever the
mission is cyclic.

Safety and bounded-response properties ride along as monitor states inside
the product; a violation is reported with the shortest choice path that
reaches it.  Unbounded liveness (plain ``eventually``, ``always(eventually)``
and unbounded response) is decided on the finished graph by cycle detection
over labeled edges: a reachable cycle that never produces the awaited event
is a lasso-shaped counterexample.

Counterexamples embed the scenario config plus the per-tick choice vectors
and can be replayed later; a replay that no longer produces the recorded
behavior reports divergence instead of guessing.
"""

from __future__ import annotations

import copy
import json
import time
from dataclasses import dataclass, field

from .config import ConfigError, ScenarioConfig, make_config
from .monitor import (
    IllegalOperatorForRuntime,
    MonitorShapeError,
    OnlineMonitor,
    synthesize,
)
from .prop_dsl import (
    SATISFIED,
    UNDETERMINED,
    VIOLATED,
    Always,
    Eventually,
    Implies,
    compile_event_predicate,
    parse_formula,
)
from .simulator import Model
from .tracing import EventTracer

DEFAULT_BUDGET_STATES = 1_000_000
DEFAULT_BUDGET_SECS = 60.0


class ExplorationError(ValueError):
    pass


class StateSpaceBudgetExceeded(Exception):
    def __init__(self, states: int, seconds: float, limit: str):
        super().__init__(
            f"exploration stopped: {limit} budget exhausted "
            f"({states} states, {seconds:.1f}s)")
        self.states = states
        self.seconds = seconds
        self.limit = limit


class ReplayDivergenceError(Exception):
    """A recorded counterexample no longer matches the model's behavior."""


# -- choice sinks ------------------------------------------------------------

class ChoiceSink:
    """Feeds scripted choice indices, recording every choice point it serves.

    With an empty (or exhausted) script the first option is taken, which makes
    a bare sink record the choice-point signature of a step.  In strict mode
    the script must cover every call and match the recorded keys - used for
    counterexample replay, where any mismatch is divergence, not an error to
    smooth over.
    """

    def __init__(self, script: list | None = None, strict: bool = False):
        self.script = list(script or [])
        self.strict = strict
        self.index = 0
        self.log: list[list] = []  # [key parts, option count, picked index]

    def choose(self, key: tuple, options):
        options = list(options)
        position = self.index
        self.index += 1
        if position < len(self.script):
            entry = self.script[position]
            want_key, want_count, pick = list(entry[0]), entry[1], entry[2]
            if self.strict and (want_key != list(key) or want_count != len(options)):
                raise ReplayDivergenceError(
                    f"choice point {position} is {list(key)}/{len(options)} options, "
                    f"recorded as {want_key}/{want_count}")
            if pick >= len(options):
                raise ReplayDivergenceError(
                    f"choice point {position} offers {len(options)} options, "
                    f"recorded pick was {pick}")
        elif self.strict:
            raise ReplayDivergenceError(
                f"model asked for an unrecorded choice {list(key)} "
                f"(point {position})")
        else:
            pick = 0
        self.log.append([list(key), len(options), pick])
        return options[pick]

    def finished(self) -> bool:
        return self.index == len(self.script)


def _variants(signature: list[list]) -> list[list[list]]:
    """All choice scripts over a recorded signature (odometer order)."""
    scripts: list[list[list]] = [[]]
    for key, count, _pick in signature:
        scripts = [s + [[key, count, i]] for s in scripts for i in range(count)]
    return scripts


# -- product bundle ----------------------------------------------------------

class _Bundle:
    """One exploration branch: the model plus all riding monitor states."""

    def __init__(self, model: Model, monitors: dict, trackers: dict):
        self.model = model
        self.monitors = monitors  # name -> OnlineMonitor (log mode)
        self.trackers = trackers  # name -> _ResponseTracker
        self.beliefs: set[str] = set()

    def clone(self) -> "_Bundle":
        return copy.deepcopy(self)

    def step(self, script: list | None, strict: bool = False) -> tuple[list[dict], list]:
        """Advance one tick under a choice script; returns (events, choice log)."""
        tracer = self.model.tracer
        tracer.events.clear()
        self.model.host.agent.explanations.clear()
        sink = ChoiceSink(script, strict=strict)
        self.model.step_tick(sink)
        events = list(tracer.events)
        now = self.model.tick
        for event in events:
            if event.get("kind") == "belief":
                if event["op"] == "add":
                    self.beliefs.add(event["atom"])
                else:
                    self.beliefs.discard(event["atom"])
            state = frozenset(self.beliefs)
            for m in self.monitors.values():
                m.observe(event, state)
            for tr in self.trackers.values():
                tr.observe(event, state)
        for m in self.monitors.values():
            m.on_tick(now)
        return events, sink.log

    def violations(self) -> list[tuple[str, OnlineMonitor]]:
        return [(name, m) for name, m in self.monitors.items() if m.verdict == VIOLATED]

    def canonical(self) -> str:
        now = self.model.tick
        raw = {
            "model": self.model.to_state(),
            "monitors": {n: m.to_state(now) for n, m in sorted(self.monitors.items())},
            "trackers": {n: t.to_state() for n, t in sorted(self.trackers.items())},
        }
        return json.dumps(_renumber_goals(raw), sort_keys=True, separators=(",", ":"))


_GOAL_ID_NODES = ("wheelsClient", "armClient", "mastClient")


def _collect_goal_ids(value, found: set) -> None:
    if isinstance(value, dict):
        for k, v in value.items():
            _collect_goal_ids(k, found)
            _collect_goal_ids(v, found)
    elif isinstance(value, (list, tuple)):
        for v in value:
            _collect_goal_ids(v, found)
    elif isinstance(value, str):
        node, _, num = value.partition(":")
        if node in _GOAL_ID_NODES and num.isdigit():
            found.add(value)


def _renumber_goals(state: dict):
    """Replace live goal ids with rank-based names so that states differing
    only in how many goals came before compare equal."""
    ids: set[str] = set()
    _collect_goal_ids(state, ids)
    by_node: dict[str, list[int]] = {}
    for gid in ids:
        node, _, num = gid.partition(":")
        by_node.setdefault(node, []).append(int(num))
    mapping = {}
    for node, nums in by_node.items():
        for rank, num in enumerate(sorted(nums)):
            mapping[f"{node}:{num}"] = f"{node}#{rank}"

    def swap(value):
        if isinstance(value, dict):
            return {swap(k): swap(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [swap(v) for v in value]
        if isinstance(value, str):
            return mapping.get(value, value)
        return value

    return swap(state)


# -- liveness helpers --------------------------------------------------------

class _ResponseTracker:
    """Obligation bit for ``always(T => eventually(G))`` (unbounded): set by a
    trigger, cleared by the goal event, carried in the product state."""

    def __init__(self, trigger, goal):
        self._trigger = trigger
        self._goal = goal
        self.open = False

    def observe(self, event: dict, state: frozenset) -> None:
        if self._goal(event, state):
            self.open = False
        elif self._trigger(event, state):
            self.open = True

    def to_state(self) -> dict:
        return {"open": self.open}


@dataclass
class _Liveness:
    name: str
    kind: str  # "recurrence" | "eventually" | "response"
    pred: object  # awaited-event predicate (edge label)
    tracker: str | None = None  # tracker name for response shapes


def _classify_liveness(name: str, ast) -> _Liveness | None:
    if isinstance(ast, Eventually) and ast.bound is None:
        return _Liveness(name, "eventually", compile_event_predicate(ast.sub))
    if isinstance(ast, Always):
        sub = ast.sub
        if isinstance(sub, Eventually) and sub.bound is None:
            return _Liveness(name, "recurrence", compile_event_predicate(sub.sub))
        if (isinstance(sub, Implies) and isinstance(sub.right, Eventually)
                and sub.right.bound is None):
            return _Liveness(name, "response", compile_event_predicate(sub.right.sub),
                             tracker=name)
    return None


# -- exploration -------------------------------------------------------------

@dataclass
class Counterexample:
    prop: str
    kind: str  # "safety" | "deadline" | "liveness"
    reason: str
    config: dict
    init: list
    ticks: list
    loop_from: int | None = None

    def to_json(self) -> dict:
        data = {
            "prop": self.prop,
            "kind": self.kind,
            "reason": self.reason,
            "config": self.config,
            "init": self.init,
            "ticks": self.ticks,
        }
        if self.loop_from is not None:
            data["loop_from"] = self.loop_from
        return data


@dataclass
class ExplorationReport:
    states: int
    transitions: int
    verdicts: dict
    counterexamples: dict
    complete: bool
    seconds: float
    schedule_invariant: bool | None = None

    def to_json(self) -> dict:
        return {
            "states": self.states,
            "transitions": self.transitions,
            "verdicts": self.verdicts,
            "counterexamples": {n: c.to_json() for n, c in self.counterexamples.items()},
            "complete": self.complete,
            "seconds": round(self.seconds, 3),
            "schedule_invariant": self.schedule_invariant,
        }


@dataclass
class _Node:
    bundle: _Bundle
    parent: str | None
    picks: list  # choice log of the edge that discovered this node
    depth: int


@dataclass
class _Edge:
    src: str
    dst: str
    picks: list
    awaited: dict = field(default_factory=dict)  # liveness name -> event seen
    open_src: dict = field(default_factory=dict)
    open_dst: dict = field(default_factory=dict)


def _reject_scripted(config: ScenarioConfig) -> None:
    if config.env_faults or config.scripted_faults:
        raise ExplorationError(
            "scripted faults and environment fault injection are single-run "
            "features; exploration covers nondeterminism through the choice "
            "sets (wind_choices, radiation_choices, fault_exploration)")


class Explorer:
    def __init__(self, config: ScenarioConfig, suite: dict,
                 names: list[str] | None = None,
                 budget_states: int = DEFAULT_BUDGET_STATES,
                 budget_secs: float = DEFAULT_BUDGET_SECS,
                 extra_monitors: dict | None = None):
        _reject_scripted(config)
        self.config = config
        picked = names if names is not None else list(suite)
        unknown = [n for n in picked if n not in suite]
        if unknown:
            raise ExplorationError(f"unknown properties: {', '.join(unknown)}")
        self.suite = {n: suite[n] for n in picked}
        self.budget_states = budget_states
        self.budget_secs = budget_secs
        self.extra_monitors = dict(extra_monitors or {})  # name -> factory
        self.monitored: dict = {}
        self.liveness: dict[str, _Liveness] = {}
        for name, ast in self.suite.items():
            live = _classify_liveness(name, ast)
            if live is not None:
                self.liveness[name] = live
                continue
            try:
                synthesize(name, ast, "log")
            except IllegalOperatorForRuntime:
                raise ExplorationError(
                    f"{name}: unbounded liveness in a shape the explorer does "
                    "not decide; restructure as response or recurrence")
            except MonitorShapeError as exc:
                raise ExplorationError(str(exc)) from exc
            self.monitored[name] = ast  # synthesized afresh per root bundle

    # -- bundle construction -------------------------------------------------

    def _build_bundle(self, init_script: list | None, strict: bool = False) -> tuple[_Bundle, list]:
        tracer = EventTracer()
        sink = ChoiceSink(init_script, strict=strict)
        model = Model(self.config, tracer, explore=True, sink=sink)
        monitors = {n: synthesize(n, ast, "log") for n, ast in self.monitored.items()}
        for name, factory in self.extra_monitors.items():
            monitors[name] = factory()
        trackers = {}
        for name, live in self.liveness.items():
            if live.kind == "response":
                trigger = compile_event_predicate(self.suite[name].sub.left)
                trackers[name] = _ResponseTracker(trigger, live.pred)
        return _Bundle(model, monitors, trackers), sink.log

    def _roots(self) -> list[tuple[_Bundle, list]]:
        base, signature = self._build_bundle(None)
        roots = [(base, signature)]
        for script in _variants(signature):
            if all(entry[2] == 0 for entry in script):
                continue  # the all-first script is the base bundle
            bundle, log = self._build_bundle(script)
            roots.append((bundle, log))
        return roots

    # -- main walk -----------------------------------------------------------

    def explore(self) -> ExplorationReport:
        started = time.monotonic()
        states: dict[str, _Node] = {}
        edges: list[_Edge] = []
        order: list[str] = []
        queue: list[str] = []
        verdicts: dict[str, str] = {n: UNDETERMINED for n in self.suite}
        verdicts.update({n: UNDETERMINED for n in self.extra_monitors})
        counterexamples: dict[str, Counterexample] = {}

        def check_budget() -> None:
            elapsed = time.monotonic() - started
            if len(states) > self.budget_states:
                raise StateSpaceBudgetExceeded(len(states), elapsed, "state")
            if elapsed > self.budget_secs:
                raise StateSpaceBudgetExceeded(len(states), elapsed, "time")

        def note_violations(bundle: _Bundle, key: str) -> None:
            for name, monitor in bundle.violations():
                if name not in counterexamples:
                    ce = self._trail(states, key, monitor.shape, monitor.reason)
                    ce.prop = name
                    counterexamples[name] = ce
                    verdicts[name] = VIOLATED
                del bundle.monitors[name]

        for bundle, init_log in self._roots():
            key = bundle.canonical()
            if key in states:
                continue
            states[key] = _Node(bundle, None, init_log, 0)
            order.append(key)
            queue.append(key)
            note_violations(bundle, key)
            check_budget()

        head = 0
        while head < len(queue):
            key = queue[head]
            head += 1
            node = states[key]
            probe = node.bundle.clone()
            open_src = {n: t.open for n, t in node.bundle.trackers.items()}
            events, signature = probe.step(None)
            successors = [(probe, signature, events)]
            for script in _variants(signature):
                if all(entry[2] == 0 for entry in script):
                    continue
                branch = node.bundle.clone()
                branch_events, branch_log = branch.step(script)
                successors.append((branch, branch_log, branch_events))
            for succ, picks, events in successors:
                succ_key = succ.canonical()
                edge = _Edge(key, succ_key, picks)
                for name, live in self.liveness.items():
                    edge.awaited[name] = self._events_match(live.pred, events, node.bundle)
                edge.open_src = open_src
                edge.open_dst = {n: t.open for n, t in succ.trackers.items()}
                edges.append(edge)
                if succ_key not in states:
                    states[succ_key] = _Node(succ, key, picks, node.depth + 1)
                    order.append(succ_key)
                    queue.append(succ_key)
                    note_violations(succ, succ_key)
                check_budget()

        elapsed = time.monotonic() - started

        # Monitored properties that never violated anywhere: on an exhaustive
        # finite graph every infinite run keeps satisfying them.
        for name in list(self.monitored) + list(self.extra_monitors):
            if verdicts[name] == UNDETERMINED:
                verdicts[name] = SATISFIED

        self._decide_liveness(states, edges, verdicts, counterexamples)

        schedule_invariant = None
        if self.config.schedule_sensitivity:
            schedule_invariant = self._schedule_invariant(edges)

        return ExplorationReport(
            states=len(states),
            transitions=len(edges),
            verdicts=verdicts,
            counterexamples=counterexamples,
            complete=True,
            seconds=elapsed,
            schedule_invariant=schedule_invariant,
        )

    def _events_match(self, pred, events: list[dict], src_bundle: _Bundle) -> bool:
        # Re-derive per-event belief state along the edge for holds() atoms.
        beliefs = set(src_bundle.beliefs)
        for event in events:
            if event.get("kind") == "belief":
                if event["op"] == "add":
                    beliefs.add(event["atom"])
                else:
                    beliefs.discard(event["atom"])
            if pred(event, frozenset(beliefs)):
                return True
        return False

    def _trail(self, states: dict, key: str, kind: str, reason: str) -> Counterexample:
        picks: list[list] = []
        cursor = key
        init: list = []
        while cursor is not None:
            node = states[cursor]
            if node.parent is None:
                init = node.picks
                break
            picks.append(node.picks)
            cursor = node.parent
        picks.reverse()
        return Counterexample(
            prop="", kind=kind, reason=reason,
            config=self.config.to_json(), init=init, ticks=picks,
        )

    # -- liveness decisions --------------------------------------------------

    def _decide_liveness(self, states, edges, verdicts, counterexamples) -> None:
        if not self.liveness:
            return
        out: dict[str, list[_Edge]] = {}
        for edge in edges:
            out.setdefault(edge.src, []).append(edge)

        for name, live in self.liveness.items():
            if live.kind == "eventually":
                allowed = self._reach_without(states, out, name)
                cycle = self._find_cycle(allowed, out, name, restrict_open=None)
            elif live.kind == "recurrence":
                cycle = self._find_cycle(set(states), out, name, restrict_open=None)
            else:  # response
                cycle = self._find_cycle(set(states), out, name, restrict_open=name)
            if cycle is None:
                verdicts[name] = SATISFIED
                continue
            verdicts[name] = VIOLATED
            entry, loop_edges = cycle
            ce = self._trail(states, entry, "liveness",
                             "a reachable cycle never produces the awaited event")
            ce.prop = name
            ce.loop_from = len(ce.ticks)
            ce.ticks = ce.ticks + [e.picks for e in loop_edges]
            counterexamples.setdefault(name, ce)

    def _reach_without(self, states, out, name: str) -> set:
        """States reachable from the roots along edges lacking the awaited event."""
        roots = [k for k, node in states.items() if node.parent is None]
        seen = set(roots)
        stack = list(roots)
        while stack:
            key = stack.pop()
            for edge in out.get(key, ()):  # noqa: B905
                if edge.awaited.get(name):
                    continue
                if edge.dst not in seen:
                    seen.add(edge.dst)
                    stack.append(edge.dst)
        return seen

    def _find_cycle(self, allowed: set, out, name: str, restrict_open: str | None):
        """A cycle over ``allowed`` states using only edges that never produce
        the awaited event (and, for response, keep the obligation open).
        Returns (entry_key, [edges around the cycle]) or None."""

        def usable(edge: _Edge) -> bool:
            if edge.awaited.get(name):
                return False
            if edge.dst not in allowed:
                return False
            if restrict_open is not None:
                if not edge.open_src.get(restrict_open) or not edge.open_dst.get(restrict_open):
                    return False
            return True

        color: dict[str, int] = {}  # 1 = on stack, 2 = done
        trail: list[_Edge] = []

        def dfs(key: str):
            color[key] = 1
            for edge in out.get(key, ()):
                if not usable(edge):
                    continue
                if color.get(edge.dst) == 1:
                    # Found a lasso: unwind the stack back to edge.dst.
                    cycle = [edge]
                    for back in reversed(trail):
                        cycle.append(back)
                        if back.src == edge.dst:
                            break
                    cycle.reverse()
                    return edge.dst, cycle
                if color.get(edge.dst) is None:
                    trail.append(edge)
                    found = dfs(edge.dst)
                    trail.pop()
                    if found:
                        return found
            color[key] = 2
            return None

        # Sorted so the lasso we report does not depend on set hashing.
        for key in sorted(allowed):
            if restrict_open is not None:
                continue_outer = False
                # Only start from states where the obligation is open.
                for edge in out.get(key, ()):
                    if edge.open_src.get(restrict_open):
                        break
                else:
                    continue_outer = True
                if continue_outer:
                    continue
            if color.get(key) is None:
                found = dfs(key)
                if found:
                    return found
        return None

    def _schedule_invariant(self, edges) -> bool:
        """With schedule permutations enabled, the successor of a state must
        not depend on the schedule pick: group edges by (src, non-schedule
        picks) and check each group lands on a single destination."""
        groups: dict[tuple, set] = {}
        for edge in edges:
            rest = tuple(
                (tuple(k), n, p) for k, n, p in edge.picks if k[0] != "schedule"
            )
            groups.setdefault((edge.src, rest), set()).add(edge.dst)
        return all(len(dsts) == 1 for dsts in groups.values())


# -- public entry points -----------------------------------------------------

def explore_properties(config: ScenarioConfig, suite: dict,
                       names: list[str] | None = None,
                       budget_states: int = DEFAULT_BUDGET_STATES,
                       budget_secs: float = DEFAULT_BUDGET_SECS) -> ExplorationReport:
    return Explorer(config, suite, names, budget_states, budget_secs).explore()


def check_invariant(config: ScenarioConfig, predicate,
                    budget_states: int = DEFAULT_BUDGET_STATES,
                    budget_secs: float = DEFAULT_BUDGET_SECS):
    """BFS over all reachable states; ``predicate(model) -> bool`` must hold
    in every one.  Returns (True, report) or (False, counterexample)."""
    explorer = Explorer(config, suite={}, names=[],
                        budget_states=budget_states, budget_secs=budget_secs)
    started = time.monotonic()
    states: dict[str, _Node] = {}
    queue: list[str] = []

    def offending(bundle: _Bundle, key: str):
        if not predicate(bundle.model):
            ce = explorer._trail(states, key, "safety", "invariant predicate is false")
            ce.prop = "invariant"
            return ce
        return None

    for bundle, init_log in explorer._roots():
        key = bundle.canonical()
        if key in states:
            continue
        states[key] = _Node(bundle, None, init_log, 0)
        queue.append(key)
        bad = offending(bundle, key)
        if bad:
            return False, bad

    head = 0
    while head < len(queue):
        key = queue[head]
        head += 1
        node = states[key]
        probe = node.bundle.clone()
        events, signature = probe.step(None)
        branches = [(probe, signature)]
        for script in _variants(signature):
            if all(entry[2] == 0 for entry in script):
                continue
            branch = node.bundle.clone()
            _, log = branch.step(script)
            branches.append((branch, log))
        for succ, picks in branches:
            succ_key = succ.canonical()
            if succ_key not in states:
                states[succ_key] = _Node(succ, key, picks, node.depth + 1)
                queue.append(succ_key)
                bad = offending(succ, succ_key)
                if bad:
                    return False, bad
            elapsed = time.monotonic() - started
            if len(states) > budget_states:
                raise StateSpaceBudgetExceeded(len(states), elapsed, "state")
            if elapsed > budget_secs:
                raise StateSpaceBudgetExceeded(len(states), elapsed, "time")
    return True, {"states": len(states)}


def check_response(config: ScenarioConfig, trigger: str, goal: str,
                   bound: int | None = None,
                   budget_states: int = DEFAULT_BUDGET_STATES,
                   budget_secs: float = DEFAULT_BUDGET_SECS) -> ExplorationReport:
    """Explore ``always(trigger => eventually[<=bound](goal))`` for event
    predicates given as property-language text."""
    window = f"[<={bound}]" if bound is not None else ""
    formula = parse_formula(f"always(({trigger}) => eventually{window}(({goal})))")
    return explore_properties(config, {"response": formula},
                              budget_states=budget_states, budget_secs=budget_secs)


class _SequenceMonitor(OnlineMonitor):
    """First occurrences of the listed predicates must appear in order; any
    forbidden event is an immediate violation."""

    def __init__(self, name, steps, forbidden):
        super().__init__(name, None, "log")
        self.steps = steps
        self.forbidden = forbidden
        self.reached = 0

    def _observe(self, event, state):
        for i, pred in enumerate(self.forbidden):
            if pred(event, state):
                self._violate(f"forbidden event #{i} occurred at t={event.get('t')}")
                return
        for i in range(len(self.steps) - 1, self.reached - 1, -1):
            if self.steps[i](event, state):
                if i > self.reached:
                    self._violate(
                        f"step {i} occurred before step {self.reached} at t={event.get('t')}")
                else:
                    self.reached += 1
                return

    def finalize(self):
        return self.verdict if self.verdict == VIOLATED else SATISFIED

    def to_state(self, now: int = 0):
        return {"verdict": self.verdict, "reached": self.reached}


def check_sequence(config: ScenarioConfig, steps: list[str],
                   forbidden: list[str] | None = None,
                   budget_states: int = DEFAULT_BUDGET_STATES,
                   budget_secs: float = DEFAULT_BUDGET_SECS):
    """Explore requiring the first occurrences of ``steps`` (property-language
    event predicates) to appear in the given order on every path."""
    step_preds = [compile_event_predicate(parse_formula(s)) for s in steps]
    forb_preds = [compile_event_predicate(parse_formula(s)) for s in (forbidden or [])]
    explorer = Explorer(
        config, suite={}, names=[],
        budget_states=budget_states, budget_secs=budget_secs,
        extra_monitors={
            "sequence": lambda: _SequenceMonitor("sequence", step_preds, forb_preds),
        })
    return explorer.explore()


# -- counterexample replay ---------------------------------------------------

def write_counterexample(ce: Counterexample, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(ce.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_counterexample(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    for field_name in ("config", "init", "ticks", "prop", "kind"):
        if field_name not in data:
            raise ExplorationError(f"counterexample file lacks {field_name!r}")
    return data


def replay_counterexample(data: dict, suite: dict) -> dict:
    """Re-run a recorded counterexample; returns a report with
    ``reproduced`` set, or raises ReplayDivergenceError."""
    try:
        config = make_config(data["config"])
    except ConfigError as exc:
        raise ExplorationError(f"embedded config invalid: {exc}") from exc
    prop = data["prop"]
    tracer = EventTracer()
    sink = ChoiceSink(data["init"], strict=True)
    model = Model(config, tracer, explore=True, sink=sink)
    if not sink.finished():
        raise ReplayDivergenceError("initial choices were not all consumed")

    monitors = {}
    trackers = {}
    if data["kind"] in ("safety", "deadline"):
        if prop not in suite:
            raise ExplorationError(f"property {prop!r} not in the suite")
        monitors[prop] = synthesize(prop, suite[prop], "log")
    bundle = _Bundle(model, monitors, trackers)

    loop_from = data.get("loop_from")
    snapshots = []
    for index, script in enumerate(data["ticks"]):
        if loop_from is not None and index == loop_from:
            snapshots.append(bundle.canonical())
        bundle.step(script, strict=True)

    if data["kind"] in ("safety", "deadline"):
        verdict = bundle.monitors.get(prop)
        reproduced = verdict is not None and verdict.verdict == VIOLATED
        if not reproduced:
            raise ReplayDivergenceError(
                f"replay did not reproduce the {data['kind']} violation of {prop}")
        return {"reproduced": True, "prop": prop, "kind": data["kind"],
                "ticks": len(data["ticks"])}

    # Liveness lasso: the state at the loop entry must recur at the end.
    if loop_from is None:
        raise ExplorationError("liveness counterexample lacks loop_from")
    final = bundle.canonical()
    if not snapshots or snapshots[0] != final:
        raise ReplayDivergenceError("replayed loop does not return to its entry state")
    return {"reproduced": True, "prop": prop, "kind": "liveness",
            "ticks": len(data["ticks"]), "loop_from": loop_from}
