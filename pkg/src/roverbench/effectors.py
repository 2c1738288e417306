"""Effector servers: six-wheel drive base, four-joint arm, two-joint mast.

The wheels server executes direction goals (timed runs at a commanded speed)
and waypoint goals (grid moves along Manhattan paths, one cell per tick).
Every wheels resolution is preceded by an all-zero telemetry frame: the drive
always stops before reporting.  The posture servers move their joints linearly
between the closed and open poses over a configured number of ticks; a cancel
freezes the joints wherever they are and a later goal resumes from there.
"""

from __future__ import annotations

from .action_protocol import GoalRecord, ServerBase
from .bus import MessageBus
from .config import ScenarioConfig
from .messages import DIRECTIONS

WHEEL_COUNT = 6
NOMINAL_SPEED = 1


def direction_speeds(direction: str, speed: int) -> list[int]:
    """Per-wheel speeds for a direction command (left wheels listed first)."""
    if direction == "forward":
        return [speed] * WHEEL_COUNT
    if direction == "backward":
        return [-speed] * WHEEL_COUNT
    if direction == "left":
        return [-speed] * 3 + [speed] * 3
    return [speed] * 3 + [-speed] * 3  # right


class WheelsServer(ServerBase):
    def __init__(self, config: ScenarioConfig, tracer, **kwargs):
        skip_stop = kwargs.pop("skip_stop", False)
        super().__init__("wheels", config.init_delays["wheels"], tracer, **kwargs)
        self.config = config
        self.pose: tuple[int, int] = config.coords(config.start)
        self.skip_stop = skip_stop  # no-stop mutant: omit the halt frame
        self._speeds: list[int] = []
        self._target: tuple[int, int] | None = None

    def validate(self, request: dict) -> str | None:
        if request.get("kind") == "direction":
            if request["dir"] not in DIRECTIONS:
                return f"unknown direction {request['dir']!r}"
            if request["speed"] <= 0:
                return "speed must be positive"
            if request["distance"] <= 0:
                return "distance must be positive"
            return None
        if request.get("kind") == "waypoint":
            if request["wp"] not in self.config.waypoints:
                return f"unknown waypoint {request['wp']!r}"
            return None
        return "unrecognized wheels request"

    def begin(self, record: GoalRecord) -> int:
        request = record.request
        if request["kind"] == "direction":
            self._speeds = direction_speeds(request["dir"], request["speed"])
            self._target = None
            return request["distance"]
        self._target = self.config.coords(request["wp"])
        self._speeds = [NOMINAL_SPEED] * WHEEL_COUNT
        x, y = self.pose
        tx, ty = self._target
        return abs(tx - x) + abs(ty - y)

    def work_tick(self, record: GoalRecord, t: int, bus: MessageBus) -> None:
        if self._target is not None:
            x, y = self.pose
            tx, ty = self._target
            if x != tx:
                x += 1 if tx > x else -1
            elif y != ty:
                y += 1 if ty > y else -1
            self.pose = (x, y)
            bus.publish(self.node, "/pose", {"x": x, "y": y})
        bus.publish(self.node, "/wheels/telemetry", {"speeds": list(self._speeds)})

    def pre_resolve(self, record: GoalRecord, status: str, t: int, bus: MessageBus) -> None:
        if not self.skip_stop:
            bus.publish(self.node, "/wheels/telemetry", {"speeds": [0] * WHEEL_COUNT})

    def to_state(self) -> dict:
        state = self.base_state()
        state["pose"] = list(self.pose)
        if self.active is not None:
            state["speeds"] = list(self._speeds)
            state["march"] = list(self._target) if self._target else None
        return state


class PostureServer(ServerBase):
    """Arm or mast: linear joint interpolation between two named poses."""

    def __init__(self, effector: str, config: ScenarioConfig, tracer, **kwargs):
        super().__init__(effector, config.init_delays[effector], tracer, **kwargs)
        self.config = config
        self.closed = [float(v) for v in config.closed_pose[effector]]
        self.open = [float(v) for v in config.open_pose[effector]]
        self.joints: list[float] = list(self.closed)
        self.posture = "Closed"
        self._start: list[float] = []
        self._goal_joints: list[float] = []
        self._goal_posture = "Closed"

    def validate(self, request: dict) -> str | None:
        if request.get("cmd") not in ("open", "close"):
            return f"unknown posture command {request.get('cmd')!r}"
        return None

    def begin(self, record: GoalRecord) -> int:
        opening = record.request["cmd"] == "open"
        self._goal_joints = list(self.open if opening else self.closed)
        self._goal_posture = "Open" if opening else "Closed"
        self._start = list(self.joints)
        if self.joints == self._goal_joints:
            self.posture = self._goal_posture  # already in pose: no motion
            return 0
        return self.config.posture_duration[self.effector]

    def work_tick(self, record: GoalRecord, t: int, bus: MessageBus) -> None:
        k, n = self.work_done, self.duration
        if k == n:
            self.joints = list(self._goal_joints)
            self.posture = self._goal_posture
        else:
            self.joints = [
                s + (g - s) * k / n for s, g in zip(self._start, self._goal_joints)
            ]
            self.posture = "Moving"
        bus.publish(
            self.node,
            f"/{self.effector}/telemetry",
            {"effector": self.effector, "joints": list(self.joints), "posture": self.posture},
        )

    def to_state(self) -> dict:
        state = self.base_state()
        state["joints"] = list(self.joints)
        state["posture"] = self.posture
        if self.active is not None:
            state["start"] = list(self._start)
            state["goal_joints"] = list(self._goal_joints)
            state["goal_posture"] = self._goal_posture
        return state


def build_servers(config: ScenarioConfig, tracer, mutant: str | None = None) -> dict:
    scripted: dict[str, tuple[int, ...]] = {}
    for fault in config.scripted_faults:
        scripted.setdefault(fault["effector"], ())
        scripted[fault["effector"]] = scripted[fault["effector"]] + (fault["goal_index"],)
    common = lambda e: {
        "fault_explore": config.fault_exploration[e],
        "scripted_faults": scripted.get(e, ()),
    }
    return {
        "wheels": WheelsServer(
            config, tracer, skip_stop=(mutant == "no-stop-wheels"), **common("wheels")
        ),
        "arm": PostureServer("arm", config, tracer, **common("arm")),
        "mast": PostureServer("mast", config, tracer, **common("mast")),
    }
