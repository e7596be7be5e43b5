"""Deterministic 2-D grid navigation simulator.

The world is a 4-connected occupancy grid (0.25 m cells by default) with
point scene objects. Motion primitives are one-cell forward moves and 90
degree turns. When a plan reaches an explore step, the robot buckets visible
objects into left/front/right, infers the most promising direction from a
category co-occurrence table, and falls back to a shortest-path oracle (the
stand-in for asking a supervisor) when the scene is uninformative. An
episode ends at a stop command, when the step budget runs out, or as soon as
the target object is within vision distance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .config import SimPolicy
from .errors import EnvironmentError_, PlanError
from .prompting import ActionOption, PlanStep

_DATA_DIR = Path(__file__).parent / "data"

COMMAND_VERBS = (
    "move_forward",
    "move_forward_to_target",
    "turn_left",
    "turn_right",
    "explore_here",
    "ask_person",
    "stop",
)
_HEADING_DELTAS = {0: (1, 0), 90: (0, 1), 180: (-1, 0), 270: (0, -1)}
_RELATIVE_ORDER = ("front", "left", "right", "back")
_REL_TO_HEADING_OFFSET = {"front": 0, "left": 90, "back": 180, "right": 270}


@dataclass(frozen=True)
class SceneObject:
    id: str
    category: str
    position: tuple[float, float]  # meters


@dataclass(frozen=True)
class RobotPose:
    cell: tuple[int, int]
    heading: int  # degrees, one of 0/90/180/270; 0 is +x, 90 is +y

    def __post_init__(self):
        if self.heading not in _HEADING_DELTAS:
            raise EnvironmentError_(f"heading must be axis-aligned, got {self.heading}")

    def position(self, cell_pitch: float) -> tuple[float, float]:
        return ((self.cell[0] + 0.5) * cell_pitch, (self.cell[1] + 0.5) * cell_pitch)


@dataclass(frozen=True)
class ActionCommand:
    verb: str
    argument: str | None = None
    fallback: tuple[tuple[str, str | None], ...] = ()  # literal steps for explore

    def render(self) -> str:
        return f"{self.verb}({self.argument})" if self.argument else self.verb


@dataclass(frozen=True)
class Environment:
    width: int
    height: int
    occupied: frozenset[tuple[int, int]]
    objects: tuple[SceneObject, ...]
    start: RobotPose
    target_id: str
    cell_pitch: float = 0.25

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise EnvironmentError_("grid dimensions must be positive")
        for cell in self.occupied:
            if not self.in_bounds(cell):
                raise EnvironmentError_(f"occupied cell {cell} outside grid")
        for obj in self.objects:
            x, y = obj.position
            if not (0 <= x <= self.width * self.cell_pitch and 0 <= y <= self.height * self.cell_pitch):
                raise EnvironmentError_(f"object {obj.id} outside grid bounds")
        if not self.is_free(self.start.cell):
            raise EnvironmentError_("start cell must be free")
        target = self.find_object(self.target_id)
        if target is None:
            raise EnvironmentError_(f"target object {self.target_id!r} not in environment")
        tcell = self.cell_of(target.position)
        if tcell == self.start.cell:
            raise EnvironmentError_("target cannot share the start cell")
        approach = [tcell] if self.is_free(tcell) else []
        approach += [c for c in self.neighbors(tcell) if self.is_free(c)]
        if not approach:
            raise EnvironmentError_("target must touch at least one free cell")

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def is_free(self, cell: tuple[int, int]) -> bool:
        return self.in_bounds(cell) and cell not in self.occupied

    def neighbors(self, cell: tuple[int, int]):
        x, y = cell
        return ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1))

    def cell_of(self, position: tuple[float, float]) -> tuple[int, int]:
        x = min(int(position[0] / self.cell_pitch), self.width - 1)
        y = min(int(position[1] / self.cell_pitch), self.height - 1)
        return (x, y)

    def find_object(self, obj_id: str) -> SceneObject | None:
        return next((o for o in self.objects if o.id == obj_id), None)

    @property
    def target(self) -> SceneObject:
        obj = self.find_object(self.target_id)
        assert obj is not None
        return obj


@dataclass(frozen=True)
class Trajectory:
    poses: tuple[RobotPose, ...]
    commands: tuple[str, ...]  # executed primitives
    step_count: int


@dataclass(frozen=True)
class EpisodeResult:
    success: bool
    steps: int  # primitives plus supervisor penalties
    path_distance: float
    distance_to_target: float
    shortest_path: float
    spl_term: float
    supervisor_calls: int = 0


class CoOccurrenceTable:
    """Symmetric category-affinity lookup in [0, 1]; self-affinity is 1."""

    def __init__(self, pairs: dict[tuple[str, str], float]):
        self._table: dict[tuple[str, str], float] = {}
        for (a, b), score in pairs.items():
            if not 0.0 <= score <= 1.0:
                raise EnvironmentError_(f"affinity for ({a}, {b}) outside [0, 1]")
            key = self._key(a, b)
            self._table[key] = score

    @staticmethod
    def _key(a: str, b: str) -> tuple[str, str]:
        a, b = a.strip().lower(), b.strip().lower()
        return (a, b) if a <= b else (b, a)

    def affinity(self, a: str, b: str) -> float:
        if a.strip().lower() == b.strip().lower():
            return 1.0
        return self._table.get(self._key(a, b), 0.0)

    @classmethod
    def from_file(cls, path: str | Path) -> "CoOccurrenceTable":
        data = json.loads(Path(path).read_text())
        return cls({(a, b): float(score) for a, b, score in data["pairs"]})

    @classmethod
    def default(cls) -> "CoOccurrenceTable":
        return cls.from_file(_DATA_DIR / "cooccurrence.json")


def compile_plan(option: ActionOption) -> list[ActionCommand]:
    """Map plan steps one-to-one onto executable commands."""
    return [_compile_step(step) for step in option.plan]


def _compile_step(step: PlanStep) -> ActionCommand:
    if step.verb == "move_to":
        if not step.arg:
            raise PlanError("move_to requires a landmark argument")
        return ActionCommand(verb="move_forward_to_target", argument=step.arg)
    if step.verb == "turn":
        if step.arg == "left":
            return ActionCommand(verb="turn_left")
        if step.arg == "right":
            return ActionCommand(verb="turn_right")
        raise PlanError(f"turn requires left or right, got {step.arg!r}")
    if step.verb == "forward":
        return ActionCommand(verb="move_forward")
    if step.verb == "explore_here":
        fallback = tuple((s.verb, s.arg) for s in step.fallback)
        return ActionCommand(verb="explore_here", fallback=fallback)
    if step.verb in ("ask_person", "stop"):
        return ActionCommand(verb=step.verb)
    raise PlanError(f"unknown verb {step.verb!r}")


def _bresenham(a: tuple[int, int], b: tuple[int, int]):
    """Integer line between two cells, endpoints included."""
    x0, y0 = a
    x1, y1 = b
    dx, dy = abs(x1 - x0), abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx - dy
    while True:
        yield (x0, y0)
        if (x0, y0) == (x1, y1):
            return
        e2 = 2 * err
        if e2 > -dy:
            err -= dy
            x0 += sx
        if e2 < dx:
            err += dx
            y0 += sy


def line_of_sight(env: Environment, a: tuple[int, int], b: tuple[int, int]) -> bool:
    """True when no interior cell of the discrete line is occupied."""
    cells = list(_bresenham(a, b))
    return all(cell not in env.occupied for cell in cells[1:-1])


def visible_buckets(
    env: Environment, pose: RobotPose, vision_distance: float
) -> dict[str, list[SceneObject]]:
    """Objects within range and a 270 degree field of view, by bearing.

    Bearing is measured clockwise from the heading: left (-135, -45],
    front (-45, 45], right (45, 135]; anything further back is not seen.
    Occluded objects (no discrete line of sight) are excluded.
    """
    buckets: dict[str, list[SceneObject]] = {"left": [], "front": [], "right": []}
    px, py = pose.position(env.cell_pitch)
    for obj in env.objects:
        dx, dy = obj.position[0] - px, obj.position[1] - py
        dist = math.hypot(dx, dy)
        if dist > vision_distance:
            continue
        if not line_of_sight(env, pose.cell, env.cell_of(obj.position)):
            continue
        if dist < 1e-9:
            buckets["front"].append(obj)
            continue
        angle = math.degrees(math.atan2(dy, dx))
        rel = (angle - pose.heading + 180.0) % 360.0 - 180.0
        bearing = -rel  # positive values clockwise of the heading
        if -135.0 < bearing <= -45.0:
            buckets["left"].append(obj)
        elif -45.0 < bearing <= 45.0:
            buckets["front"].append(obj)
        elif 45.0 < bearing <= 135.0:
            buckets["right"].append(obj)
    return buckets


def conjecture_direction(
    buckets: dict[str, list[SceneObject]],
    target_category: str,
    table: CoOccurrenceTable,
    policy: SimPolicy,
) -> str | None:
    """Direction whose objects co-occur most with the target category.

    None when too few objects are visible or no bucket clears the affinity
    threshold; ties prefer front, then left, then right.
    """
    total = sum(len(v) for v in buckets.values())
    if total < policy.min_visible_objects:
        return None
    scores = {
        direction: max((table.affinity(o.category, target_category) for o in objs), default=0.0)
        for direction, objs in buckets.items()
    }
    best_dir = max(("front", "left", "right"), key=lambda d: scores[d])
    if scores[best_dir] < policy.affinity_threshold:
        return None
    return best_dir


def _goal_cells(env: Environment) -> list[tuple[int, int]]:
    tcell = env.cell_of(env.target.position)
    goals = [tcell] if env.is_free(tcell) else []
    goals += [c for c in env.neighbors(tcell) if env.is_free(c)]
    return goals


def _distance_field(env: Environment, goals: list[tuple[int, int]]) -> dict[tuple[int, int], int]:
    """Multi-source BFS over free cells, in cell units."""
    dist = {g: 0 for g in goals}
    frontier = list(goals)
    while frontier:
        nxt = []
        for cell in frontier:
            for nb in env.neighbors(cell):
                if env.is_free(nb) and nb not in dist:
                    dist[nb] = dist[cell] + 1
                    nxt.append(nb)
        frontier = nxt
    return dist


def _relative_direction(heading: int, move: tuple[int, int]) -> str:
    for rel, offset in _REL_TO_HEADING_OFFSET.items():
        if _HEADING_DELTAS[(heading + offset) % 360] == move:
            return rel
    raise AssertionError(f"non-unit move {move}")


def supervisor_hint(env: Environment, pose: RobotPose) -> str:
    """Oracle direction: the first move of a shortest path to the target.

    Stands in for asking a person; raises when the target is unreachable.
    """
    field_ = _distance_field(env, _goal_cells(env))
    if pose.cell not in field_:
        raise EnvironmentError_("target unreachable from the robot position")
    here = field_[pose.cell]
    if here == 0:
        return "front"
    candidates = []
    for nb in env.neighbors(pose.cell):
        if env.is_free(nb) and nb in field_ and field_[nb] < here:
            move = (nb[0] - pose.cell[0], nb[1] - pose.cell[1])
            candidates.append(_relative_direction(pose.heading, move))
    if not candidates:
        raise EnvironmentError_("target unreachable from the robot position")
    return min(candidates, key=_RELATIVE_ORDER.index)


def spl_term(success: bool, path_distance: float, shortest: float) -> float:
    """Per-episode success weighted by path efficiency, in [0, 1]."""
    if shortest <= 0:
        raise ValueError("shortest path length must be positive")
    if not success:
        return 0.0
    return shortest / max(path_distance, shortest)


def shortest_path(env: Environment, frm: tuple[int, int], to: tuple[int, int]) -> float:
    """4-connected BFS distance in meters; infinity when unreachable."""
    if not env.is_free(frm) or not env.is_free(to):
        raise EnvironmentError_("shortest_path endpoints must be free cells")
    field_ = _distance_field(env, [to])
    if frm not in field_:
        return math.inf
    return field_[frm] * env.cell_pitch


class _Executor:
    def __init__(self, env: Environment, policy: SimPolicy, table: CoOccurrenceTable):
        self.env = env
        self.policy = policy
        self.table = table
        self.pose = env.start
        self.poses = [env.start]
        self.executed: list[str] = []
        self.primitives = 0
        self.moves = 0
        self.supervisor_calls = 0
        self.stopped = False
        tcell = env.cell_of(env.target.position)
        self.target_cell = tcell
        goals = [tcell] if env.is_free(tcell) else [c for c in env.neighbors(tcell) if env.is_free(c)]
        self.field = _distance_field(env, goals)
        self.field.setdefault(tcell, 0)

    # -- state queries ------------------------------------------------
    def target_visible(self) -> bool:
        px, py = self.pose.position(self.env.cell_pitch)
        tx, ty = self.env.target.position
        return math.hypot(tx - px, ty - py) <= self.policy.vision_distance

    @property
    def done(self) -> bool:
        return self.stopped or self.target_visible() or self.primitives >= self.policy.step_budget

    def _ahead(self, heading: int | None = None) -> tuple[int, int]:
        h = self.pose.heading if heading is None else heading
        dx, dy = _HEADING_DELTAS[h]
        return (self.pose.cell[0] + dx, self.pose.cell[1] + dy)

    # -- primitives ----------------------------------------------------
    def _turn(self, direction: str):
        delta = 90 if direction == "left" else -90
        self.pose = RobotPose(cell=self.pose.cell, heading=(self.pose.heading + delta) % 360)
        self.poses.append(self.pose)
        self.executed.append(f"turn_{direction}")
        self.primitives += 1

    def _forward(self) -> bool:
        nxt = self._ahead()
        if not self.env.is_free(nxt):
            return False
        self.pose = RobotPose(cell=nxt, heading=self.pose.heading)
        self.poses.append(self.pose)
        self.executed.append("move_forward")
        self.primitives += 1
        self.moves += 1
        return True

    def _turn_toward(self, rel: str):
        if rel == "left":
            self._turn("left")
        elif rel == "right":
            self._turn("right")
        elif rel == "back":
            self._turn("left")
            if not self.done:
                self._turn("left")

    # -- commands -------------------------------------------------------
    def run(self, commands: list[ActionCommand]):
        for command in commands:
            if self.done:
                break
            self._run_command(command)

    def _run_command(self, command: ActionCommand):
        if command.verb == "turn_left":
            self._turn("left")
        elif command.verb == "turn_right":
            self._turn("right")
        elif command.verb == "move_forward":
            self._forward()
        elif command.verb == "move_forward_to_target":
            self._move_to_landmark(command.argument or "")
        elif command.verb == "explore_here":
            self._explore(command)
        elif command.verb == "ask_person":
            self._ask_person()
        elif command.verb == "stop":
            self.stopped = True
        else:
            raise PlanError(f"unknown command verb {command.verb!r}")

    def _nearest_of_category(self, category: str) -> SceneObject | None:
        px, py = self.pose.position(self.env.cell_pitch)
        matches = [
            o for o in self.env.objects if o.category.strip().lower() == category.strip().lower()
        ]
        if not matches:
            return None
        return min(
            matches, key=lambda o: (math.hypot(o.position[0] - px, o.position[1] - py), o.id)
        )

    def _move_to_landmark(self, category: str):
        landmark = self._nearest_of_category(category)
        if landmark is None:
            return
        while not self.done:
            px, py = self.pose.position(self.env.cell_pitch)
            if math.hypot(landmark.position[0] - px, landmark.position[1] - py) <= self.policy.vision_distance:
                return
            if not self._forward():
                return

    def _supervisor(self) -> str:
        self.supervisor_calls += 1
        return supervisor_hint(self.env, self.pose)

    def _explore(self, command: ActionCommand):
        if not self.policy.conjecture_enabled:
            fallback = [
                _compile_step(PlanStep(verb=verb, arg=arg)) for verb, arg in command.fallback
            ]
            self.run(fallback)
            return
        while not self.done:
            buckets = visible_buckets(self.env, self.pose, self.policy.vision_distance)
            direction = conjecture_direction(
                buckets, self.env.target.category, self.table, self.policy
            )
            if direction is not None:
                # refuse a conjecture that walks into a wall
                offset = _REL_TO_HEADING_OFFSET[direction]
                if not self.env.is_free(self._ahead((self.pose.heading + offset) % 360)):
                    direction = None
            if direction is None:
                try:
                    direction = self._supervisor()
                except EnvironmentError_:
                    return
            self._turn_toward(direction)
            if self.done:
                return
            if not self._forward():
                return

    def _ask_person(self):
        try:
            self._supervisor()
        except EnvironmentError_:
            return
        while not self.done:
            if self.pose.cell not in self.field:
                return
            here = self.field[self.pose.cell]
            best = None
            for nb in self.env.neighbors(self.pose.cell):
                if self.env.is_free(nb) and nb in self.field and self.field[nb] < here:
                    rel = _relative_direction(
                        self.pose.heading, (nb[0] - self.pose.cell[0], nb[1] - self.pose.cell[1])
                    )
                    if best is None or _RELATIVE_ORDER.index(rel) < _RELATIVE_ORDER.index(best):
                        best = rel
            if best is None:
                return
            self._turn_toward(best)
            if self.done:
                return
            if not self._forward():
                return

    # -- results ----------------------------------------------------------
    def finish(self) -> tuple[Trajectory, EpisodeResult]:
        success = self.target_visible()
        trajectory = Trajectory(
            poses=tuple(self.poses), commands=tuple(self.executed), step_count=self.primitives
        )
        path_distance = self.moves * self.env.cell_pitch
        px, py = self.pose.position(self.env.cell_pitch)
        tx, ty = self.env.target.position
        distance_to_target = math.hypot(tx - px, ty - py)
        start_cell = self.env.start.cell
        shortest = self.field.get(start_cell, math.inf) * self.env.cell_pitch
        if shortest <= 0 or math.isinf(shortest):
            shortest = self.env.cell_pitch  # start already inside the goal region
        result = EpisodeResult(
            success=success,
            steps=self.primitives + self.supervisor_calls * self.policy.supervisor_step_penalty,
            path_distance=path_distance,
            distance_to_target=distance_to_target,
            shortest_path=shortest,
            spl_term=spl_term(success, path_distance, shortest),
            supervisor_calls=self.supervisor_calls,
        )
        return trajectory, result


def execute(
    commands: list[ActionCommand],
    env: Environment,
    policy: SimPolicy,
    table: CoOccurrenceTable | None = None,
) -> tuple[Trajectory, EpisodeResult]:
    """Run a command list to completion and measure the episode."""
    executor = _Executor(env, policy, table or CoOccurrenceTable.default())
    executor.run(commands)
    return executor.finish()


@dataclass(frozen=True)
class AggregateMetrics:
    count: int
    success_rate: float
    mean_steps: float
    mean_path_distance: float
    mean_distance_to_target: float
    spl: float


def episode_metrics(results: list[EpisodeResult]) -> AggregateMetrics:
    """Success rate, means, and success-weighted path efficiency."""
    if not results:
        raise ValueError("cannot aggregate an empty result list")
    n = len(results)
    return AggregateMetrics(
        count=n,
        success_rate=sum(r.success for r in results) / n,
        mean_steps=sum(r.steps for r in results) / n,
        mean_path_distance=sum(r.path_distance for r in results) / n,
        mean_distance_to_target=sum(r.distance_to_target for r in results) / n,
        spl=sum(r.spl_term for r in results) / n,
    )


# -- trajectory dump format (replay/plotting) --------------------------------

def trajectory_to_dict(trajectory: Trajectory, env: Environment) -> dict:
    return {
        "schema_version": 1,
        "cell_pitch": env.cell_pitch,
        "poses": [
            {"cell": list(p.cell), "heading": p.heading} for p in trajectory.poses
        ],
        "commands": list(trajectory.commands),
        "step_count": trajectory.step_count,
    }


# -- environment file format -------------------------------------------------

def env_to_dict(env: Environment) -> dict:
    return {
        "schema_version": 1,
        "width": env.width,
        "height": env.height,
        "cell_pitch": env.cell_pitch,
        "occupied": sorted([list(c) for c in env.occupied]),
        "objects": [
            {"id": o.id, "category": o.category, "position": list(o.position)}
            for o in env.objects
        ],
        "start": {"cell": list(env.start.cell), "heading": env.start.heading},
        "target": env.target_id,
    }


def env_from_dict(data: dict) -> Environment:
    try:
        return Environment(
            width=int(data["width"]),
            height=int(data["height"]),
            occupied=frozenset(tuple(c) for c in data.get("occupied", [])),
            objects=tuple(
                SceneObject(
                    id=o["id"], category=o["category"], position=tuple(o["position"])
                )
                for o in data.get("objects", [])
            ),
            start=RobotPose(
                cell=tuple(data["start"]["cell"]), heading=int(data["start"]["heading"])
            ),
            target_id=data["target"],
            cell_pitch=float(data.get("cell_pitch", 0.25)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise EnvironmentError_(f"invalid environment description: {exc}") from exc


def load_environment(path: str | Path) -> Environment:
    try:
        return env_from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise EnvironmentError_(f"cannot load environment {path}: {exc}") from exc
