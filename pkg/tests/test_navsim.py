"""Simulator: geometry, conjecture, oracle hints, paths, execution, metrics.

The shortest-path oracle here is iterative-deepening path enumeration,
deliberately not BFS, so the production BFS is checked by an independent
algorithm.
"""

import math
import random

import pytest

from vocalnav.config import SimPolicy
from vocalnav.errors import EnvironmentError_, PlanError
from vocalnav.navsim import (
    ActionCommand,
    AggregateMetrics,
    CoOccurrenceTable,
    Environment,
    EpisodeResult,
    RobotPose,
    SceneObject,
    compile_plan,
    conjecture_direction,
    env_from_dict,
    env_to_dict,
    episode_metrics,
    execute,
    shortest_path,
    spl_term,
    supervisor_hint,
    visible_buckets,
)
from vocalnav.prompting import ActionOption, PlanStep


def open_room(width=10, height=10, objects=(), start=(1, 1), heading=0, target="t", extra_walls=()):
    walls = {(x, y) for x in range(width) for y in (0, height - 1)}
    walls |= {(x, y) for y in range(height) for x in (0, width - 1)}
    walls |= set(extra_walls)
    return Environment(
        width=width,
        height=height,
        occupied=frozenset(walls),
        objects=tuple(objects),
        start=RobotPose(cell=start, heading=heading),
        target_id=target,
    )


def obj(oid, category, cell, pitch=0.25):
    return SceneObject(id=oid, category=category, position=((cell[0] + 0.5) * pitch, (cell[1] + 0.5) * pitch))


def enumerate_shortest(env: Environment, frm, to) -> float:
    """Iterative-deepening DFS over simple paths; independent of BFS."""
    if frm == to:
        return 0.0
    max_depth = env.width * env.height
    for depth in range(1, max_depth + 1):
        found = [False]

        def dfs(cell, remaining, visited):
            if found[0]:
                return
            if remaining == 0:
                if cell == to:
                    found[0] = True
                return
            for nb in env.neighbors(cell):
                if env.is_free(nb) and nb not in visited:
                    dfs(nb, remaining - 1, visited | {nb})

        dfs(frm, depth, frozenset({frm}))
        if found[0]:
            return depth * env.cell_pitch
    return math.inf


class TestCompile:
    def test_three_step_plan(self):
        option = ActionOption(
            label="A",
            text="x",
            plan=(
                PlanStep("move_to", "drawer"),
                PlanStep("turn", "left"),
                PlanStep("move_to", "garbage can"),
            ),
        )
        commands = compile_plan(option)
        assert [c.render() for c in commands] == [
            "move_forward_to_target(drawer)",
            "turn_left",
            "move_forward_to_target(garbage can)",
        ]
        assert len(commands) == len(option.plan)

    def test_explore_single(self):
        option = ActionOption(label="C", text="x", plan=(PlanStep("explore_here"),))
        assert [c.verb for c in compile_plan(option)] == ["explore_here"]

    def test_unknown_verb_rejected(self):
        option = ActionOption(label="A", text="x", plan=(PlanStep("fly_up"),))
        with pytest.raises(PlanError, match="unknown verb"):
            compile_plan(option)

    def test_move_to_needs_argument(self):
        option = ActionOption(label="A", text="x", plan=(PlanStep("move_to"),))
        with pytest.raises(PlanError, match="landmark"):
            compile_plan(option)


class TestVisibleBuckets:
    def test_empty_when_out_of_range(self):
        env = open_room(objects=(obj("t", "vase", (8, 8)),), target="t")
        buckets = visible_buckets(env, RobotPose(cell=(1, 1), heading=0), 1.0)
        assert all(not v for v in buckets.values())

    def test_right_bucket_geometry(self):
        # heading +x; object 1.0 m at bearing +90 (clockwise) is to the right (-y)
        env = open_room(
            width=12,
            height=12,
            objects=(obj("tv", "television", (5, 1)), obj("t", "vase", (9, 9))),
            start=(5, 5),
        )
        buckets = visible_buckets(env, RobotPose(cell=(5, 5), heading=0), 1.5)
        assert [o.id for o in buckets["right"]] == ["tv"]

    def test_occlusion_excludes(self):
        env = open_room(
            width=12,
            height=12,
            objects=(obj("tv", "television", (5, 2)), obj("t", "vase", (9, 9))),
            start=(5, 5),
            extra_walls=[(5, 3), (4, 3), (6, 3)],
        )
        buckets = visible_buckets(env, RobotPose(cell=(5, 5), heading=0), 2.0)
        assert all("tv" not in [o.id for o in v] for v in buckets.values())

    def test_partition_no_duplicates(self):
        objects = [obj(f"o{i}", "chair", (3 + i % 3, 3 + i // 3)) for i in range(6)]
        objects.append(obj("t", "vase", (8, 8)))
        env = open_room(width=12, height=12, objects=tuple(objects), start=(4, 4))
        for heading in (0, 90, 180, 270):
            buckets = visible_buckets(env, RobotPose(cell=(4, 4), heading=heading), 3.0)
            seen = [o.id for v in buckets.values() for o in v]
            assert len(seen) == len(set(seen))


class TestConjecture:
    def setup_method(self):
        self.table = CoOccurrenceTable.default()
        self.policy = SimPolicy()

    def test_fig_style_television_case(self):
        buckets = {
            "left": [],
            "front": [obj("d", "drawer", (5, 5))],
            "right": [obj("tv", "television", (6, 4))],
        }
        assert conjecture_direction(buckets, "remote control", self.table, self.policy) == "right"

    def test_empty_buckets_none(self):
        buckets = {"left": [], "front": [], "right": []}
        assert conjecture_direction(buckets, "remote control", self.table, self.policy) is None

    def test_tie_prefers_front(self):
        buckets = {
            "left": [],
            "front": [obj("tv1", "television", (5, 5))],
            "right": [obj("tv2", "television", (6, 4))],
        }
        assert conjecture_direction(buckets, "remote control", self.table, self.policy) == "front"

    def test_below_threshold_none(self):
        buckets = {
            "left": [obj("p", "painting", (5, 5)), obj("q", "rug", (5, 6))],
            "front": [],
            "right": [],
        }
        assert conjecture_direction(buckets, "remote control", self.table, self.policy) is None

    def test_too_few_objects_none(self):
        buckets = {"left": [], "front": [], "right": [obj("tv", "television", (6, 4))]}
        assert conjecture_direction(buckets, "remote control", self.table, self.policy) is None


class TestSupervisorHint:
    def test_straight_ahead(self):
        env = open_room(objects=(obj("t", "vase", (4, 1)),), start=(1, 1), heading=0)
        assert supervisor_hint(env, RobotPose(cell=(1, 1), heading=0)) == "front"

    def test_detour_requires_turn(self):
        # wall forces going up first: target behind a wall segment to the east
        env = open_room(
            width=8,
            height=8,
            objects=(obj("t", "vase", (5, 1)),),
            start=(1, 1),
            extra_walls=[(3, 1), (3, 2), (3, 3)],
        )
        hint = supervisor_hint(env, RobotPose(cell=(2, 1), heading=0))
        assert hint == "left"  # +y detour around the wall

    def test_unreachable_raises(self):
        env = open_room(
            width=8,
            height=8,
            objects=(obj("t", "vase", (5, 5)),),
            start=(1, 1),
            extra_walls=[(4, y) for y in range(8)] + [(x, 4) for x in range(4, 8)],
        )
        with pytest.raises(EnvironmentError_, match="unreachable"):
            supervisor_hint(env, RobotPose(cell=(1, 1), heading=0))


class TestShortestPath:
    def test_adjacent(self):
        env = open_room(objects=(obj("t", "vase", (8, 8)),))
        assert shortest_path(env, (1, 1), (2, 1)) == pytest.approx(0.25)

    def test_corridor(self):
        env = open_room(width=13, height=4, objects=(obj("t", "vase", (11, 2)),), start=(1, 1))
        assert shortest_path(env, (1, 1), (11, 1)) == pytest.approx(2.5)

    def test_l_shaped_detour_matches_enumeration(self):
        env = open_room(
            width=8,
            height=8,
            objects=(obj("t", "vase", (6, 6)),),
            start=(1, 1),
            extra_walls=[(3, y) for y in range(1, 5)],
        )
        assert shortest_path(env, (1, 1), (6, 1)) == pytest.approx(
            enumerate_shortest(env, (1, 1), (6, 1))
        )

    def test_occupied_endpoint_rejected(self):
        env = open_room(objects=(obj("t", "vase", (8, 8)),))
        with pytest.raises(EnvironmentError_):
            shortest_path(env, (0, 0), (5, 5))

    def test_random_grids_match_enumeration(self):
        rng = random.Random(1234)
        checked = 0
        while checked < 40:
            w, h = rng.randint(3, 6), rng.randint(3, 6)
            cells = [(x, y) for x in range(w) for y in range(h)]
            walls = {c for c in cells if rng.random() < 0.25}
            frees = [c for c in cells if c not in walls]
            if len(frees) < 2:
                continue
            frm, to = rng.sample(frees, 2)
            # environments require a valid target setup; probe the raw grid
            env = Environment.__new__(Environment)
            object.__setattr__(env, "width", w)
            object.__setattr__(env, "height", h)
            object.__setattr__(env, "occupied", frozenset(walls))
            object.__setattr__(env, "objects", ())
            object.__setattr__(env, "start", RobotPose(cell=frm, heading=0))
            object.__setattr__(env, "target_id", "t")
            object.__setattr__(env, "cell_pitch", 0.25)
            expected = enumerate_shortest(env, frm, to)
            got = shortest_path(env, frm, to)
            if math.isinf(expected):
                assert math.isinf(got)
            else:
                assert got == pytest.approx(expected)
            checked += 1

    def test_triangle_inequality_sampled(self):
        env = open_room(width=8, height=8, objects=(obj("t", "vase", (6, 6)),))
        rng = random.Random(7)
        frees = [(x, y) for x in range(1, 7) for y in range(1, 7)]
        for _ in range(40):
            a, b, c = rng.sample(frees, 3)
            ab = shortest_path(env, a, b)
            bc = shortest_path(env, b, c)
            ac = shortest_path(env, a, c)
            assert ac <= ab + bc + 1e-12


class TestExecute:
    def test_target_adjacent_success_without_moving(self):
        env = open_room(objects=(obj("t", "vase", (2, 1)),), start=(1, 1))
        option = ActionOption(label="A", text="x", plan=(PlanStep("move_to", "vase"),))
        trajectory, result = execute(compile_plan(option), env, SimPolicy())
        assert result.success
        assert trajectory.step_count == 0
        assert result.distance_to_target <= 1.5

    def test_collision_halts_motion(self):
        env = open_room(
            width=8, height=8, objects=(obj("t", "vase", (6, 6)),), start=(1, 1),
            extra_walls=[(3, 1)],
        )
        commands = [ActionCommand(verb="move_forward")] * 5
        trajectory, result = execute(commands, env, SimPolicy())
        assert trajectory.poses[-1].cell == (2, 1)

    def test_budget_exhaustion_fails(self):
        env = open_room(width=30, height=6, objects=(obj("t", "vase", (28, 4)),), start=(1, 1))
        policy = SimPolicy(step_budget=5)
        option = ActionOption(label="C", text="x", plan=(PlanStep("explore_here"),))
        _, result = execute(compile_plan(option), env, policy)
        assert not result.success
        assert result.spl_term == 0.0

    def test_path_distance_matches_pose_displacements(self):
        env = open_room(width=12, height=12, objects=(obj("t", "vase", (9, 9)),), start=(1, 1))
        option = ActionOption(label="E", text="x", plan=(PlanStep("ask_person"),))
        trajectory, result = execute(compile_plan(option), env, SimPolicy())
        total = 0.0
        for p1, p2 in zip(trajectory.poses[:-1], trajectory.poses[1:]):
            a, b = p1.position(env.cell_pitch), p2.position(env.cell_pitch)
            total += math.hypot(b[0] - a[0], b[1] - a[1])
        assert result.path_distance == pytest.approx(total, abs=1e-9)

    def test_determinism(self):
        env = open_room(width=12, height=12, objects=(obj("t", "vase", (9, 9)),), start=(1, 1))
        option = ActionOption(label="C", text="x", plan=(PlanStep("explore_here"),))
        r1 = execute(compile_plan(option), env, SimPolicy())
        r2 = execute(compile_plan(option), env, SimPolicy())
        assert r1 == r2

    def test_stop_ends_episode(self):
        env = open_room(width=12, height=12, objects=(obj("t", "vase", (9, 9)),), start=(1, 1))
        commands = [
            ActionCommand(verb="stop"),
            ActionCommand(verb="move_forward"),
        ]
        trajectory, result = execute(commands, env, SimPolicy())
        assert trajectory.step_count == 0
        assert not result.success

    def test_conjecture_beats_wrong_instruction(self):
        # television on the right, remote control beyond it; instruction says left
        env = open_room(
            width=20,
            height=20,
            objects=(
                obj("tv", "television", (10, 6)),
                obj("lm", "drawer", (14, 10)),
                obj("t", "remote control", (10, 4)),
            ),
            start=(2, 10),
        )
        plan_literal = (
            PlanStep("move_to", "drawer"),
            PlanStep("turn", "left"),
            PlanStep("move_to", "remote control"),
        )
        option_a = ActionOption(label="A", text="x", plan=plan_literal)
        _, literal_result = execute(compile_plan(option_a), env, SimPolicy())
        assert not literal_result.success

        option_b = ActionOption(
            label="B",
            text="x",
            plan=(
                PlanStep("move_to", "drawer"),
                PlanStep("explore_here", fallback=plan_literal[1:]),
            ),
        )
        _, explored_result = execute(compile_plan(option_b), env, SimPolicy())
        assert explored_result.success
        assert explored_result.distance_to_target <= 1.5

        blind = SimPolicy(conjecture_enabled=False)
        _, blind_result = execute(compile_plan(option_b), env, blind)
        assert not blind_result.success


def result_of(success, path, shortest):
    return EpisodeResult(
        success=success,
        steps=10,
        path_distance=path,
        distance_to_target=0.0 if success else 3.0,
        shortest_path=shortest,
        spl_term=spl_term(success, path, shortest),
    )


class TestMetrics:
    def test_optimal_path_spl_one(self):
        metrics = episode_metrics([result_of(True, 2.0, 2.0)])
        assert metrics.spl == pytest.approx(1.0, abs=1e-9)
        assert metrics.success_rate == 1.0

    def test_double_length_spl_half(self):
        metrics = episode_metrics([result_of(True, 4.0, 2.0)])
        assert metrics.spl == pytest.approx(0.5, abs=1e-9)

    def test_mixed_success_failure(self):
        metrics = episode_metrics([result_of(True, 2.0, 2.0), result_of(False, 1.0, 2.0)])
        assert metrics.spl == pytest.approx(0.5, abs=1e-9)
        assert metrics.success_rate == pytest.approx(0.5)

    def test_spl_never_exceeds_sr(self):
        rng = random.Random(3)
        results = [
            result_of(rng.random() < 0.5, rng.uniform(0.5, 8.0), rng.uniform(0.5, 8.0))
            for _ in range(50)
        ]
        metrics = episode_metrics(results)
        assert 0.0 <= metrics.spl <= metrics.success_rate <= 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            episode_metrics([])


class TestEnvironmentIO:
    def test_roundtrip(self):
        env = open_room(width=8, height=8, objects=(obj("t", "vase", (5, 5)),), start=(1, 1))
        data = env_to_dict(env)
        back = env_from_dict(data)
        assert back == env

    def test_invalid_rejected(self):
        with pytest.raises(EnvironmentError_):
            env_from_dict({"width": 4})

    def test_start_on_wall_rejected(self):
        with pytest.raises(EnvironmentError_, match="start"):
            open_room(start=(0, 0), objects=(obj("t", "vase", (5, 5)),))

    def test_missing_target_rejected(self):
        with pytest.raises(EnvironmentError_, match="target"):
            open_room(objects=(obj("x", "vase", (5, 5)),), target="nope")
