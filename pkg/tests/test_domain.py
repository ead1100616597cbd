from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lmapf.domain import (
    EAST,
    NORTH,
    SOUTH,
    WEST,
    Action,
    ActionModel,
    AgentState,
    GridMap,
    IllegalForward,
    Instance,
    apply_action,
    check_joint_step,
    successors,
    turn_toward,
)

from .conftest import grid_from, open_grid


class TestApplyAction:
    def test_rotate_cw_east_to_south(self, grid3):
        s = AgentState(grid3.cell_id(0, 0), EAST)
        assert apply_action(grid3, s, Action.ROTATE_CW) == AgentState(0, SOUTH)

    def test_wait_is_identity(self, grid3):
        s = AgentState(grid3.cell_id(0, 0), EAST)
        assert apply_action(grid3, s, Action.WAIT) == s

    def test_forward_east_increases_column(self, row3):
        s = AgentState(row3.cell_id(0, 0), EAST)
        assert apply_action(row3, s, Action.FORWARD) == AgentState(row3.cell_id(0, 1), EAST)

    def test_forward_off_the_map_is_illegal(self, row3):
        s = AgentState(row3.cell_id(0, 2), EAST)
        with pytest.raises(IllegalForward):
            apply_action(row3, s, Action.FORWARD)

    def test_forward_into_obstacle_is_illegal(self):
        grid = grid_from(".@.")
        with pytest.raises(IllegalForward):
            apply_action(grid, AgentState(0, EAST), Action.FORWARD)

    def test_fourway_moves(self):
        grid = open_grid(2, 2)
        s = AgentState(0, EAST)
        assert apply_action(grid, s, Action.MOVE_S).location == grid.cell_id(1, 0)
        assert apply_action(grid, s, Action.MOVE_S).orientation == EAST
        with pytest.raises(IllegalForward):
            apply_action(grid, s, Action.MOVE_N)


class TestCheckJointStep:
    def test_vertex_conflict_same_target(self, row3):
        before = [AgentState(0), AgentState(2)]
        after = [AgentState(1), AgentState(1)]
        conflicts = check_joint_step(before, after, step=4)
        assert len(conflicts) == 1
        c = conflicts[0]
        assert (c.kind, c.agents, c.step, c.where) == ("vertex", (0, 1), 4, 1)

    def test_swap_conflict(self, row3):
        before = [AgentState(0), AgentState(1)]
        after = [AgentState(1), AgentState(0)]
        conflicts = check_joint_step(before, after)
        assert len(conflicts) == 1
        c = conflicts[0]
        assert c.kind == "swap"
        assert c.agents == (0, 1)
        assert c.where == (0, 1)

    def test_following_is_allowed(self, row3):
        before = [AgentState(0), AgentState(1)]
        after = [AgentState(1), AgentState(2)]
        assert check_joint_step(before, after) == []

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_permutation_symmetry(self, data):
        grid = open_grid(3, 3)
        n = data.draw(st.integers(2, 6))
        before_cells = data.draw(
            st.lists(st.integers(0, 8), min_size=n, max_size=n, unique=True))
        after_cells = []
        for v in before_cells:
            options = [v] + [u for u, _ in grid.adjacency[v]]
            after_cells.append(data.draw(st.sampled_from(options)))
        before = [AgentState(v) for v in before_cells]
        after = [AgentState(v) for v in after_cells]
        base = check_joint_step(before, after)
        perm = data.draw(st.permutations(list(range(n))))
        permuted = check_joint_step([before[p] for p in perm], [after[p] for p in perm])
        # Same multiset of conflicts once agent ids are mapped back.
        inv = {new: old for new, old in enumerate(perm)}

        def canon(conflicts, mapping):
            out = set()
            for c in conflicts:
                a, b = (mapping[x] for x in c.agents)
                agents = (min(a, b), max(a, b))
                where = c.where
                if c.kind == "swap" and mapping[c.agents[0]] > mapping[c.agents[1]]:
                    where = (where[1], where[0])
                out.add((c.kind, agents, where))
            return out

        assert canon(base, {i: i for i in range(n)}) == canon(permuted, inv)


class TestTurnToward:
    def test_one_clockwise(self):
        assert turn_toward(EAST, SOUTH) == [Action.ROTATE_CW]

    def test_identity(self):
        assert turn_toward(EAST, EAST) == []

    def test_half_turn_is_two_cw(self):
        assert turn_toward(EAST, WEST) == [Action.ROTATE_CW, Action.ROTATE_CW]

    def test_counterclockwise(self):
        assert turn_toward(EAST, NORTH) == [Action.ROTATE_CCW]


@given(st.integers(0, 8), st.integers(0, 3))
def test_rotation_closure(cell, ori):
    grid = open_grid(3, 3)
    s = AgentState(cell, ori)
    for _ in range(4):
        s = apply_action(grid, s, Action.ROTATE_CW)
    assert s == AgentState(cell, ori)


@given(st.integers(0, 3))
@settings(max_examples=20)
def test_legal_actions_produce_valid_states(ori):
    grid = grid_from("..@", "...", ".@.")
    for v in grid.free_ids:
        s = AgentState(v, ori)
        for model in ActionModel:
            for nxt, _ in successors(grid, s, model):
                assert grid.is_free(nxt.location)


def test_successor_sets_by_model():
    grid = grid_from("...", ".@.", "...")
    v = grid.cell_id(0, 1)
    s = AgentState(v, SOUTH)  # facing the obstacle
    rot = {(n.location, n.orientation) for n, _ in successors(grid, s, ActionModel.ROTATION)}
    assert rot == {(v, SOUTH), (v, WEST), (v, EAST)}  # forward blocked
    four = {n.location for n, _ in successors(grid, s, ActionModel.FOUR_WAY)}
    assert four == {v, grid.cell_id(0, 0), grid.cell_id(0, 2)}


class TestInstance:
    def test_rejects_duplicate_starts(self, grid3):
        with pytest.raises(ValueError):
            Instance(grid3, (AgentState(0), AgentState(0)))

    def test_rejects_obstacle_start(self):
        grid = grid_from(".@")
        with pytest.raises(ValueError):
            Instance(grid, (AgentState(1),))

    def test_density(self, grid3):
        inst = Instance(grid3, (AgentState(0), AgentState(1), AgentState(2)))
        assert inst.density == 3 / 9


class TestGridMap:
    def test_row_major_ids(self):
        grid = open_grid(4, 5)
        assert grid.cell_id(2, 3) == 13
        assert grid.coords(13) == (2, 3)

    def test_deadends(self):
        corridor = grid_from("....")
        assert corridor.deadends == {0, 3}
        stub = grid_from("...", "@.@", "@.@")
        assert stub.deadends == {0, 2, stub.cell_id(2, 1)}

    def test_from_rows_round_trip(self):
        rows = ["..@", ".T.", "..."]
        grid = GridMap.from_rows(rows)
        assert grid.rows() == ["..@", ".@.", "..."]
        assert grid.free_count == 7

    def test_rejects_all_obstacles(self):
        with pytest.raises(ValueError):
            GridMap(np.zeros((2, 2), dtype=bool))
