"""Grid world model: map, agent states, actions, transitions and collision rules.

Everything downstream (planners, simulator, metrics) is built on the types in
this module. Vertex ids are row-major cell indices; coordinates are (row, col)
with East = +col and South = +row.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np

# Orientations in clockwise order: East -> South -> West -> North -> East.
EAST, SOUTH, WEST, NORTH = 0, 1, 2, 3
ORIENTATION_NAMES = "ESWN"
ORIENTATION_IDS = {"E": EAST, "S": SOUTH, "W": WEST, "N": NORTH}
# (drow, dcol) per orientation.
DELTAS = ((0, 1), (1, 0), (0, -1), (-1, 0))


class Action(IntEnum):
    """One-step actions.

    The rotation model uses FORWARD / ROTATE_CW / ROTATE_CCW / WAIT. The
    four-way model uses MOVE_E..MOVE_N / WAIT (orientation stays a dummy
    value, so the two models share one state type).
    """

    FORWARD = 0
    ROTATE_CW = 1
    ROTATE_CCW = 2
    WAIT = 3
    MOVE_E = 4
    MOVE_S = 5
    MOVE_W = 6
    MOVE_N = 7

    @property
    def move_direction(self) -> int:
        """Direction of a four-way move action."""
        if not Action.MOVE_E <= self <= Action.MOVE_N:
            raise ValueError(f"{self.name} is not a four-way move")
        return int(self) - int(Action.MOVE_E)


class ActionModel(Enum):
    ROTATION = "rotation"
    FOUR_WAY = "fourway"


class IllegalForward(Exception):
    """Forward into an obstacle or out of bounds."""


class ParseError(Exception):
    """Malformed input file; message carries the file location."""


def rotate_cw(o: int) -> int:
    return (o + 1) % 4


def rotate_ccw(o: int) -> int:
    return (o - 1) % 4


def opposite(o: int) -> int:
    return (o + 2) % 4


class GridMap:
    """A 4-neighbor grid of Free and Obstacle cells.

    Cells are addressed either as (row, col) or by row-major id r * width + c.
    Obstacle cells keep their ids so indexing stays dense; validity is carried
    by the free mask. Precomputed adjacency:

    - ``ahead[v * 4 + d]``: cell reached by leaving free cell v in direction d,
      or -1 when that is an obstacle or out of bounds.
    - ``adjacency[v]``: tuple of (neighbor id, direction) pairs for free v.
    """

    def __init__(self, free: np.ndarray):
        free = np.asarray(free, dtype=bool)
        if free.ndim != 2 or free.shape[0] < 1 or free.shape[1] < 1:
            raise ValueError("map must be a 2-D grid with positive dimensions")
        if not free.any():
            raise ValueError("map has no free cell")
        self.height, self.width = free.shape
        self.free = free
        self.n_cells = self.height * self.width
        self.free_flat: list[bool] = free.ravel().tolist()
        self.free_count = int(free.sum())
        self.free_ids: list[int] = np.flatnonzero(free.ravel()).tolist()

        ahead = [-1] * (self.n_cells * 4)
        adjacency: list[tuple[tuple[int, int], ...]] = [()] * self.n_cells
        for v in self.free_ids:
            r, c = divmod(v, self.width)
            pairs = []
            for d, (dr, dc) in enumerate(DELTAS):
                nr, nc = r + dr, c + dc
                if 0 <= nr < self.height and 0 <= nc < self.width and free[nr, nc]:
                    u = nr * self.width + nc
                    ahead[v * 4 + d] = u
                    pairs.append((u, d))
            adjacency[v] = tuple(pairs)
        self.ahead = ahead
        self.adjacency = adjacency
        self.deadends: frozenset[int] = frozenset(
            v for v in self.free_ids if len(adjacency[v]) == 1
        )

    @classmethod
    def from_rows(cls, rows: list[str]) -> "GridMap":
        """Build from strings of '.' (free) and '@'/'T' (obstacle)."""
        if not rows:
            raise ValueError("empty map")
        width = len(rows[0])
        grid = np.zeros((len(rows), width), dtype=bool)
        for r, row in enumerate(rows):
            if len(row) != width:
                raise ValueError(f"row {r} has length {len(row)}, expected {width}")
            for c, ch in enumerate(row):
                if ch == ".":
                    grid[r, c] = True
                elif ch not in "@T":
                    raise ValueError(f"unknown map character {ch!r} at ({r}, {c})")
        return cls(grid)

    def rows(self) -> list[str]:
        return [
            "".join("." if self.free[r, c] else "@" for c in range(self.width))
            for r in range(self.height)
        ]

    def cell_id(self, r: int, c: int) -> int:
        if not (0 <= r < self.height and 0 <= c < self.width):
            raise ValueError(f"({r}, {c}) out of bounds")
        return r * self.width + c

    def coords(self, v: int) -> tuple[int, int]:
        return divmod(v, self.width)

    def is_free(self, v: int) -> bool:
        return 0 <= v < self.n_cells and self.free_flat[v]

    def direction_between(self, v: int, u: int) -> int:
        """Direction d with ahead(v, d) == u; raises for non-adjacent cells."""
        for w, d in self.adjacency[v]:
            if w == u:
                return d
        raise ValueError(f"cells {v} and {u} are not adjacent free cells")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GridMap) and np.array_equal(self.free, other.free)

    def __hash__(self):
        return hash((self.height, self.width, self.free.tobytes()))

    def __repr__(self):
        return f"GridMap({self.height}x{self.width}, {self.free_count} free)"


@dataclass(frozen=True)
class AgentState:
    """Location (cell id) plus orientation. Four-way agents carry EAST as a dummy."""

    location: int
    orientation: int = EAST


@dataclass(frozen=True)
class Conflict:
    """A vertex or swap collision between two agents at one step."""

    kind: str  # "vertex" | "swap"
    agents: tuple[int, int]
    step: int
    where: int | tuple[int, int]


@dataclass(frozen=True)
class Instance:
    """A map plus starting agent states and the action model."""

    grid: GridMap
    agents: tuple[AgentState, ...]
    action_model: ActionModel = ActionModel.ROTATION

    def __post_init__(self):
        locs = [a.location for a in self.agents]
        if len(set(locs)) != len(locs):
            raise ValueError("agent start locations must be distinct")
        for a in self.agents:
            if not self.grid.is_free(a.location):
                raise ValueError(f"start cell {a.location} is not free")

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def density(self) -> float:
        return self.n / self.grid.free_count


def apply_action(grid: GridMap, s: AgentState, a: Action) -> AgentState:
    """One-step transition semantics for both action models."""
    if a == Action.WAIT:
        return s
    if a == Action.ROTATE_CW:
        return AgentState(s.location, rotate_cw(s.orientation))
    if a == Action.ROTATE_CCW:
        return AgentState(s.location, rotate_ccw(s.orientation))
    if a == Action.FORWARD:
        u = grid.ahead[s.location * 4 + s.orientation]
        if u < 0:
            r, c = grid.coords(s.location)
            raise IllegalForward(
                f"forward from ({r}, {c}) facing {ORIENTATION_NAMES[s.orientation]} is blocked"
            )
        return AgentState(u, s.orientation)
    # Four-way move: orientation is untouched.
    d = a.move_direction
    u = grid.ahead[s.location * 4 + d]
    if u < 0:
        r, c = grid.coords(s.location)
        raise IllegalForward(f"move {ORIENTATION_NAMES[d]} from ({r}, {c}) is blocked")
    return AgentState(u, s.orientation)


def check_joint_step(
    before: list[AgentState], after: list[AgentState], step: int = 0
) -> list[Conflict]:
    """All vertex and swap conflicts of one joint step.

    Vertex: two agents share an after-location. Swap: a pair exchanges
    distinct locations. Moving into a cell vacated this step is legal.
    """
    if len(before) != len(after):
        raise ValueError("before/after lengths differ")
    return check_joint_locations(
        [s.location for s in before], [s.location for s in after], step
    )


def check_joint_locations(
    before: list[int], after: list[int], step: int = 0
) -> list[Conflict]:
    """check_joint_step on bare location lists (hot path for the simulator)."""
    conflicts: list[Conflict] = []
    groups: dict[int, list[int]] = {}
    for i, v in enumerate(after):
        group = groups.get(v)
        if group is None:
            groups[v] = [i]
        else:
            # All pairs, so the report is symmetric under agent permutation.
            for j in group:
                conflicts.append(Conflict("vertex", (j, i), step, v))
            group.append(i)
    moved_from: dict[int, int] = {}
    for i, (u, v) in enumerate(zip(before, after)):
        if u != v:
            moved_from[u] = i
    for i, (u, v) in enumerate(zip(before, after)):
        if u == v:
            continue
        j = moved_from.get(v)
        if j is not None and j != i and after[j] == u and j < i:
            # where = the edge as traversed by the lower-indexed agent j: v -> u.
            conflicts.append(Conflict("swap", (j, i), step, (v, u)))
    return conflicts


def turn_toward(o: int, target_dir: int) -> list[Action]:
    """Shortest rotation sequence from o to target_dir.

    The 180-degree tie is broken as two clockwise rotations so tests and
    replans are direction-stable.
    """
    diff = (target_dir - o) % 4
    if diff == 0:
        return []
    if diff == 1:
        return [Action.ROTATE_CW]
    if diff == 3:
        return [Action.ROTATE_CCW]
    return [Action.ROTATE_CW, Action.ROTATE_CW]


def successors(
    grid: GridMap, s: AgentState, model: ActionModel
) -> list[tuple[AgentState, Action]]:
    """All legal (next state, action) pairs for one agent."""
    if model == ActionModel.ROTATION:
        out = [
            (s, Action.WAIT),
            (AgentState(s.location, rotate_cw(s.orientation)), Action.ROTATE_CW),
            (AgentState(s.location, rotate_ccw(s.orientation)), Action.ROTATE_CCW),
        ]
        u = grid.ahead[s.location * 4 + s.orientation]
        if u >= 0:
            out.insert(0, (AgentState(u, s.orientation), Action.FORWARD))
        return out
    out = [(s, Action.WAIT)]
    for u, d in grid.adjacency[s.location]:
        out.append((AgentState(u, s.orientation), Action(int(Action.MOVE_E) + d)))
    return out
