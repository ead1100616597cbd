"""Anytime refinement of a windowed plan by large-neighborhood search.

Each iteration removes a small group of agents from the plan, replans them
one by one with space-time A* against a reservation table holding everyone
else's paths, and keeps the result only if it strictly lowers the
approximated sum-of-costs: the guidance-weighted cost inside the window plus
the distance-table estimate from the window-end state to the goal. An agent
stops accruing cost the first time it touches its goal; the steps after that
are conflict-free filler of cost zero.
"""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np

from .domain import ActionModel, GridMap, opposite
from .guidance import GuidanceGraph
from .heuristic import DistanceTables

INF = math.inf


class WindowedPlan:
    """Per-agent state sequences of length w + 1 plus cached cost components."""

    __slots__ = ("w", "locs", "oris", "cost")

    def __init__(self, w: int, locs: list[list[int]], oris: list[list[int]],
                 cost: list[float]):
        self.w = w
        self.locs = locs
        self.oris = oris
        self.cost = cost

    @property
    def objective(self) -> float:
        return float(sum(self.cost))

    @property
    def n(self) -> int:
        return len(self.locs)

    def copy(self) -> "WindowedPlan":
        return WindowedPlan(
            self.w,
            [list(p) for p in self.locs],
            [list(p) for p in self.oris],
            list(self.cost),
        )

    def validate(self, grid: GridMap, model: ActionModel) -> None:
        """Raise if any path step is illegal or any joint step collides."""
        from .domain import check_joint_locations

        for i, (lp, op) in enumerate(zip(self.locs, self.oris)):
            if len(lp) != self.w + 1 or len(op) != self.w + 1:
                raise ValueError(f"agent {i}: path length != w + 1")
            for t in range(1, self.w + 1):
                if not _legal_transition(grid, model, lp[t - 1], op[t - 1], lp[t], op[t]):
                    raise ValueError(f"agent {i}: illegal transition at step {t}")
        for t in range(1, self.w + 1):
            before = [p[t - 1] for p in self.locs]
            after = [p[t] for p in self.locs]
            conflicts = check_joint_locations(before, after, t)
            if conflicts:
                raise ValueError(f"joint step {t} has conflicts: {conflicts[:3]}")


def _legal_transition(grid: GridMap, model: ActionModel,
                      loc0: int, ori0: int, loc1: int, ori1: int) -> bool:
    if model == ActionModel.ROTATION:
        if loc0 == loc1:
            return ori1 == ori0 or (ori1 - ori0) % 4 in (1, 3)
        return ori1 == ori0 and grid.ahead[loc0 * 4 + ori0] == loc1
    if ori1 != ori0:
        return False
    return loc0 == loc1 or any(u == loc1 for u, _ in grid.adjacency[loc0])


def _direction_of(prev: int, cur: int, width: int) -> int:
    delta = cur - prev
    if delta == 1:
        return 0  # East
    if delta == width:
        return 1  # South
    if delta == -1:
        return 2  # West
    return 3  # North


def path_cost(
    guidance: GuidanceGraph,
    table,
    goal: int,
    locs: list[int],
    oris: list[int],
    w: int,
) -> float:
    """One agent's objective component under the stop-at-first-arrival rule."""
    if locs[0] == goal:
        return 0.0
    move_w, wait_w = guidance.move_w, guidance.wait_w
    width = guidance.grid.width
    c = 0.0
    for t in range(1, w + 1):
        prev, cur = locs[t - 1], locs[t]
        if cur != prev:
            c += move_w[prev * 4 + _direction_of(prev, cur, width)]
        else:
            c += wait_w[prev]
        if cur == goal:
            return c
    return c + table.lookup(locs[w], oris[w])


def eval_objective(
    plan: WindowedPlan,
    goals: list[int],
    guidance: GuidanceGraph,
    tables: DistanceTables,
) -> float:
    """Recompute the approximated sum-of-costs from scratch."""
    total = 0.0
    for i, g in enumerate(goals):
        total += path_cost(guidance, tables.get(g), g, plan.locs[i], plan.oris[i], plan.w)
    return total


def refresh_costs(
    plan: WindowedPlan,
    goals: list[int],
    guidance: GuidanceGraph,
    tables: DistanceTables,
) -> None:
    for i, g in enumerate(goals):
        plan.cost[i] = path_cost(guidance, tables.get(g), g, plan.locs[i], plan.oris[i], plan.w)


@dataclass(frozen=True)
class Neighborhood:
    members: tuple[int, ...]
    strategy_tag: str  # "random" | "agent_based"

    def __post_init__(self):
        if not self.members:
            raise ValueError("empty neighborhood")


def select_neighborhood(
    plan: WindowedPlan,
    goals: list[int],
    tables: DistanceTables,
    rng: np.random.Generator,
    strategy: str,
    size: int = 8,
    disabled: list[bool] | None = None,
) -> Neighborhood:
    """Pick the agents to replan.

    random: uniform sample without replacement. agent_based: seed with the
    most delayed agent (cost minus its unconstrained distance), add agents
    whose paths cross the seed's path, fill up randomly. Disabled agents are
    never seeds: parked agents have no delay to recover.
    """
    n = plan.n
    size = min(size, n)
    if strategy == "random":
        members = rng.choice(n, size=size, replace=False)
        return Neighborhood(tuple(int(m) for m in members), "random")
    if strategy != "agent_based":
        raise ValueError(f"unknown strategy {strategy!r}")
    best, best_delay = -1, -INF
    for i in range(n):
        if disabled is not None and disabled[i]:
            continue
        base = tables.get(goals[i]).lookup(plan.locs[i][0], plan.oris[i][0])
        delay = plan.cost[i] - base
        if not math.isfinite(delay):
            delay = INF if plan.cost[i] == INF else -INF
        if delay > best_delay:
            best, best_delay = i, delay
    if best < 0:  # everyone disabled; degrade to a random pick
        return select_neighborhood(plan, goals, tables, rng, "random", size, None)
    seed_cells = set(plan.locs[best])
    crossing = [
        j for j in range(n)
        if j != best and any(v in seed_cells for v in plan.locs[j])
    ]
    members = [best]
    if len(crossing) > size - 1:
        picked = rng.choice(len(crossing), size=size - 1, replace=False)
        members += [crossing[int(k)] for k in picked]
    else:
        members += crossing
        rest = [j for j in range(n) if j != best and j not in set(crossing)]
        need = size - len(members)
        if need > 0 and rest:
            picked = rng.choice(len(rest), size=min(need, len(rest)), replace=False)
            members += [rest[int(k)] for k in picked]
    return Neighborhood(tuple(members), "agent_based")


class ReservationTable:
    """Space-time occupancy of fixed paths over steps 0..w.

    Vertex keys are t * n_cells + cell; edge keys encode (arrival step t,
    from u, to v) so a swap is a lookup of the reversed traversal.
    """

    def __init__(self, n_cells: int, w: int):
        self.n_cells = n_cells
        self.w = w
        self.vertex: dict[int, int] = {}
        self.edge: dict[int, int] = {}

    @classmethod
    def from_plan(cls, plan: WindowedPlan, n_cells: int, exclude=()) -> "ReservationTable":
        # n_cells must match the grid everywhere: it is baked into the keys.
        table = cls(n_cells, plan.w)
        skip = set(exclude)
        for i, path in enumerate(plan.locs):
            if i not in skip:
                table.add_path(i, path)
        return table

    def add_path(self, agent: int, locs: list[int]) -> None:
        nc = self.n_cells
        vertex, edge = self.vertex, self.edge
        prev = locs[0]
        vertex[prev] = agent  # t = 0
        for t in range(1, len(locs)):
            cur = locs[t]
            vertex[t * nc + cur] = agent
            if cur != prev:
                edge[(t * nc + prev) * nc + cur] = agent
            prev = cur

    def remove_path(self, agent: int, locs: list[int]) -> None:
        nc = self.n_cells
        prev = locs[0]
        self.vertex.pop(prev, None)
        for t in range(1, len(locs)):
            cur = locs[t]
            self.vertex.pop(t * nc + cur, None)
            if cur != prev:
                self.edge.pop((t * nc + prev) * nc + cur, None)
            prev = cur


def space_time_astar(
    grid: GridMap,
    guidance: GuidanceGraph,
    table,
    start_loc: int,
    start_ori: int,
    goal: int,
    w: int,
    reservations: ReservationTable,
    model: ActionModel = ActionModel.ROTATION,
) -> tuple[list[int], list[int], float] | None:
    """Min-cost conflict-free path of exactly w steps; None when boxed in.

    g accrues guidance costs until the first step that touches the goal and
    is zero afterwards; h is the distance-table estimate, so the first node
    popped at t == w carries the exact objective component g + h.
    """
    nc = grid.n_cells
    ahead = grid.ahead
    move_w, wait_w = guidance.move_w, guidance.wait_w
    vertex, edge = reservations.vertex, reservations.edge
    rotation = model == ActionModel.ROTATION
    dist = table.dist

    # State key: ((t * nc + loc) * 4 + ori) * 2 + arrived   (rotation)
    #            ((t * nc + loc) * 2 + arrived)             (four-way)
    arrived0 = 1 if start_loc == goal else 0
    if rotation:
        true0 = dist[start_loc * 4 + start_ori]
        s0 = ((start_loc) * 4 + start_ori) * 2 + arrived0
    else:
        true0 = dist[start_loc]
        s0 = start_loc * 2 + arrived0
    h0 = 0.0 if arrived0 else true0
    if h0 == INF:
        # Goal unreachable even without other agents; filler still allowed,
        # treat h as 0 so the search degenerates to any safe w-step path.
        h0 = 0.0
        unreachable = True
    else:
        unreachable = False

    g_best: dict[int, float] = {s0: 0.0}
    parent: dict[int, int] = {}
    # Heap entries: (f, tie, state, g). The tie is the true table distance
    # even after arrival (when it no longer counts toward f), so cost-free
    # filler steps hug the goal instead of drifting by cell index.
    heap: list[tuple[float, float, int, float]] = [(h0, true0 if true0 != INF else 0.0, s0, 0.0)]

    def unpack(key: int) -> tuple[int, int, int, int]:
        arr = key & 1
        key >>= 1
        if rotation:
            ori = key % 4
            key //= 4
        else:
            ori = start_ori
        t, loc = divmod(key, nc)
        return t, loc, ori, arr

    while heap:
        f, h, key, g = heapq.heappop(heap)
        if g > g_best.get(key, INF):
            continue
        t, loc, ori, arr = unpack(key)
        if t == w:
            # Charge the true beyond-window estimate (may be +inf when the
            # goal is unreachable), not the heuristic used to steer.
            if arr:
                end_h = 0.0
            elif rotation:
                end_h = dist[loc * 4 + ori]
            else:
                end_h = dist[loc]
            return _reconstruct(key, parent, nc, rotation, start_ori, w, g + end_h)
        t1 = t + 1
        base_v = t1 * nc
        succs: list[tuple[int, int, float]] = []  # (loc', ori', step cost)
        if rotation:
            succs.append((loc, ori, wait_w[loc]))
            succs.append((loc, (ori + 1) % 4, wait_w[loc]))
            succs.append((loc, (ori - 1) % 4, wait_w[loc]))
            u = ahead[loc * 4 + ori]
            if u >= 0:
                succs.append((u, ori, move_w[loc * 4 + ori]))
        else:
            succs.append((loc, ori, wait_w[loc]))
            for u, d in grid.adjacency[loc]:
                succs.append((u, ori, move_w[loc * 4 + d]))
        for nloc, nori, step_cost in succs:
            if base_v + nloc in vertex:
                continue
            if nloc != loc and ((base_v + nloc) * nc + loc) in edge:
                continue  # somebody traverses nloc -> loc this step
            narr = arr or (1 if nloc == goal else 0)
            ng = g if arr else g + step_cost
            if rotation:
                nkey = (((t1 * nc + nloc) * 4 + nori) * 2) + narr
                ntrue = dist[nloc * 4 + nori]
            else:
                nkey = ((t1 * nc + nloc) * 2) + narr
                ntrue = dist[nloc]
            nh = 0.0 if narr else ntrue
            if nh == INF:
                if not unreachable:
                    continue
                nh = 0.0
            if ng < g_best.get(nkey, INF):
                g_best[nkey] = ng
                parent[nkey] = key
                heapq.heappush(heap, (ng + nh, ntrue if ntrue != INF else 0.0,
                                      nkey, ng))
    return None


def _reconstruct(key, parent, nc, rotation, start_ori, w, total):
    locs: list[int] = []
    oris: list[int] = []
    cur = key
    while True:
        k = cur >> 1
        if rotation:
            ori = k % 4
            k //= 4
        else:
            ori = start_ori
        t, loc = divmod(k, nc)
        locs.append(loc)
        oris.append(ori)
        if t == 0:
            break
        cur = parent[cur]
    locs.reverse()
    oris.reverse()
    return locs, oris, total


def replan_neighborhood(
    plan: WindowedPlan,
    nbhd: Neighborhood,
    goals: list[int],
    guidance: GuidanceGraph,
    tables: DistanceTables,
    reservations: ReservationTable,
    rng: np.random.Generator,
    grid: GridMap,
    model: ActionModel = ActionModel.ROTATION,
) -> dict[int, tuple[list[int], list[int], float]] | None:
    """Prioritized replanning of the members in a random order.

    reservations must hold exactly the non-member paths; member paths are
    added to it as they are found. Returns None when any member is stuck,
    with the paths added so far removed again, so the table is handed back
    exactly as it came in.
    """
    order = [nbhd.members[int(k)] for k in rng.permutation(len(nbhd.members))]
    out: dict[int, tuple[list[int], list[int], float]] = {}
    for i in order:
        result = space_time_astar(
            grid, guidance, tables.get(goals[i]),
            plan.locs[i][0], plan.oris[i][0], goals[i],
            plan.w, reservations, model,
        )
        if result is None:
            for j, (jlocs, _, _) in out.items():
                reservations.remove_path(j, jlocs)
            return None
        locs, oris, cost = result
        reservations.add_path(i, locs)
        out[i] = (locs, oris, cost)
    return out


@dataclass
class CommitEntry:
    iteration: int
    worker: int
    members: tuple[int, ...]
    objective_before: float
    objective_after: float
    accepted: bool


def lns_refine(
    plan: WindowedPlan,
    goals: list[int],
    guidance: GuidanceGraph,
    tables: DistanceTables,
    budget: int,
    rng: np.random.Generator,
    grid: GridMap,
    model: ActionModel = ActionModel.ROTATION,
    neighborhood_size: int = 8,
    disabled: list[bool] | None = None,
    time_limit: float | None = None,
    log: list[CommitEntry] | None = None,
    worker: int = 0,
) -> WindowedPlan:
    """Improve the plan in place until the budget runs out; returns the plan.

    budget counts iterations; a finite time_limit (seconds) additionally cuts
    the loop short. Only strictly improving replans are accepted, so the
    objective is non-increasing across iterations.
    """
    if budget <= 0 and time_limit is None:
        return plan
    deadline = None if time_limit is None else time.monotonic() + time_limit
    reservations = ReservationTable.from_plan(plan, grid.n_cells)
    iterations = budget if budget > 0 else (1 << 62)
    for it in range(iterations):
        if deadline is not None and time.monotonic() >= deadline:
            break
        strategy = "random" if rng.random() < 0.5 else "agent_based"
        nbhd = select_neighborhood(
            plan, goals, tables, rng, strategy, neighborhood_size, disabled
        )
        for m in nbhd.members:
            reservations.remove_path(m, plan.locs[m])
        result = replan_neighborhood(
            plan, nbhd, goals, guidance, tables, reservations, rng, grid, model
        )
        obj_before = plan.objective
        accepted = False
        if result is not None:
            old = sum(plan.cost[m] for m in nbhd.members)
            new = sum(c for _, _, c in result.values())
            if new < old:
                accepted = True
                for m, (locs, oris, cost) in result.items():
                    plan.locs[m] = locs
                    plan.oris[m] = oris
                    plan.cost[m] = cost
        if not accepted:
            # Roll the table back to the incumbent paths.
            if result is not None:
                for m in nbhd.members:
                    reservations.remove_path(m, result[m][0])
            for m in nbhd.members:
                reservations.add_path(m, plan.locs[m])
        if log is not None:
            log.append(CommitEntry(it, worker, nbhd.members, obj_before,
                                   plan.objective, accepted))
    return plan
