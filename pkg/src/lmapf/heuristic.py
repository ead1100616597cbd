"""Guidance-weighted backward shortest-path distance tables.

For the rotation model the table covers the (location, orientation) product
space: a forward move out of cell v in direction d costs the guidance move
weight of (v, d); rotating or waiting at v costs the wait weight of v. The
goal is an any-orientation sink: dist(goal, o) = 0 for every o. In four-way
mode the product space collapses to plain locations.

Distances are computed by Dijkstra over the transposed product graph (all
action edges reversed), with the goal's states as a multi-source sink set.
The inner search is scipy's compiled Dijkstra; the graph matrix is built
once per map + guidance and reused for every goal. Tables are built lazily
per goal and cached with an LRU bound; a built table is immutable and safe
to share across threads and forked workers.
"""
from __future__ import annotations

import math
import threading
from collections import OrderedDict

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

from .domain import ActionModel, AgentState, GridMap
from .guidance import GuidanceGraph

INF = math.inf


class DistanceTable:
    """Minimal weighted cost from every state to one goal cell."""

    __slots__ = ("goal", "model", "dist", "_stride")

    def __init__(self, goal: int, model: ActionModel, dist: list[float]):
        self.goal = goal
        self.model = model
        self.dist = dist
        self._stride = 4 if model == ActionModel.ROTATION else 1

    def lookup(self, location: int, orientation: int = 0) -> float:
        if self._stride == 4:
            return self.dist[location * 4 + orientation]
        return self.dist[location]

    def state_value(self, s: AgentState) -> float:
        return self.lookup(s.location, s.orientation)


def distance(table: DistanceTable, s: AgentState) -> float:
    """Constant-time lookup; +inf when the goal is unreachable from s."""
    return table.state_value(s)


def _reversed_graph(grid: GridMap, guidance: GuidanceGraph,
                    model: ActionModel) -> csr_matrix:
    """Transposed action graph: entry (s', s) = cost of the action s -> s'."""
    rows: list[int] = []
    cols: list[int] = []
    data: list[float] = []
    if model == ActionModel.ROTATION:
        n_states = grid.n_cells * 4
        for v in grid.free_ids:
            wait = guidance.wait_w[v]
            base = v * 4
            for o in range(4):
                s = base + o
                for o2 in ((o + 1) % 4, (o - 1) % 4):
                    rows.append(base + o2)
                    cols.append(s)
                    data.append(wait)
                u = grid.ahead[s]
                if u >= 0:
                    rows.append(u * 4 + o)
                    cols.append(s)
                    data.append(guidance.move_w[s])
    else:
        n_states = grid.n_cells
        for v in grid.free_ids:
            for u, d in grid.adjacency[v]:
                rows.append(u)
                cols.append(v)
                data.append(guidance.move_w[v * 4 + d])
    return csr_matrix((data, (rows, cols)), shape=(n_states, n_states))


def _solve(graph: csr_matrix, goal: int, model: ActionModel) -> list[float]:
    if model == ActionModel.ROTATION:
        sinks = [goal * 4 + o for o in range(4)]
    else:
        sinks = [goal]
    dist = _csgraph_dijkstra(graph, directed=True, indices=sinks, min_only=True)
    return dist.tolist()


def build_table(
    grid: GridMap, guidance: GuidanceGraph, goal: int, model: ActionModel
) -> DistanceTable:
    """Exact backward Dijkstra from the goal over the product state graph."""
    if not grid.is_free(goal):
        raise ValueError(f"goal cell {goal} is not free")
    graph = _reversed_graph(grid, guidance, model)
    return DistanceTable(goal, model, _solve(graph, goal, model))


class DistanceTables:
    """Lazy per-goal table cache with atomic get-or-build and an LRU bound."""

    def __init__(
        self,
        grid: GridMap,
        guidance: GuidanceGraph,
        model: ActionModel = ActionModel.ROTATION,
        max_tables: int = 65536,
    ):
        self.grid = grid
        self.guidance = guidance
        self.model = model
        self.max_tables = max_tables
        self._graph: csr_matrix | None = None
        self._tables: OrderedDict[int, DistanceTable] = OrderedDict()
        self._lock = threading.Lock()

    def get(self, goal: int) -> DistanceTable:
        with self._lock:
            table = self._tables.get(goal)
            if table is not None:
                self._tables.move_to_end(goal)
                return table
            if not self.grid.is_free(goal):
                raise ValueError(f"goal cell {goal} is not free")
            if self._graph is None:
                self._graph = _reversed_graph(self.grid, self.guidance, self.model)
            table = DistanceTable(goal, self.model,
                                  _solve(self._graph, goal, self.model))
            self._tables[goal] = table
            while len(self._tables) > self.max_tables:
                self._tables.popitem(last=False)
            return table

    def ensure(self, goals) -> None:
        """Prebuild tables for a batch of goals (e.g. before forking workers)."""
        for g in set(goals):
            self.get(g)

    def __len__(self) -> int:
        return len(self._tables)
