"""Lifelong execution engine: validated stepping, task assignment, metrics.

The loop asks the planner for the next h steps, validates every joint step
against the collision rules (an invalid plan is a hard error, never
repaired), applies it, hands completed goals to the task assigner, and
accumulates throughput plus the per-vertex wait-usage heatmap. Steps in
which an agent does not change location (waits and rotations alike) count
as waits for the heatmap.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import (
    ActionModel,
    GridMap,
    Instance,
    ORIENTATION_IDS,
    ORIENTATION_NAMES,
    ParseError,
    check_joint_locations,
)
from .pibt import PriorityState, update_priorities
from .wppl import DisablePolicy, WpplPlanner, apply_disable_policy, goal_disables_agent


class InvalidJointAction(Exception):
    """The planner emitted a colliding joint step; always fail fast."""


class UniformRandomAssigner:
    """New goals drawn uniformly from free cells, excluding the agent's cell."""

    def __init__(self, grid: GridMap, seed: int = 0):
        if grid.free_count < 2:
            raise ValueError("need at least two free cells to assign goals")
        self.free_ids = grid.free_ids
        self.rng = np.random.default_rng(seed)

    def next_goal(self, agent: int, location: int) -> int:
        m = len(self.free_ids)
        while True:
            goal = self.free_ids[int(self.rng.integers(m))]
            if goal != location:
                return goal


class ScriptedAssigner:
    """Cycles through a fixed per-agent goal list; replays exactly."""

    def __init__(self, goals_per_agent: list[list[int]]):
        if any(not g for g in goals_per_agent):
            raise ValueError("every agent needs at least one scripted goal")
        self.goals = goals_per_agent
        self._next = [0] * len(goals_per_agent)

    def next_goal(self, agent: int, location: int) -> int:
        seq = self.goals[agent]
        goal = seq[self._next[agent] % len(seq)]
        self._next[agent] += 1
        return goal


@dataclass
class RunMetrics:
    steps: int
    goals_reached: int
    wait_usage: list[int]
    goal_log: list[tuple[int, int, int]]  # (agent, step, goal)
    lost_steps: int = 0
    planning_times: list[float] = field(default_factory=list)
    n_agents: int = 0
    disabled_count: int = 0

    @property
    def throughput(self) -> float:
        return self.goals_reached / self.steps if self.steps else 0.0

    def summary(self) -> dict:
        """Deterministic fields only; wall-clock timings live elsewhere."""
        return {
            "steps": self.steps,
            "goals_reached": self.goals_reached,
            "throughput": self.throughput,
            "lost_steps": self.lost_steps,
            "n_agents": self.n_agents,
            "disabled_count": self.disabled_count,
            "goal_log": [list(entry) for entry in self.goal_log],
        }


def simulate(
    instance: Instance,
    planner: WpplPlanner,
    assigner,
    total_steps: int,
    policy: DisablePolicy | None = None,
    policy_seed: int = 0,
    priority_seed: int = 0,
    record_trajectory: bool = True,
) -> tuple[RunMetrics, list[tuple[list[int], list[int]]]]:
    """Run the lifelong loop for total_steps executed steps."""
    if total_steps < 1:
        raise ValueError("total_steps must be >= 1")
    grid = instance.grid
    n = instance.n
    policy = policy if policy is not None else DisablePolicy()
    locs = [a.location for a in instance.agents]
    oris = [a.orientation for a in instance.agents]
    raw_goals = [assigner.next_goal(i, locs[i]) for i in range(n)]
    policy_rng = np.random.default_rng(policy_seed)
    disabled, goals = apply_disable_policy(grid, locs, raw_goals, policy, policy_rng)
    priorities = PriorityState.fresh(n, priority_seed)
    priorities.disabled = disabled

    wait_usage = [0] * grid.n_cells
    goal_log: list[tuple[int, int, int]] = []
    planning_times: list[float] = []
    trajectory: list[tuple[list[int], list[int]]] = []
    if record_trajectory:
        trajectory.append((list(locs), list(oris)))

    goals_reached = 0
    lost_steps = 0
    step = 0
    buffer: list[tuple[list[int], list[int]]] = []
    overrun = 0

    while step < total_steps:
        if overrun == 0 and not buffer:
            for i in range(n):
                if disabled[i]:
                    goals[i] = locs[i]  # parked agents target wherever they sit
            cycle = planner.plan_cycle(locs, oris, goals, priorities)
            planning_times.append(cycle.planning_time)
            overrun = cycle.overrun_steps
            buffer = list(zip(cycle.step_locs, cycle.step_oris))
        if overrun > 0:
            # The plan was late: the whole fleet holds still for these steps.
            step += 1
            lost_steps += 1
            overrun -= 1
            for v in locs:
                wait_usage[v] += 1
            priorities = update_priorities(priorities, ())
            priorities.disabled = disabled
            if record_trajectory:
                trajectory.append((list(locs), list(oris)))
            continue
        next_locs, next_oris = buffer.pop(0)
        step += 1
        conflicts = check_joint_locations(locs, next_locs, step)
        if conflicts:
            raise InvalidJointAction(f"step {step}: {conflicts[:3]}")
        for i in range(n):
            if next_locs[i] == locs[i]:
                wait_usage[locs[i]] += 1
        locs, oris = list(next_locs), list(next_oris)
        arrivals = [i for i in range(n) if not disabled[i] and locs[i] == goals[i]]
        for i in arrivals:
            goals_reached += 1
            goal_log.append((i, step, goals[i]))
            g = assigner.next_goal(i, locs[i])
            if goal_disables_agent(grid, g, policy):
                disabled[i] = True
                goals[i] = locs[i]
            else:
                goals[i] = g
        priorities = update_priorities(priorities, arrivals)
        priorities.disabled = disabled
        if record_trajectory:
            trajectory.append((list(locs), list(oris)))

    metrics = RunMetrics(
        steps=step,
        goals_reached=goals_reached,
        wait_usage=wait_usage,
        goal_log=goal_log,
        lost_steps=lost_steps,
        planning_times=planning_times,
        n_agents=n,
        disabled_count=sum(disabled),
    )
    return metrics, trajectory


def heatmap_grid(metrics: RunMetrics, grid: GridMap) -> list[list[int | None]]:
    """wait_usage as an H x W array with null at obstacles."""
    out: list[list[int | None]] = []
    for r in range(grid.height):
        row: list[int | None] = []
        for c in range(grid.width):
            v = r * grid.width + c
            row.append(metrics.wait_usage[v] if grid.free_flat[v] else None)
        out.append(row)
    return out


def export_heatmap(metrics: RunMetrics, grid: GridMap, path: str) -> None:
    import json

    doc = {"height": grid.height, "width": grid.width,
           "wait_usage": heatmap_grid(metrics, grid)}
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def save_trajectory(path: str, trajectory, grid: GridMap) -> None:
    """One line per step: `row col orientation` triples for every agent."""
    with open(path, "w", encoding="ascii") as fh:
        for locs, oris in trajectory:
            parts = []
            for v, o in zip(locs, oris):
                r, c = divmod(v, grid.width)
                parts.append(f"{r} {c} {ORIENTATION_NAMES[o]}")
            fh.write(" ".join(parts) + "\n")


def load_trajectory(path: str, grid: GridMap):
    out = []
    n = None
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            fields = raw.split()
            if not fields:
                continue
            if len(fields) % 3 != 0:
                raise ParseError(f"{path}:{lineno}: field count not a multiple of 3")
            if n is None:
                n = len(fields) // 3
            elif len(fields) // 3 != n:
                raise ParseError(f"{path}:{lineno}: agent count changed")
            locs, oris = [], []
            for k in range(0, len(fields), 3):
                try:
                    r, c = int(fields[k]), int(fields[k + 1])
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: bad row/col") from None
                if fields[k + 2] not in ORIENTATION_IDS:
                    raise ParseError(f"{path}:{lineno}: bad orientation {fields[k + 2]!r}")
                if not (0 <= r < grid.height and 0 <= c < grid.width):
                    raise ParseError(f"{path}:{lineno}: ({r}, {c}) out of bounds")
                locs.append(r * grid.width + c)
                oris.append(ORIENTATION_IDS[fields[k + 2]])
            out.append((locs, oris))
    if not out:
        raise ParseError(f"{path}: empty trajectory")
    return out


def validate_trajectory(
    grid: GridMap, trajectory, model: ActionModel = ActionModel.ROTATION
) -> list[str]:
    """All rule violations in a recorded trajectory; empty means valid."""
    from .lns import _legal_transition

    problems: list[str] = []
    for t in range(len(trajectory)):
        locs, oris = trajectory[t]
        for i, v in enumerate(locs):
            if not grid.is_free(v):
                problems.append(f"step {t}: agent {i} on obstacle cell {grid.coords(v)}")
        if t == 0:
            continue
        prev_locs, prev_oris = trajectory[t - 1]
        for i in range(len(locs)):
            if not _legal_transition(grid, model, prev_locs[i], prev_oris[i],
                                     locs[i], oris[i]):
                problems.append(f"step {t}: agent {i} illegal transition")
        for conflict in check_joint_locations(prev_locs, locs, t):
            problems.append(
                f"step {t}: {conflict.kind} conflict agents {conflict.agents}"
            )
    return problems
