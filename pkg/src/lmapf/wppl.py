"""Windowed planning orchestrator.

Every h executed steps the planner builds a fresh length-w plan: a PIBT
rollout seeded with hints from the unexecuted tail of the previous plan,
followed by LNS refinement under a per-cycle budget. Refinement can run on
several worker processes that propose sub-plans asynchronously while a
single committer revalidates each proposal against the live incumbent and
commits only strict improvements.
"""
from __future__ import annotations

import math
import multiprocessing
import queue as queue_mod
import time
from dataclasses import dataclass, field

import numpy as np

from .domain import ActionModel, GridMap
from .guidance import GuidanceGraph
from .heuristic import DistanceTables
from .lns import (
    CommitEntry,
    ReservationTable,
    WindowedPlan,
    lns_refine,
    path_cost,
    replan_neighborhood,
    select_neighborhood,
)
from .pibt import Pibt, PriorityState, pibt_rollout


class PlanOverrun(Exception):
    """Wall-time planning exceeded its budget; the run loses movement steps."""


@dataclass(frozen=True)
class DisablePolicy:
    """Which agents get parked (goal = own cell, lowest priority)."""

    kind: str = "none"  # "none" | "deadend_goals" | "random_k"
    k: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "deadend_goals", "random_k"):
            raise ValueError(f"unknown disable policy {self.kind!r}")
        if self.kind == "random_k" and self.k < 0:
            raise ValueError("k must be >= 0")


@dataclass
class WpplConfig:
    w: int = 10
    h: int = 3
    iterations: int = 400          # per-replan LNS budget (iteration mode)
    time_per_step: float | None = None  # seconds; setting this selects wall-time mode
    workers: int = 1
    reuse: bool = True
    neighborhood_size: int = 8
    disable: DisablePolicy = field(default_factory=DisablePolicy)
    seed: int = 0

    def __post_init__(self):
        if not (1 <= self.h <= self.w):
            raise ValueError("need 1 <= h <= w")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")


def apply_disable_policy(
    grid: GridMap,
    locs: list[int],
    goals: list[int],
    policy: DisablePolicy,
    rng: np.random.Generator,
) -> tuple[list[bool], list[int]]:
    """Initial disabled flags and effective goals.

    deadend_goals parks agents whose assigned goal has exactly one free
    neighbor; random_k parks k agents drawn by the policy rng. Parked agents
    target their own cell.
    """
    n = len(locs)
    disabled = [False] * n
    if policy.kind == "deadend_goals":
        disabled = [g in grid.deadends for g in goals]
    elif policy.kind == "random_k":
        k = min(policy.k, n)
        for i in rng.choice(n, size=k, replace=False):
            disabled[int(i)] = True
    goals = [locs[i] if disabled[i] else goals[i] for i in range(n)]
    return disabled, goals


def goal_disables_agent(grid: GridMap, goal: int, policy: DisablePolicy) -> bool:
    """Re-evaluation hook for freshly assigned goals (deadend_goals only)."""
    return policy.kind == "deadend_goals" and goal in grid.deadends


def rollout_to_plan(
    locs_seq: list[list[int]],
    oris_seq: list[list[int]],
    w: int,
    goals: list[int],
    guidance: GuidanceGraph,
    tables: DistanceTables,
) -> WindowedPlan:
    """Convert a step-major PIBT rollout into an agent-major costed plan."""
    n = len(locs_seq[0])
    locs = [[locs_seq[t][i] for t in range(w + 1)] for i in range(n)]
    oris = [[oris_seq[t][i] for t in range(w + 1)] for i in range(n)]
    cost = [
        path_cost(guidance, tables.get(goals[i]), goals[i], locs[i], oris[i], w)
        for i in range(n)
    ]
    return WindowedPlan(w, locs, oris, cost)


def plan_window(
    pibt: Pibt,
    locs: list[int],
    oris: list[int],
    goals: list[int],
    priorities: PriorityState,
    guidance: GuidanceGraph,
    tables: DistanceTables,
    cfg: WpplConfig,
    rng: np.random.Generator,
    hints: list[list[int]] | None = None,
    refine: bool = True,
    time_limit: float | None = None,
    log: list[CommitEntry] | None = None,
    seed_seq: np.random.SeedSequence | None = None,
    hint_oris: list[list[int]] | None = None,
) -> tuple[WindowedPlan, float]:
    """One windowed plan. Returns (plan, objective before refinement).

    With budget 0 (and no time limit) the result is exactly the PIBT rollout.
    """
    locs_seq, oris_seq, _ = pibt_rollout(pibt, locs, oris, goals, priorities,
                                         cfg.w, hints, hint_oris)
    plan = rollout_to_plan(locs_seq, oris_seq, cfg.w, goals, guidance, tables)
    initial = plan.objective
    if not refine:
        return plan, initial
    if time_limit is not None and time_limit <= 0:
        return plan, initial
    if cfg.iterations == 0 and time_limit is None:
        return plan, initial
    disabled = list(priorities.disabled)
    budget = cfg.iterations if time_limit is None else 0
    if cfg.workers == 1:
        plan = lns_refine(
            plan, goals, guidance, tables, budget, rng, pibt.grid, pibt.model,
            cfg.neighborhood_size, disabled, time_limit, log,
        )
    else:
        plan = parallel_refine(
            plan, goals, guidance, tables, pibt.grid, pibt.model, cfg.workers,
            seed_seq if seed_seq is not None else np.random.SeedSequence(cfg.seed),
            budget, time_limit, cfg.neighborhood_size, disabled, log,
        )
    return plan, initial


# ---------------------------------------------------------------------------
# Parallel refinement: forked proposal workers, one committer.
# ---------------------------------------------------------------------------


def _worker_loop(worker_id, plan, goals, guidance, tables, grid, model,
                 nbhd_size, disabled, iterations, seed, proposal_q, update_q,
                 stop_event):
    """Propose improving sub-plans against the latest committed snapshot."""
    try:
        proposal_q.cancel_join_thread()
        rng = np.random.default_rng(seed)
        local = plan.copy()
        version = 0
        done = 0
        while not stop_event.is_set() and (iterations <= 0 or done < iterations):
            while True:
                try:
                    version, members, paths = update_q.get_nowait()
                except queue_mod.Empty:
                    break
                for m, (mlocs, moris, mcost) in paths.items():
                    local.locs[m] = list(mlocs)
                    local.oris[m] = list(moris)
                    local.cost[m] = mcost
            done += 1
            strategy = "random" if rng.random() < 0.5 else "agent_based"
            nbhd = select_neighborhood(local, goals, tables, rng, strategy,
                                       nbhd_size, disabled)
            reservations = ReservationTable.from_plan(local, grid.n_cells,
                                                      exclude=nbhd.members)
            result = replan_neighborhood(local, nbhd, goals, guidance, tables,
                                         reservations, rng, grid, model)
            if result is None:
                continue
            old = sum(local.cost[m] for m in nbhd.members)
            new = sum(c for _, _, c in result.values())
            if new < old:
                proposal_q.put((worker_id, version, nbhd.members,
                                {m: (r[0], r[1], r[2]) for m, r in result.items()}))
    except (KeyboardInterrupt, BrokenPipeError, EOFError):
        pass


def _path_clear(reservations: ReservationTable, locs: list[int]) -> bool:
    nc = reservations.n_cells
    vertex, edge = reservations.vertex, reservations.edge
    prev = locs[0]
    for t in range(1, len(locs)):
        cur = locs[t]
        if t * nc + cur in vertex:
            return False
        if cur != prev and (t * nc + cur) * nc + prev in edge:
            return False
        prev = cur
    return True


def parallel_refine(
    plan: WindowedPlan,
    goals: list[int],
    guidance: GuidanceGraph,
    tables: DistanceTables,
    grid: GridMap,
    model: ActionModel,
    workers: int,
    seed_seq: np.random.SeedSequence,
    budget: int,
    time_limit: float | None,
    neighborhood_size: int = 8,
    disabled: list[bool] | None = None,
    log: list[CommitEntry] | None = None,
) -> WindowedPlan:
    """Asynchronous proposals, sequential commits against the live incumbent.

    Workers never write the plan: each proposal is revalidated here against
    the current committed state, for conflict-freeness with all non-member
    paths and a strict objective decrease; stale or degrading proposals are
    discarded (and logged as rejected). With workers == 1 this degenerates to
    the serial refinement loop.
    """
    if workers == 1:
        rng = np.random.default_rng(seed_seq.spawn(1)[0])
        return lns_refine(plan, goals, guidance, tables, budget, rng, grid,
                          model, neighborhood_size, disabled, time_limit, log)
    tables.ensure(goals)  # build before forking so workers share pages
    ctx = multiprocessing.get_context("fork")
    proposal_q = ctx.Queue()
    update_qs = [ctx.Queue() for _ in range(workers)]
    stop_event = ctx.Event()
    per_worker = 0 if budget <= 0 else math.ceil(budget / workers)
    seeds = seed_seq.spawn(workers)
    procs = []
    for wid in range(workers):
        p = ctx.Process(
            target=_worker_loop,
            args=(wid, plan, goals, guidance, tables, grid, model,
                  neighborhood_size, disabled, per_worker, seeds[wid],
                  proposal_q, update_qs[wid], stop_event),
            daemon=True,
        )
        p.start()
        procs.append(p)

    deadline = None if time_limit is None else time.monotonic() + time_limit
    reservations = ReservationTable.from_plan(plan, grid.n_cells)
    version = 0
    commit_index = 0

    def reject(worker_id, members, obj) -> None:
        nonlocal commit_index
        if log is not None:
            log.append(CommitEntry(commit_index, worker_id, members, obj, obj, False))
        commit_index += 1

    def handle(proposal) -> None:
        nonlocal version, commit_index
        worker_id, _, members, paths = proposal
        obj_before = plan.objective
        for m in members:
            if paths[m][0][0] != plan.locs[m][0] or paths[m][1][0] != plan.oris[m][0]:
                reject(worker_id, members, obj_before)
                return
        for m in members:
            reservations.remove_path(m, plan.locs[m])
        added = []
        ok = True
        for m in members:
            if not _path_clear(reservations, paths[m][0]):
                ok = False
                break
            reservations.add_path(m, paths[m][0])
            added.append(m)
        new_costs = {}
        if ok:
            new_costs = {
                m: path_cost(guidance, tables.get(goals[m]), goals[m],
                             paths[m][0], paths[m][1], plan.w)
                for m in members
            }
            ok = sum(new_costs.values()) < sum(plan.cost[m] for m in members)
        if not ok:
            for m in added:
                reservations.remove_path(m, paths[m][0])
            for m in members:
                reservations.add_path(m, plan.locs[m])
            reject(worker_id, members, obj_before)
            return
        for m in members:
            plan.locs[m] = list(paths[m][0])
            plan.oris[m] = list(paths[m][1])
            plan.cost[m] = new_costs[m]
        version += 1
        patch = (version, members,
                 {m: (plan.locs[m], plan.oris[m], plan.cost[m]) for m in members})
        for q in update_qs:
            q.put(patch)
        if log is not None:
            log.append(CommitEntry(commit_index, worker_id, members,
                                   obj_before, plan.objective, True))
        commit_index += 1

    try:
        while True:
            if deadline is not None and time.monotonic() >= deadline:
                break
            if deadline is None and not any(p.is_alive() for p in procs) \
                    and proposal_q.empty():
                break
            try:
                proposal = proposal_q.get(timeout=0.005)
            except queue_mod.Empty:
                continue
            handle(proposal)
    finally:
        stop_event.set()
        end = time.monotonic() + 2.0
        while any(p.is_alive() for p in procs) and time.monotonic() < end:
            try:
                while True:
                    proposal_q.get_nowait()
            except queue_mod.Empty:
                pass
            for p in procs:
                p.join(timeout=0.02)
        for p in procs:
            if p.is_alive():
                p.terminate()
                p.join()
        for q in update_qs:
            q.cancel_join_thread()
            q.close()
        proposal_q.cancel_join_thread()
        proposal_q.close()
    return plan


# ---------------------------------------------------------------------------
# The per-cycle planner driven by the simulator.
# ---------------------------------------------------------------------------


@dataclass
class CycleResult:
    """States for the next h steps plus planning-time accounting."""

    step_locs: list[list[int]]
    step_oris: list[list[int]]
    planning_time: float
    overrun_steps: int
    log: list[CommitEntry]
    objective_initial: float
    objective_final: float


class WpplPlanner:
    """Stateful windowed planner; one instance per run.

    algorithm "pibt" degenerates to per-step PIBT (w = h = 1, no refinement);
    "wppl" follows the config.
    """

    def __init__(
        self,
        grid: GridMap,
        guidance: GuidanceGraph,
        cfg: WpplConfig,
        model: ActionModel = ActionModel.ROTATION,
        algorithm: str = "wppl",
        tables: DistanceTables | None = None,
    ):
        if algorithm not in ("pibt", "wppl"):
            raise ValueError(f"unknown algorithm {algorithm!r}")
        if algorithm == "pibt":
            cfg = WpplConfig(
                w=1, h=1, iterations=0, time_per_step=cfg.time_per_step,
                workers=1, reuse=False, neighborhood_size=cfg.neighborhood_size,
                disable=cfg.disable, seed=cfg.seed,
            )
        self.grid = grid
        self.guidance = guidance
        self.cfg = cfg
        self.model = model
        self.algorithm = algorithm
        self.tables = tables if tables is not None else DistanceTables(grid, guidance, model)
        self.pibt = Pibt(grid, self.tables, model)
        self._seed_seq = np.random.SeedSequence(cfg.seed)
        self._rng = np.random.default_rng(self._seed_seq.spawn(1)[0])
        self._prev_plan: WindowedPlan | None = None
        self._prev_goals: list[int] | None = None
        self._first_cycle = True
        self.commit_log: list[CommitEntry] = []

    def _build_hints(
        self, goals: list[int]
    ) -> tuple[list[list[int]], list[list[int]]] | None:
        """Reuse hints: the previous plan's states at steps h+1..w (location
        and orientation), minus agents whose goal changed meanwhile."""
        cfg = self.cfg
        if not cfg.reuse or self._prev_plan is None or cfg.w == cfg.h:
            return None
        plan, old_goals = self._prev_plan, self._prev_goals
        n = plan.n
        cells: list[list[int]] = []
        faces: list[list[int]] = []
        for k in range(cfg.w - cfg.h):
            keep = [goals[i] == old_goals[i] for i in range(n)]
            cells.append([
                plan.locs[i][cfg.h + k + 1] if keep[i] else -1 for i in range(n)
            ])
            faces.append([
                plan.oris[i][cfg.h + k + 1] if keep[i] else -1 for i in range(n)
            ])
        return cells, faces

    def plan_cycle(
        self,
        locs: list[int],
        oris: list[int],
        goals: list[int],
        priorities: PriorityState,
    ) -> CycleResult:
        cfg = self.cfg
        wall = cfg.time_per_step is not None
        start = time.monotonic()
        allotted = None
        time_left = None
        if wall:
            allotted = cfg.time_per_step * (1 if self._first_cycle else cfg.h)
        hint_pair = self._build_hints(goals)
        hints, hint_oris = hint_pair if hint_pair is not None else (None, None)
        log: list[CommitEntry] = []
        refine = self.algorithm == "wppl"
        if wall and refine:
            # PIBT spends part of the slot; refinement gets the remainder,
            # minus headroom for plan extraction so the cycle lands inside
            # its slot instead of costing a lost step.
            pre = time.monotonic()
            locs_seq, oris_seq, _ = pibt_rollout(
                self.pibt, locs, oris, goals, priorities, cfg.w, hints, hint_oris)
            plan = rollout_to_plan(locs_seq, oris_seq, cfg.w, goals,
                                   self.guidance, self.tables)
            initial = plan.objective
            headroom = min(0.08 * allotted, 0.05)
            time_left = max(0.0, allotted - headroom - (time.monotonic() - pre))
            if time_left > 0:
                disabled = list(priorities.disabled)
                if cfg.workers == 1:
                    plan = lns_refine(
                        plan, goals, self.guidance, self.tables, 0, self._rng,
                        self.grid, self.model, cfg.neighborhood_size, disabled,
                        time_left, log)
                else:
                    plan = parallel_refine(
                        plan, goals, self.guidance, self.tables, self.grid,
                        self.model, cfg.workers, self._seed_seq, 0, time_left,
                        cfg.neighborhood_size, disabled, log)
        else:
            plan, initial = plan_window(
                self.pibt, locs, oris, goals, priorities, self.guidance,
                self.tables, cfg, self._rng, hints, refine, None, log,
                self._seed_seq, hint_oris)
        elapsed = time.monotonic() - start
        overrun = 0
        if wall and elapsed > allotted:
            overrun = math.ceil((elapsed - allotted) / cfg.time_per_step)
        self._prev_plan = plan
        self._prev_goals = list(goals)
        self._first_cycle = False
        self.commit_log.extend(log)
        steps_locs = [[plan.locs[i][t] for i in range(plan.n)]
                      for t in range(1, cfg.h + 1)]
        steps_oris = [[plan.oris[i][t] for i in range(plan.n)]
                      for t in range(1, cfg.h + 1)]
        return CycleResult(steps_locs, steps_oris, elapsed, overrun, log,
                           initial, plan.objective)

    @property
    def h(self) -> int:
        return self.cfg.h
