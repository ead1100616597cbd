"""Acceptance suite: one test per criterion, one printed line per criterion.

Run with `pytest tests/test_acceptance.py -v -s` to see the PASS/FAIL lines.
The whole module is CPU-heavy (tens of minutes on one core): it simulates
hundreds of desk-scale lifelong runs. Criterion 11 requires real parallel
hardware; on a single-CPU host it fails honestly (see the note at the test).
"""
from __future__ import annotations

import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from lmapf.config import derive_seeds
from lmapf.domain import ActionModel, Instance, check_joint_locations
from lmapf.guidance import (
    GuidanceGraph,
    crisscross_guidance,
    load_weights,
    save_weights,
    uniform_guidance,
)
from lmapf.heuristic import DistanceTables, build_table
from lmapf.lns import WindowedPlan, eval_objective
from lmapf.maps import deadend_map, random_agents, random_map, warehouse_map
from lmapf.pibt import Pibt, PriorityState, pibt_rollout
from lmapf.simulator import UniformRandomAssigner, simulate, validate_trajectory
from lmapf.wppl import (
    DisablePolicy,
    WpplConfig,
    WpplPlanner,
    parallel_refine,
    plan_window,
    rollout_to_plan,
)

from .test_heuristic import bellman_ford_fourway, bellman_ford_rotation


def criterion(num: int, ok: bool, detail: str) -> None:
    print(f"\n[criterion {num:2d}] {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


# Shared worlds; distance tables are reused across runs of one configuration.
RANDOM32 = random_map(32, 32, 0.2, seed=0)          # 813 free cells
WAREHOUSE = warehouse_map(33, 57)                   # 1236 free cells
DEADEND = deadend_map(11, 41, stub_depth=3, stub_gap=1)  # 237 free, 38 deadends

_TABLES: dict = {}


def tables_for(key: str, grid, guidance, model) -> DistanceTables:
    k = (key, model)
    if k not in _TABLES:
        _TABLES[k] = DistanceTables(grid, guidance, model)
    return _TABLES[k]


def run_once(
    grid,
    gkey: str,
    guidance: GuidanceGraph,
    n: int,
    model: ActionModel,
    algorithm: str,
    steps: int,
    seed: int,
    w: int = 10,
    h: int = 3,
    iterations: int = 400,
    reuse: bool = True,
    policy: DisablePolicy | None = None,
    workers: int = 1,
    record: bool = False,
):
    agents = random_agents(grid, n, seed=seed + 1000)
    if model == ActionModel.FOUR_WAY:
        agents = [type(a)(a.location, 0) for a in agents]
    instance = Instance(grid, tuple(agents), model)
    seeds = derive_seeds(seed)
    cfg = WpplConfig(w=w, h=h, iterations=iterations, reuse=reuse,
                     workers=workers, disable=policy or DisablePolicy(),
                     seed=seeds.planner)
    planner = WpplPlanner(grid, guidance, cfg, model, algorithm,
                          tables_for(gkey, grid, guidance, model))
    assigner = UniformRandomAssigner(grid, seeds.assigner)
    metrics, trajectory = simulate(
        instance, planner, assigner, steps, cfg.disable,
        seeds.policy, seeds.priorities, record_trajectory=record)
    return metrics, trajectory, planner


def mean_throughput(seeds, **kwargs) -> float:
    return float(np.mean([run_once(seed=s, **kwargs)[0].throughput for s in seeds]))


class TestCriterion01Safety:
    def test_safety_100_runs(self):
        densities = (0.25, 0.50, 0.75)
        algorithms = ("pibt", "wppl")
        models = (ActionModel.ROTATION, ActionModel.FOUR_WAY)
        combos = [(d, a, m) for d in densities for a in algorithms for m in models]
        runs = 0
        checked_steps = 0
        for rep in range(9):
            for d, algorithm, model in combos:
                if runs >= 100:
                    break
                n = int(RANDOM32.free_count * d)
                record = rep == 0  # re-validate one full trajectory per combo
                metrics, trajectory, _ = run_once(
                    RANDOM32, "r32-uni", uniform_guidance(RANDOM32), n, model,
                    algorithm, 500, seed=rep * 101 + runs,
                    w=6, h=3, iterations=10, record=record)
                # The simulator validates every executed joint step and raises
                # on any conflict; reaching here means all 500 steps passed.
                checked_steps += metrics.steps
                if record:
                    assert validate_trajectory(RANDOM32, trajectory, model) == []
                runs += 1
        criterion(1, runs == 100,
                  f"{runs} runs x 500 steps, {checked_steps} validated joint "
                  f"steps, zero vertex/swap conflicts")


class TestCriterion02HeuristicOracle:
    MAPS = [
        ("open4", ["....", "....", "....", "...."]),
        ("wall5", [".....", ".@@@.", ".....", ".@@@.", "....."]),
        ("deadend6", ["......", "@@@@@.", "......", ".@@@@@", "......", "......"]),
        ("stubs7", ["...@...", ".@.@.@.", ".@...@.", ".@@@@@.", ".......",
                    ".@.@.@.", "......."]),
        ("spiral9", ["........." ,".@@@@@@@.", ".@......." , ".@.@@@@@.",
                     ".@.@...@.", ".@.@@@.@.", ".@.....@.", ".@@@@@@@.",
                     "........."]),
        ("rooms10", [".........." , "@@@@.@@@@@", ".........." , ".@@@@@@@@.",
                     ".........." , "@@@@@.@@@@", ".........." , ".@@@@@@@@.",
                     ".........." , ".........."]),
    ]

    def test_tables_match_bellman_ford(self):
        from lmapf.domain import GridMap

        rng = np.random.default_rng(7)
        states_checked = 0
        for name, rows in self.MAPS:
            grid = GridMap.from_rows(rows)
            move = np.where(np.isfinite(uniform_guidance(grid).move_np),
                            rng.integers(1, 9, size=(grid.n_cells, 4)) / 8.0,
                            math.inf)
            wait = np.where(np.isfinite(uniform_guidance(grid).wait_np),
                            rng.integers(1, 9, size=grid.n_cells) / 8.0,
                            math.inf)
            guidances = [uniform_guidance(grid), crisscross_guidance(grid),
                         GuidanceGraph(grid, move, wait)]
            goals = grid.free_ids if grid.free_count <= 30 else [
                grid.free_ids[int(k)] for k in
                rng.choice(len(grid.free_ids), size=12, replace=False)]
            for guidance in guidances:
                for goal in goals:
                    table = build_table(grid, guidance, goal, ActionModel.ROTATION)
                    oracle = bellman_ford_rotation(grid, guidance, goal)
                    assert table.dist == oracle, (name, goal)
                    states_checked += len(oracle)
                    table4 = build_table(grid, guidance, goal, ActionModel.FOUR_WAY)
                    oracle4 = bellman_ford_fourway(grid, guidance, goal)
                    assert table4.dist == oracle4, (name, goal)
                    states_checked += len(oracle4)
        criterion(2, True,
                  f"{len(self.MAPS)} maps x 3 guidance graphs: {states_checked} "
                  f"product states equal the Bellman-Ford oracle exactly")


class TestCriterion03LnsMonotonicity:
    def test_commit_logs_and_budget_zero(self):
        checked = 0
        for grid, gkey, n, seed in ((WAREHOUSE, "wh-uni", 300, 3),
                                    (RANDOM32, "r32-uni", 406, 4)):
            guidance = uniform_guidance(grid)
            tables = tables_for(gkey, grid, guidance, ActionModel.ROTATION)
            agents = random_agents(grid, n, seed=seed)
            locs = [a.location for a in agents]
            oris = [a.orientation for a in agents]
            rng = np.random.default_rng(seed)
            goals = [int(g) for g in rng.choice(grid.free_ids, size=n)]
            priorities = PriorityState.fresh(n, seed=seed)
            pibt = Pibt(grid, tables, ActionModel.ROTATION)

            cfg0 = WpplConfig(w=10, h=3, iterations=0, seed=seed)
            plan0, initial0 = plan_window(pibt, locs, oris, goals, priorities,
                                          guidance, tables, cfg0,
                                          np.random.default_rng(seed))
            seq = pibt_rollout(Pibt(grid, tables, ActionModel.ROTATION),
                               locs, oris, goals, priorities, 10)
            reference = rollout_to_plan(seq[0], seq[1], 10, goals, guidance, tables)
            assert plan0.locs == reference.locs and plan0.oris == reference.oris

            log = []
            cfg = WpplConfig(w=10, h=3, iterations=400, seed=seed)
            plan, initial = plan_window(pibt, locs, oris, goals, priorities,
                                        guidance, tables, cfg,
                                        np.random.default_rng(seed), log=log)
            accepted = [e for e in log if e.accepted]
            assert accepted, "refinement found no improvement at all"
            for e in accepted:
                assert e.objective_after < e.objective_before
            for prev, cur in zip(accepted, accepted[1:]):
                assert cur.objective_after < prev.objective_after
            assert plan.objective <= initial
            plan.validate(grid, ActionModel.ROTATION)
            assert eval_objective(plan, goals, guidance, tables) == pytest.approx(
                plan.objective)
            checked += len(accepted)
        criterion(3, True,
                  f"accepted objectives strictly decrease ({checked} commits over "
                  f"2 instances); budget 0 reproduces the PIBT rollout bit-exactly")


class TestCriterion04AnytimeTrend:
    def test_throughput_non_decreasing_in_budget(self):
        budgets = (0, 1000, 5000, 25000)
        steps, h = 240, 3
        cycles = -(-steps // h)
        means = []
        for total in budgets:
            per = max(0, round(total / cycles))
            means.append(mean_throughput(
                range(1, 6), grid=WAREHOUSE, gkey="wh-uni",
                guidance=uniform_guidance(WAREHOUSE), n=300,
                model=ActionModel.ROTATION, algorithm="wppl", steps=steps,
                w=10, h=h, iterations=per))
        inversions = [
            (means[i + 1] - means[i]) / means[i]
            for i in range(len(means) - 1) if means[i + 1] < means[i]
        ]
        ok = len(inversions) == 0 or (
            len(inversions) == 1 and inversions[0] > -0.02)
        detail = " -> ".join(f"{m:.3f}" for m in means)
        criterion(4, ok, f"budgets {budgets}: mean throughput {detail} "
                         f"(inversions: {[f'{v:.1%}' for v in inversions]})")


class TestCriterion05WindowTrend:
    def test_throughput_non_decreasing_in_window(self):
        windows = (1, 5, 10, 15, 20)
        steps = 100
        total = 20000
        per = max(0, round(total / steps))
        seeds = range(1, 4)
        means = []
        for w in windows:
            means.append(mean_throughput(
                seeds, grid=WAREHOUSE, gkey="wh-uni",
                guidance=uniform_guidance(WAREHOUSE), n=300,
                model=ActionModel.ROTATION, algorithm="wppl", steps=steps,
                w=w, h=1, iterations=per))
        pibt_mean = mean_throughput(
            seeds, grid=WAREHOUSE, gkey="wh-uni",
            guidance=uniform_guidance(WAREHOUSE), n=300,
            model=ActionModel.ROTATION, algorithm="pibt", steps=steps)
        inversions = [
            (means[i + 1] - means[i]) / means[i]
            for i in range(len(means) - 1) if means[i + 1] < means[i]
        ]
        ok = len(inversions) == 0 or (
            len(inversions) == 1 and inversions[0] > -0.02)
        crossover = next((w for w, m in zip(windows, means) if m > pibt_mean), None)
        detail = " -> ".join(f"{m:.3f}" for m in means)
        criterion(5, ok,
                  f"windows {windows}: {detail}; PIBT {pibt_mean:.3f}, WPPL "
                  f"overtakes at w={crossover} "
                  f"(inversions: {[f'{v:.1%}' for v in inversions]})")


class TestCriterion06GuidanceEffect:
    def test_crisscross_improves_pibt(self):
        kwargs = dict(grid=WAREHOUSE, n=300, model=ActionModel.ROTATION,
                      algorithm="pibt", steps=300)
        uni = mean_throughput(range(1, 6), gkey="wh-uni",
                              guidance=uniform_guidance(WAREHOUSE), **kwargs)
        cc = mean_throughput(range(1, 6), gkey="wh-cc",
                             guidance=crisscross_guidance(WAREHOUSE), **kwargs)
        gain = cc / uni - 1
        criterion(6, gain >= 0.20,
                  f"PIBT on warehouse, 5 seeds: uniform {uni:.3f} -> crisscross "
                  f"{cc:.3f} ({gain:+.1%}, required >= +20%; the full-scale "
                  f"reference effect is 2.9x)")


class TestCriterion07DisablingEffect:
    def test_deadend_parking_helps(self):
        n = int(DEADEND.free_count * 0.85)
        kwargs = dict(grid=DEADEND, gkey="dd-uni",
                      guidance=uniform_guidance(DEADEND), n=n,
                      model=ActionModel.ROTATION, algorithm="pibt", steps=400)
        off = mean_throughput(range(1, 6), policy=DisablePolicy(), **kwargs)
        on = mean_throughput(range(1, 6),
                             policy=DisablePolicy("deadend_goals"), **kwargs)
        gain = on / off - 1
        criterion(7, on >= off,
                  f"deadend comb at 85% density, 5 seeds: no-disabling {off:.3f}"
                  f" vs deadend-goals {on:.3f} ({gain:+.1%})")


class TestCriterion08ActionModelGap:
    def test_fourway_at_least_rotation(self):
        kwargs = dict(grid=RANDOM32, n=406, algorithm="pibt", steps=300,
                      guidance=uniform_guidance(RANDOM32))
        rot = mean_throughput(range(1, 6), gkey="r32-uni",
                              model=ActionModel.ROTATION, **kwargs)
        four = mean_throughput(range(1, 6), gkey="r32-uni",
                               model=ActionModel.FOUR_WAY, **kwargs)
        criterion(8, four >= rot,
                  f"same 50%-density instance, 5 seeds: four-way {four:.3f} >= "
                  f"rotation {rot:.3f} (gap {four / rot - 1:+.1%})")


class TestCriterion09ReuseEffect:
    def test_reuse_not_worse(self):
        results = {}
        for label, n in (("50%", 406), ("73%", 593)):
            vals = {}
            for reuse in (True, False):
                vals[reuse] = mean_throughput(
                    range(1, 6), grid=RANDOM32, gkey="r32-uni",
                    guidance=uniform_guidance(RANDOM32), n=n,
                    model=ActionModel.ROTATION, algorithm="wppl", steps=100,
                    w=12, h=2, iterations=150, reuse=reuse)
            results[label] = vals
        ok = all(v[True] >= 0.98 * v[False] for v in results.values())
        detail = "; ".join(
            f"{label}: on {v[True]:.3f} vs off {v[False]:.3f} "
            f"({v[True] / v[False] - 1:+.1%})"
            for label, v in results.items())
        criterion(9, ok, f"reuse effect at 5 seeds: {detail} "
                         f"(required: on >= off - 2% relative)")


class TestCriterion10Determinism:
    def test_byte_identical_outputs(self, tmp_path):
        from lmapf.maps import save_agents, save_map

        map_path = tmp_path / "m.map"
        agents_path = tmp_path / "a.txt"
        save_map(RANDOM32, str(map_path))
        save_agents(random_agents(RANDOM32, 203, seed=5), RANDOM32,
                    str(agents_path))
        args = [
            sys.executable, "-m", "lmapf.cli", "run",
            "--map", str(map_path), "--agents", str(agents_path),
            "--algorithm", "wppl", "-w", "8", "-h", "2",
            "--iterations", "60", "--steps", "60", "--seed", "11",
            "--workers", "1", "--disable-policy", "random_k",
            "--disable-k", "20",
        ]
        env = dict(os.environ)
        env.pop("LMAPF_OUT", None)
        for out in ("d1", "d2"):
            subprocess.run(args + ["--out", str(tmp_path / out)],
                           check=True, capture_output=True, env=env)
        same = all(
            (tmp_path / "d1" / name).read_bytes()
            == (tmp_path / "d2" / name).read_bytes()
            for name in ("trajectory.txt", "metrics.json")
        )
        criterion(10, same,
                  "workers=1, iteration budget, fixed root seed: trajectory.txt "
                  "and metrics.json byte-identical across two CLI runs")


class TestCriterion11ParallelContract:
    def test_eight_workers_commit_3x(self):
        # NOTE: this host exposes a single CPU; eight forked workers share one
        # core, so proposal throughput cannot exceed the serial rate and the
        # 3x bar is physically out of reach here. The criterion is asserted
        # as specified and fails honestly on such hosts.
        guidance = uniform_guidance(WAREHOUSE)
        tables = tables_for("wh-uni", WAREHOUSE, guidance, ActionModel.ROTATION)
        n = 300
        commits = {1: 0, 8: 0}
        for workers in (1, 8):
            for rep in range(3):
                agents = random_agents(WAREHOUSE, n, seed=rep + 60)
                locs = [a.location for a in agents]
                oris = [a.orientation for a in agents]
                rng = np.random.default_rng(rep)
                goals = [int(g) for g in rng.choice(WAREHOUSE.free_ids, size=n)]
                priorities = PriorityState.fresh(n, seed=rep)
                pibt = Pibt(WAREHOUSE, tables, ActionModel.ROTATION)
                seq = pibt_rollout(pibt, locs, oris, goals, priorities, 10)
                plan = rollout_to_plan(seq[0], seq[1], 10, goals, guidance, tables)
                log = []
                out = parallel_refine(
                    plan, goals, guidance, tables, WAREHOUSE,
                    ActionModel.ROTATION, workers,
                    np.random.SeedSequence(rep), 0, 0.2,
                    log=log)
                accepted = [e for e in log if e.accepted]
                for prev, cur in zip(accepted, accepted[1:]):
                    assert cur.objective_after < prev.objective_after  # criterion 3
                out.validate(WAREHOUSE, ActionModel.ROTATION)
                commits[workers] += len(accepted)
        ratio = commits[8] / commits[1] if commits[1] else math.inf
        criterion(11, commits[8] >= 3 * commits[1],
                  f"200 ms budget x3 windows: 1 worker committed {commits[1]}, "
                  f"8 workers committed {commits[8]} (ratio {ratio:.2f}, "
                  f"required >= 3.0; host has {os.cpu_count()} CPU)")
