"""Benchmark harness entry point: run, sweep, serve, validate, make-map."""
from __future__ import annotations

import csv
import json
import os
import sys

import click

from .config import OUTPUT_DIR_ENV, RunConfig, derive_seeds, load_config, load_world
from .domain import ActionModel, ParseError
from .guidance import NonPositiveWeight
from .maps import (
    deadend_map,
    load_agents,
    load_map,
    random_agents,
    random_map,
    save_agents,
    save_map,
    warehouse_map,
)
from .simulator import (
    InvalidJointAction,
    UniformRandomAssigner,
    export_heatmap,
    load_trajectory,
    save_trajectory,
    simulate,
    validate_trajectory,
)
from .wppl import WpplPlanner


def _config_options(fn):
    opts = [
        click.option("--config", "config_path", type=click.Path(exists=True),
                     default=None, help="JSON config file; flags override it."),
        click.option("--map", "map_", default=None, help="Map file."),
        click.option("--agents", default=None, help="Agent start file."),
        click.option("--weights", default=None,
                     help="Guidance weight file (omit for uniform weights)."),
        click.option("--algorithm", type=click.Choice(["pibt", "wppl"]), default=None),
        click.option("--model", "action_model",
                     type=click.Choice(["rotation", "fourway"]), default=None),
        click.option("--steps", type=int, default=None),
        click.option("--seed", type=int, default=None),
        click.option("-w", "--window", "w", type=int, default=None,
                     help="Planning window length."),
        click.option("-h", "--period", "h", type=int, default=None,
                     help="Replan period (steps executed per window)."),
        click.option("--iterations", type=int, default=None,
                     help="LNS iterations per replan."),
        click.option("--total-iterations", type=int, default=None,
                     help="LNS iteration budget for the whole run "
                          "(spread over replans; overrides --iterations)."),
        click.option("--time-per-step", type=float, default=None,
                     help="Wall-time budget in seconds per step "
                          "(switches to wall-time mode)."),
        click.option("--workers", type=int, default=None),
        click.option("--reuse/--no-reuse", "reuse", default=None),
        click.option("--neighborhood-size", type=int, default=None),
        click.option("--disable-policy",
                     type=click.Choice(["none", "deadend_goals", "random_k"]),
                     default=None),
        click.option("--disable-k", type=int, default=None),
        click.option("--out", default=None,
                     help=f"Output directory (env {OUTPUT_DIR_ENV} overrides)."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _build_config(config_path, **overrides) -> RunConfig:
    overrides["map"] = overrides.pop("map_", None)
    try:
        return load_config(config_path, overrides)
    except (ParseError, ValueError, OSError) as e:
        raise click.ClickException(str(e))


def execute_run(cfg: RunConfig, record_trajectory: bool = True):
    instance, guidance = load_world(cfg)
    seeds = derive_seeds(cfg.seed)
    wcfg = cfg.wppl_config(seeds.planner)
    planner = WpplPlanner(instance.grid, guidance, wcfg, instance.action_model,
                          cfg.algorithm)
    assigner = UniformRandomAssigner(instance.grid, seeds.assigner)
    metrics, trajectory = simulate(
        instance, planner, assigner, cfg.steps, wcfg.disable,
        seeds.policy, seeds.priorities, record_trajectory)
    return instance, planner, metrics, trajectory


def write_outputs(cfg: RunConfig, instance, planner, metrics, trajectory) -> None:
    out = cfg.out
    os.makedirs(out, exist_ok=True)

    def dump(name: str, doc) -> None:
        with open(os.path.join(out, name), "w", encoding="ascii") as fh:
            json.dump(doc, fh, sort_keys=True, indent=1)
            fh.write("\n")

    dump("config.json", cfg.to_dict())
    dump("metrics.json", metrics.summary())
    total_planning = sum(metrics.planning_times)
    dump("timings.json", {
        "planning_times": metrics.planning_times,
        "total_planning_time": total_planning,
        "mean_planning_time_per_step": total_planning / metrics.steps,
    })
    export_heatmap(metrics, instance.grid, os.path.join(out, "heatmap.json"))
    if trajectory:
        save_trajectory(os.path.join(out, "trajectory.txt"), trajectory,
                        instance.grid)
    with open(os.path.join(out, "commits.jsonl"), "w", encoding="ascii") as fh:
        for e in planner.commit_log:
            fh.write(json.dumps({
                "iteration": e.iteration,
                "worker": e.worker,
                "members": list(e.members),
                "objective_before": e.objective_before,
                "objective_after": e.objective_after,
                "accepted": e.accepted,
            }, sort_keys=True) + "\n")


@click.group()
@click.version_option(package_name="lmapf")
def main():
    """Lifelong multi-agent path finding: planners, simulator, benchmarks."""


@main.command()
@_config_options
def run(config_path, **overrides):
    """Simulate one instance and write metrics, heatmap, trajectory, commits."""
    cfg = _build_config(config_path, **overrides)
    try:
        instance, planner, metrics, trajectory = execute_run(cfg)
    except (ParseError, NonPositiveWeight, ValueError) as e:
        raise click.ClickException(str(e))
    except InvalidJointAction as e:
        raise click.ClickException(f"invalid joint action: {e}")
    write_outputs(cfg, instance, planner, metrics, trajectory)
    click.echo(f"throughput {metrics.throughput:.4f} "
               f"({metrics.goals_reached} goals / {metrics.steps} steps) -> {cfg.out}")


@main.command()
@click.option("--parameter", type=click.Choice(["window", "agents", "time_budget"]),
              required=True)
@click.option("--values", required=True,
              help="Comma-separated parameter values, e.g. 1,5,10,15,20.")
@_config_options
def sweep(parameter, values, config_path, **overrides):
    """Run the base config once per value; write a plottable table."""
    base = _build_config(config_path, **overrides)
    try:
        parsed = [float(v) if parameter == "time_budget" and base.time_per_step
                  else int(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise click.ClickException(f"bad values list {values!r}")
    if not parsed:
        raise click.ClickException("values list is empty")
    os.makedirs(base.out, exist_ok=True)
    rows = []
    for value in parsed:
        cfg_dict = base.to_dict()
        cfg_dict["out"] = os.path.join(base.out, f"{parameter}_{value}")
        if parameter == "window":
            cfg_dict["w"] = int(value)
            cfg_dict["h"] = min(base.h, int(value))
        elif parameter == "agents":
            n_total = len(load_agents(base.agents, load_map(base.map)))
            if not 0 < value <= n_total:
                raise click.ClickException(
                    f"active agent count {value} out of range 1..{n_total}")
            cfg_dict["disable_policy"] = "random_k"
            cfg_dict["disable_k"] = n_total - int(value)
        else:  # time_budget
            if base.time_per_step is not None:
                cfg_dict["time_per_step"] = float(value)
            else:
                cfg_dict["total_iterations"] = int(value)
        cfg = RunConfig(**cfg_dict)
        try:
            instance, planner, metrics, trajectory = execute_run(
                cfg, record_trajectory=False)
        except InvalidJointAction as e:
            raise click.ClickException(f"invalid joint action: {e}")
        rows.append({
            "value": value,
            "throughput": metrics.throughput,
            "goals_reached": metrics.goals_reached,
            "steps": metrics.steps,
            "lost_steps": metrics.lost_steps,
            "mean_planning_time_per_step":
                sum(metrics.planning_times) / metrics.steps,
        })
        click.echo(f"{parameter}={value}: throughput {metrics.throughput:.4f}")
    table = os.path.join(base.out, f"sweep_{parameter}.csv")
    with open(table, "w", newline="", encoding="ascii") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    click.echo(f"table -> {table}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8927)
@_config_options
def serve(host, port, config_path, **overrides):
    """Serve the guidance-tuning endpoints for the studio UI."""
    from .serve import ServeState, make_server

    cfg = _build_config(config_path, **overrides)
    try:
        instance, guidance = load_world(cfg)
    except (ParseError, NonPositiveWeight, ValueError) as e:
        raise click.ClickException(str(e))
    state = ServeState(cfg, instance, guidance)
    server = make_server(state, host, port)
    click.echo(f"serving on http://{host}:{server.server_address[1]} "
               f"(map {cfg.map}, {instance.n} agents)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()


@main.command()
@click.option("--map", "map_", required=True, type=click.Path(exists=True))
@click.option("--trajectory", required=True, type=click.Path(exists=True))
@click.option("--model", type=click.Choice(["rotation", "fourway"]),
              default="rotation")
def validate(map_, trajectory, model):
    """Re-check a recorded trajectory against the map and collision rules."""
    try:
        grid = load_map(map_)
        steps = load_trajectory(trajectory, grid)
    except ParseError as e:
        raise click.ClickException(str(e))
    m = ActionModel.ROTATION if model == "rotation" else ActionModel.FOUR_WAY
    problems = validate_trajectory(grid, steps, m)
    if problems:
        for p in problems[:20]:
            click.echo(p)
        raise click.ClickException(
            f"{len(problems)} violations in {len(steps) - 1} steps")
    click.echo(f"ok: {len(steps) - 1} steps, no violations")


@main.command("make-map")
@click.option("--kind", type=click.Choice(["random", "warehouse", "deadend"]),
              default="random")
@click.option("--height", type=int, default=32)
@click.option("--width", type=int, default=32)
@click.option("--obstacle-ratio", type=float, default=0.2,
              help="Random maps only.")
@click.option("--seed", type=int, default=0)
@click.option("--n-agents", type=int, default=100)
@click.option("--out-map", required=True)
@click.option("--out-agents", required=True)
def make_map(kind, height, width, obstacle_ratio, seed, n_agents, out_map,
             out_agents):
    """Generate a benchmark map plus a matching random agent file."""
    if kind == "random":
        grid = random_map(height, width, obstacle_ratio, seed)
    elif kind == "warehouse":
        grid = warehouse_map(height, width)
    else:
        grid = deadend_map(height, width)
    if n_agents > grid.free_count:
        raise click.ClickException(
            f"{n_agents} agents > {grid.free_count} free cells")
    agents = random_agents(grid, n_agents, seed=seed + 1)
    save_map(grid, out_map)
    save_agents(agents, grid, out_agents)
    click.echo(f"{grid!r} -> {out_map}; {n_agents} agents -> {out_agents}")


if __name__ == "__main__":
    main()
