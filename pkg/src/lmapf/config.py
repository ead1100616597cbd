"""Run configuration: file schema, flag overrides, seed stream discipline.

A run config can come fully from a JSON file, fully from CLI flags, or any
mix (flags win). Every stochastic component of a run draws from one root
seed, split in a fixed documented order, so an entire experiment is pinned
by a single integer.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from .domain import ActionModel, Instance, ParseError
from .guidance import GuidanceGraph, load_weights, uniform_guidance
from .maps import load_agents, load_map
from .wppl import DisablePolicy, WpplConfig

OUTPUT_DIR_ENV = "LMAPF_OUT"

_DEFAULTS = {
    "map": None,
    "agents": None,
    "weights": None,
    "algorithm": "wppl",
    "action_model": "rotation",
    "steps": 500,
    "seed": 0,
    "w": 10,
    "h": 3,
    "iterations": 400,
    "total_iterations": None,
    "time_per_step": None,
    "workers": 1,
    "reuse": True,
    "neighborhood_size": 8,
    "disable_policy": "none",
    "disable_k": 0,
    "out": "out",
}


@dataclass
class RunConfig:
    map: str
    agents: str
    weights: str | None = None
    algorithm: str = "wppl"
    action_model: str = "rotation"
    steps: int = 500
    seed: int = 0
    w: int = 10
    h: int = 3
    iterations: int = 400
    total_iterations: int | None = None
    time_per_step: float | None = None
    workers: int = 1
    reuse: bool = True
    neighborhood_size: int = 8
    disable_policy: str = "none"
    disable_k: int = 0
    out: str = "out"

    def __post_init__(self):
        if self.algorithm not in ("pibt", "wppl"):
            raise ValueError(f"algorithm must be pibt or wppl, got {self.algorithm!r}")
        if self.action_model not in ("rotation", "fourway"):
            raise ValueError(f"action_model must be rotation or fourway")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if os.environ.get(OUTPUT_DIR_ENV):
            self.out = os.environ[OUTPUT_DIR_ENV]

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def model(self) -> ActionModel:
        return ActionModel.ROTATION if self.action_model == "rotation" else ActionModel.FOUR_WAY

    def per_cycle_iterations(self) -> int:
        """Per-replan budget; a total budget is spread over the cycles."""
        if self.total_iterations is None:
            return self.iterations
        cycles = -(-self.steps // self.h)
        return max(0, round(self.total_iterations / cycles))

    def wppl_config(self, planner_seed: int) -> WpplConfig:
        policy = DisablePolicy(
            {"none": "none", "deadend_goals": "deadend_goals",
             "random_k": "random_k"}[self.disable_policy],
            k=self.disable_k,
        )
        return WpplConfig(
            w=self.w,
            h=self.h,
            iterations=self.per_cycle_iterations(),
            time_per_step=self.time_per_step,
            workers=self.workers,
            reuse=self.reuse,
            neighborhood_size=self.neighborhood_size,
            disable=policy,
            seed=planner_seed,
        )


def load_config(path: str | None, overrides: dict) -> RunConfig:
    """Merge defaults < config file < non-None overrides."""
    merged = dict(_DEFAULTS)
    if path is not None:
        with open(path, "r", encoding="ascii") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as e:
                raise ParseError(f"{path}:{e.lineno}: {e.msg}") from None
        unknown = set(doc) - set(_DEFAULTS)
        if unknown:
            raise ParseError(f"{path}: unknown config fields {sorted(unknown)}")
        merged.update(doc)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    if merged["map"] is None or merged["agents"] is None:
        raise ValueError("a map file and an agent file are required")
    return RunConfig(**merged)


@dataclass(frozen=True)
class SeedStreams:
    """Fixed split order of the root seed: assigner, planner, policy, priorities."""

    assigner: int
    planner: int
    policy: int
    priorities: int


def derive_seeds(root: int) -> SeedStreams:
    children = np.random.SeedSequence(root).spawn(4)
    vals = [int(c.generate_state(1)[0]) for c in children]
    return SeedStreams(*vals)


def load_world(cfg: RunConfig) -> tuple[Instance, GuidanceGraph]:
    grid = load_map(cfg.map)
    agents = load_agents(cfg.agents, grid)
    if cfg.model == ActionModel.FOUR_WAY:
        agents = [type(a)(a.location, 0) for a in agents]
    instance = Instance(grid, tuple(agents), cfg.model)
    if cfg.weights:
        guidance = load_weights(grid, cfg.weights)
    else:
        guidance = uniform_guidance(grid)
    return instance, guidance
