"""Lifelong multi-agent path finding on grids with rotation kinematics.

Planning stack: windowed PIBT rollouts refined by anytime large-neighborhood
search (optionally over parallel workers), biased by guidance-graph edge
weights, executed by a validating lifelong simulator.
"""
from .domain import (
    Action,
    ActionModel,
    AgentState,
    Conflict,
    GridMap,
    IllegalForward,
    Instance,
    ParseError,
    apply_action,
    check_joint_step,
    turn_toward,
)
from .guidance import (
    GuidanceGraph,
    NonPositiveWeight,
    crisscross_guidance,
    load_weights,
    save_weights,
    uniform_guidance,
)
from .heuristic import DistanceTable, DistanceTables, build_table, distance
from .lns import (
    CommitEntry,
    Neighborhood,
    ReservationTable,
    WindowedPlan,
    eval_objective,
    lns_refine,
    replan_neighborhood,
    select_neighborhood,
)
from .pibt import Pibt, PriorityState, StepIntent, pibt_rollout, update_priorities
from .simulator import (
    InvalidJointAction,
    RunMetrics,
    ScriptedAssigner,
    UniformRandomAssigner,
    export_heatmap,
    simulate,
)
from .wppl import (
    CycleResult,
    DisablePolicy,
    PlanOverrun,
    WpplConfig,
    WpplPlanner,
    apply_disable_policy,
    parallel_refine,
    plan_window,
)

__version__ = "0.1.0"
