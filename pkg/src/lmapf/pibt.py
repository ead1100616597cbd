"""Priority inheritance with backtracking, adapted to rotation kinematics.

Agents are processed in decreasing priority; each picks a next location and
recursively pushes lower-priority occupants out of the way. Next locations
are planned like the classic location-only algorithm, via target
reservations: one agent per target cell, no two agents exchanging cells.
Rotation kinematics add a second layer: each agent also reserves the cell it
REALIZES after its first action (the target when aligned and the way is
clear, its own cell while it still has to turn), and realized cells are what
executed-step collision-freeness rides on. A pusher decides its realized
cell only after the pushed agent has resolved: if the pushee merely turns in
place this step, the pusher holds position too while the chain of intents
stands, so traffic advances as a wave; a chain whose members are all aligned
moves in one step, and an all-aligned push cycle rotates in lockstep.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

from .domain import Action, ActionModel, GridMap, rotate_ccw, rotate_cw, turn_toward
from .heuristic import DistanceTables


@dataclass
class PriorityState:
    """Per-agent scheduling weight: steps since last goal plus a fixed tiebreak.

    Disabled agents rank strictly below every enabled agent.
    """

    elapsed: list[int]
    tiebreak: list[float]
    disabled: list[bool]

    @classmethod
    def fresh(cls, n: int, seed: int = 0) -> "PriorityState":
        rng = np.random.default_rng(seed)
        tiebreak = (rng.permutation(n) / n).tolist()
        return cls([0] * n, tiebreak, [False] * n)

    def effective(self) -> list[float]:
        return [
            -1.0 - tb if dis else el + tb
            for el, tb, dis in zip(self.elapsed, self.tiebreak, self.disabled)
        ]


def update_priorities(priorities: PriorityState, reached) -> PriorityState:
    """Advance elapsed counters after one executed step; reached agents reset."""
    reached = set(reached)
    elapsed = [0 if i in reached else e + 1 for i, e in enumerate(priorities.elapsed)]
    return PriorityState(elapsed, priorities.tiebreak, list(priorities.disabled))


@dataclass
class StepIntent:
    """Output of one planning step.

    realized[i] is the cell agent i occupies after its first action; it
    equals target[i] only when that action is an actual move. The realized
    locations always form a collision-free joint step.
    """

    target: list[int]
    realized: list[int]
    first_action: list[Action]
    next_orientation: list[int]


class Pibt:
    """Reusable stepper; holds per-map buffers so repeated calls stay cheap."""

    def __init__(self, grid: GridMap, tables: DistanceTables,
                 model: ActionModel = ActionModel.ROTATION,
                 hint_margin: float = 0.0):
        self.grid = grid
        self.tables = tables
        self.model = model
        # A hinted cell is promoted over the greedy best only when its score
        # is within this much of the best; hints stabilize near-ties instead
        # of overriding clearly better moves.
        self.hint_margin = hint_margin
        self._occ = [-1] * grid.n_cells        # agent currently at cell
        self._res_target = [-1] * grid.n_cells  # agent that claimed cell as target
        self._res_real = [-1] * grid.n_cells    # agent whose realized cell this is

    def step(
        self,
        locs: list[int],
        oris: list[int],
        goals: list[int],
        priorities: PriorityState,
        hints: list[int] | None = None,
        hint_oris: list[int] | None = None,
    ) -> StepIntent:
        n = len(locs)
        if sys.getrecursionlimit() < 3 * n + 200:
            sys.setrecursionlimit(3 * n + 200)
        occ, res_t, res_r = self._occ, self._res_target, self._res_real
        for i, v in enumerate(locs):
            if occ[v] != -1:
                for u in locs[:i]:
                    occ[u] = -1
                raise ValueError(f"agents {occ[v]} and {i} share cell {v}")
            occ[v] = i

        rotation = self.model == ActionModel.ROTATION
        target = [-1] * n
        realized = [-1] * n
        actions = [Action.WAIT] * n
        next_ori = list(oris)
        assigned = [False] * n
        dists = [self.tables.get(g).dist for g in goals]

        move_w = self.tables.guidance.move_w
        wait_w = self.tables.guidance.wait_w

        def candidates(i: int) -> list[tuple[int, int]]:
            # Scored by the full cost-to-go through the candidate: turning
            # plus the move plus the reached state's table distance. The turn
            # term gives hysteresis: a half-finished turn keeps its candidate
            # cheapest, so crowded agents do not flip-flop between targets.
            v, o = locs[i], oris[i]
            dist = dists[i]
            wait = wait_w[v]
            if rotation:
                items = [(wait + dist[v * 4 + o], v * 4 + o, v, -1)]
                for u, d in self.grid.adjacency[v]:
                    turns = (d - o) % 4
                    if turns == 3:
                        turns = 1  # one counterclockwise step
                    items.append((turns * wait + move_w[v * 4 + d] + dist[u * 4 + d],
                                  u * 4 + d, u, d))
            else:
                items = [(wait + dist[v], v, v, -1)]
                for u, d in self.grid.adjacency[v]:
                    items.append((move_w[v * 4 + d] + dist[u], u, u, d))
            items.sort()
            hint = hints[i] if hints is not None else -1
            if hint >= 0 and hint != items[0][2]:
                limit = items[0][0] + self.hint_margin
                for k in range(1, len(items)):
                    if items[k][2] == hint:
                        if items[k][0] <= limit:
                            items.insert(0, items.pop(k))
                        break
            return [(u, d) for _, _, u, d in items]

        # Recursion stack, for resolving cycles of pushes: a cycle whose
        # members are all aligned rotates as one block this step; otherwise
        # every member holds position while turning.
        stack: list[int] = []
        stack_pos = [-1] * n
        aligned_now = [False] * n

        def solve(i: int, is_root: bool) -> bool:
            v, o = locs[i], oris[i]
            cands = candidates(i)
            # Best rejected candidate worth facing while stuck. Cells whose
            # occupant intends to move into our own cell are pointless.
            blocked_dir = -1

            def note_blocked(u: int, d: int) -> None:
                nonlocal blocked_dir
                if blocked_dir >= 0 or u == v:
                    return
                k = occ[u]
                if k != -1 and assigned[k] and target[k] == v:
                    return
                blocked_dir = d

            def finish(u: int, d: int, r: int) -> None:
                if res_r[r] != -1:
                    raise AssertionError("pibt: realized cell doubly claimed")
                res_r[r] = i
                realized[i] = r
                if u == v:
                    # Staying: replay the hinted turn if the reused plan was
                    # mid-rotation here, else face the best blocked option;
                    # turning in place costs nothing.
                    face = -1
                    if (rotation and hint_oris is not None and hints is not None
                            and hints[i] == v and hint_oris[i] >= 0):
                        face = hint_oris[i]
                    elif rotation and blocked_dir >= 0:
                        face = blocked_dir
                    if rotation and face >= 0 and face != o:
                        first = turn_toward(o, face)[0]
                        actions[i] = first
                        next_ori[i] = (rotate_cw(o) if first == Action.ROTATE_CW
                                       else rotate_ccw(o))
                    else:
                        actions[i] = Action.WAIT
                        next_ori[i] = o
                elif not rotation:
                    actions[i] = Action(int(Action.MOVE_E) + d)
                    next_ori[i] = o
                elif d != o:
                    first = turn_toward(o, d)[0]
                    actions[i] = first
                    next_ori[i] = (rotate_cw(o) if first == Action.ROTATE_CW
                                   else rotate_ccw(o))
                elif r == u:
                    actions[i] = Action.FORWARD
                    next_ori[i] = o
                else:
                    actions[i] = Action.WAIT  # aligned, waiting for u to clear
                    next_ori[i] = o

            stack_pos[i] = len(stack)
            stack.append(i)
            try:
                for u, d in cands:
                    aligned = u != v and (not rotation or d == o)
                    if res_t[u] != -1:
                        note_blocked(u, d)
                        continue
                    k = occ[u] if u != v else -1
                    if k != -1 and assigned[k] and target[k] == v:
                        continue  # the occupant intends to take our cell
                    res_t[u] = i
                    assigned[i] = True
                    target[i] = u
                    aligned_now[i] = aligned
                    if k != -1 and not assigned[k] and not solve(k, False):
                        # k stomped our claim by staying at u; back off.
                        assigned[i] = False
                        if res_t[u] == i:
                            res_t[u] = -1
                        note_blocked(u, d)
                        continue
                    # The move fires now only when the target cell actually
                    # clears this step; otherwise we turn or wait in place
                    # while the intent stands.
                    if u == v:
                        r = v
                    elif k == -1:
                        r = u if aligned else v
                    elif realized[k] != -1:
                        r = u if (aligned and realized[k] != u
                                  and res_r[u] == -1) else v
                    else:
                        # k is an ancestor still deciding: a push cycle. It
                        # rotates in lockstep only if every member is aligned.
                        members = stack[stack_pos[k]:]
                        if aligned and all(aligned_now[x] for x in members):
                            r = u
                        else:
                            r = v
                    finish(u, d, r)
                    return True
                # Exhausted: stay put, stomping the pusher's claim on our cell
                # so it backtracks. A root agent always succeeds at staying.
                if is_root:
                    raise AssertionError(
                        "pibt: root agent's wait fallback was blocked")
                res_t[v] = i
                assigned[i] = True
                target[i] = v
                aligned_now[i] = False
                finish(v, -1, v)
                return False
            finally:
                stack.pop()
                stack_pos[i] = -1

        eff = priorities.effective()
        order = sorted(range(n), key=lambda i: -eff[i])
        for i in order:
            if not assigned[i]:
                solve(i, True)

        for i in range(n):
            occ[locs[i]] = -1
            if res_t[target[i]] == i:
                res_t[target[i]] = -1
            if res_r[realized[i]] == i:
                res_r[realized[i]] = -1
        return StepIntent(target, realized, actions, next_ori)


def pibt_rollout(
    pibt: Pibt,
    locs: list[int],
    oris: list[int],
    goals: list[int],
    priorities: PriorityState,
    w: int,
    hints: list[list[int]] | None = None,
    hint_oris: list[list[int]] | None = None,
) -> tuple[list[list[int]], list[list[int]], list[list[Action]]]:
    """Run w chained steps; returns location/orientation/action sequences.

    Location and orientation sequences have length w + 1 (index 0 = input
    state). Agents that reach their goal inside the window keep targeting it
    and hold position unless pushed (no future goal is invented), but the
    priority counters advance between internal steps exactly as execution
    would advance them, so in-window congestion still reshuffles the ranking.
    hints[k] carries per-agent preferred locations for step k (reused plan
    tail); hint_oris the matching orientations, so planned turns replay.
    """
    if w < 1:
        raise ValueError("window length must be >= 1")
    locs_seq = [list(locs)]
    oris_seq = [list(oris)]
    acts_seq: list[list[Action]] = []
    cur_l, cur_o = list(locs), list(oris)
    pr = priorities
    for k in range(w):
        step_hints = hints[k] if hints is not None and k < len(hints) else None
        step_oris = (hint_oris[k] if hint_oris is not None and k < len(hint_oris)
                     else None)
        intent = pibt.step(cur_l, cur_o, goals, pr, step_hints, step_oris)
        cur_l = intent.realized
        cur_o = intent.next_orientation
        locs_seq.append(list(cur_l))
        oris_seq.append(list(cur_o))
        acts_seq.append(list(intent.first_action))
        if k + 1 < w:
            reached = [i for i in range(len(cur_l)) if cur_l[i] == goals[i]]
            pr = update_priorities(pr, reached)
    return locs_seq, oris_seq, acts_seq
