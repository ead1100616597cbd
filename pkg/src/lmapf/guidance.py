"""Guidance graphs: positive per-edge and per-wait weights that bias distances.

A guidance graph stores, for every free cell, four directional move weights
(E, S, W, N order: the cost of leaving the cell in that direction) and one
wait weight. Unusable directions (into obstacles or off the map) carry +inf
internally and are serialized as null.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .domain import GridMap, ParseError

INF = math.inf


class NonPositiveWeight(Exception):
    """A guidance weight that is not finite and strictly positive."""


class GuidanceGraph:
    """Edge-weight overlay for one map. Immutable once constructed."""

    def __init__(self, grid: GridMap, move: np.ndarray, wait: np.ndarray):
        move = np.asarray(move, dtype=float)
        wait = np.asarray(wait, dtype=float)
        if move.shape != (grid.n_cells, 4) or wait.shape != (grid.n_cells,):
            raise ValueError("weight array shapes do not match the map")
        for v in grid.free_ids:
            if not (math.isfinite(wait[v]) and wait[v] > 0):
                raise NonPositiveWeight(f"wait weight at cell {grid.coords(v)}")
            for d in range(4):
                usable = grid.ahead[v * 4 + d] >= 0
                w = move[v, d]
                if usable and not (math.isfinite(w) and w > 0):
                    raise NonPositiveWeight(
                        f"move weight at cell {grid.coords(v)} direction {d}"
                    )
                if not usable and not math.isinf(w):
                    raise ValueError(
                        f"weight on unusable direction at {grid.coords(v)} dir {d}"
                    )
        self.grid = grid
        self.move_np = move
        self.wait_np = wait
        # Flat python lists: much faster than numpy scalar indexing in planners.
        self.move_w: list[float] = move.ravel().tolist()
        self.wait_w: list[float] = wait.tolist()

    def move_cost(self, v: int, d: int) -> float:
        return self.move_w[v * 4 + d]

    def wait_cost(self, v: int) -> float:
        return self.wait_w[v]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, GuidanceGraph)
            and self.grid == other.grid
            and np.array_equal(self.move_np, other.move_np)
            and np.array_equal(self.wait_np, other.wait_np)
        )

    def __hash__(self):
        return hash((self.grid, self.move_np.tobytes(), self.wait_np.tobytes()))


def _blank(grid: GridMap) -> tuple[np.ndarray, np.ndarray]:
    move = np.full((grid.n_cells, 4), INF)
    wait = np.full(grid.n_cells, INF)
    return move, wait


def uniform_guidance(grid: GridMap) -> GuidanceGraph:
    """All usable move weights and all wait weights equal 1."""
    move, wait = _blank(grid)
    for v in grid.free_ids:
        wait[v] = 1.0
        for _, d in grid.adjacency[v]:
            move[v, d] = 1.0
    return GuidanceGraph(grid, move, wait)


def crisscross_guidance(
    grid: GridMap, preferred: float = 0.5, penalized: float = 1.5
) -> GuidanceGraph:
    """Alternating one-way highways: even rows push East, odd rows West,
    even columns South, odd columns North. Wait weights stay 1.

    With preferred == penalized == 1 this degenerates to uniform guidance.
    """
    if not (0 < preferred <= penalized):
        raise ValueError("need 0 < preferred <= penalized")
    from .domain import EAST, NORTH, SOUTH, WEST

    move, wait = _blank(grid)
    for v in grid.free_ids:
        r, c = grid.coords(v)
        row_pref = (EAST, WEST) if r % 2 == 0 else (WEST, EAST)
        col_pref = (SOUTH, NORTH) if c % 2 == 0 else (NORTH, SOUTH)
        wait[v] = 1.0
        for _, d in grid.adjacency[v]:
            if d == row_pref[0] or d == col_pref[0]:
                move[v, d] = preferred
            else:
                move[v, d] = penalized
    return GuidanceGraph(grid, move, wait)


def weights_to_doc(guidance: GuidanceGraph) -> dict:
    """The weight document: height, width, wait (HxW), moves (HxWx4, ESWN).

    Unusable directions and obstacle cells are null.
    """
    grid = guidance.grid
    wait_rows: list[list[float | None]] = []
    move_rows: list[list[list[float | None]]] = []
    for r in range(grid.height):
        wrow: list[float | None] = []
        mrow: list[list[float | None]] = []
        for c in range(grid.width):
            v = r * grid.width + c
            if grid.free_flat[v]:
                wrow.append(guidance.wait_w[v])
                mrow.append(
                    [
                        guidance.move_w[v * 4 + d] if grid.ahead[v * 4 + d] >= 0 else None
                        for d in range(4)
                    ]
                )
            else:
                wrow.append(None)
                mrow.append([None, None, None, None])
        wait_rows.append(wrow)
        move_rows.append(mrow)
    return {
        "height": grid.height,
        "width": grid.width,
        "wait": wait_rows,
        "moves": move_rows,
    }


def weights_from_doc(grid: GridMap, doc, where: str = "<weights>") -> GuidanceGraph:
    """Validate and build a guidance graph from a weight document."""
    if not isinstance(doc, dict):
        raise ParseError(f"{where}: document must be an object")
    for key in ("height", "width", "wait", "moves"):
        if key not in doc:
            raise ParseError(f"{where}: missing field {key!r}")
    if doc["height"] != grid.height or doc["width"] != grid.width:
        raise ParseError(
            f"{where}: dimensions {doc['height']}x{doc['width']} do not match "
            f"map {grid.height}x{grid.width}"
        )

    def check_positive(x, spot: str) -> float:
        if isinstance(x, bool) or not isinstance(x, (int, float)) \
                or not math.isfinite(x) or x <= 0:
            raise NonPositiveWeight(f"{where}: {spot} = {x!r}")
        return float(x)

    move, wait = _blank(grid)
    wait_rows, move_rows = doc["wait"], doc["moves"]
    if len(wait_rows) != grid.height or len(move_rows) != grid.height:
        raise ParseError(f"{where}: wait/moves row count mismatch")
    for r in range(grid.height):
        if len(wait_rows[r]) != grid.width or len(move_rows[r]) != grid.width:
            raise ParseError(f"{where}: wait[{r}]/moves[{r}] column count mismatch")
        for c in range(grid.width):
            v = r * grid.width + c
            wcell, mcell = wait_rows[r][c], move_rows[r][c]
            if not grid.free_flat[v]:
                continue  # anything stored at obstacles is ignored
            if wcell is None:
                raise ParseError(f"{where}: wait[{r}][{c}] is null on a free cell")
            wait[v] = check_positive(wcell, f"wait[{r}][{c}]")
            if not isinstance(mcell, list) or len(mcell) != 4:
                raise ParseError(f"{where}: moves[{r}][{c}] must have 4 entries")
            for d in range(4):
                usable = grid.ahead[v * 4 + d] >= 0
                entry = mcell[d]
                if usable:
                    if entry is None:
                        raise ParseError(f"{where}: moves[{r}][{c}][{d}] is null but usable")
                    move[v, d] = check_positive(entry, f"moves[{r}][{c}][{d}]")
                elif entry is not None:
                    raise ParseError(f"{where}: moves[{r}][{c}][{d}] set on unusable direction")
    return GuidanceGraph(grid, move, wait)


def save_weights(guidance: GuidanceGraph, path: str) -> None:
    """Serialize to the weight file schema (JSON; round-trips bit-exactly)."""
    with open(path, "w", encoding="ascii") as fh:
        json.dump(weights_to_doc(guidance), fh)
        fh.write("\n")


def load_weights(grid: GridMap, path: str) -> GuidanceGraph:
    """Parse a weight file; inverse of save_weights for valid graphs."""
    with open(path, "r", encoding="ascii") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}:{e.lineno}: {e.msg}") from None
    return weights_from_doc(grid, doc, where=path)
