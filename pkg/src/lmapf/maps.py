"""Map and agent file I/O plus desk-scale benchmark map generators.

Map file format (text, bit-exact round trip):

    type octile
    height H
    width W
    map
    <H lines of W characters, '.' = free, '@' or 'T' = obstacle>

Agent file: one agent per line, ``row col orientation`` with orientation in
{E, S, W, N}. Four-way agent files omit the orientation column.
"""
from __future__ import annotations

import numpy as np

from .domain import (
    EAST,
    ORIENTATION_IDS,
    ORIENTATION_NAMES,
    AgentState,
    GridMap,
    ParseError,
)


def load_map(path: str) -> GridMap:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()

    def expect(idx: int, prefix: str) -> str:
        if idx >= len(lines):
            raise ParseError(f"{path}:{idx + 1}: expected '{prefix}', found end of file")
        if not lines[idx].startswith(prefix):
            raise ParseError(f"{path}:{idx + 1}: expected '{prefix}', got {lines[idx]!r}")
        return lines[idx][len(prefix):].strip()

    if len(lines) < 4 or lines[0].strip() != "type octile":
        raise ParseError(f"{path}:1: expected 'type octile'")
    try:
        height = int(expect(1, "height"))
        width = int(expect(2, "width"))
    except ValueError as e:
        raise ParseError(f"{path}: bad height/width: {e}") from None
    if height < 1 or width < 1:
        raise ParseError(f"{path}: non-positive dimensions {height}x{width}")
    expect(3, "map")
    if len(lines) < 4 + height:
        raise ParseError(f"{path}: expected {height} map rows, found {len(lines) - 4}")
    free = np.zeros((height, width), dtype=bool)
    for r in range(height):
        row = lines[4 + r]
        if len(row) != width:
            raise ParseError(
                f"{path}:{5 + r}: row has {len(row)} characters, expected {width}"
            )
        for c, ch in enumerate(row):
            if ch == ".":
                free[r, c] = True
            elif ch not in "@T":
                raise ParseError(f"{path}:{5 + r}: unknown cell character {ch!r}")
    return GridMap(free)


def save_map(grid: GridMap, path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"type octile\nheight {grid.height}\nwidth {grid.width}\nmap\n")
        for row in grid.rows():
            fh.write(row + "\n")


def load_agents(path: str, grid: GridMap) -> list[AgentState]:
    """Parse agent starts; lines without an orientation column get EAST."""
    agents: list[AgentState] = []
    n_fields = None
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if len(fields) not in (2, 3):
                raise ParseError(f"{path}:{lineno}: expected 'row col [orientation]'")
            if n_fields is None:
                n_fields = len(fields)
            elif len(fields) != n_fields:
                raise ParseError(f"{path}:{lineno}: inconsistent column count")
            try:
                r, c = int(fields[0]), int(fields[1])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: row/col must be integers") from None
            if not (0 <= r < grid.height and 0 <= c < grid.width):
                raise ParseError(f"{path}:{lineno}: ({r}, {c}) out of bounds")
            v = grid.cell_id(r, c)
            if not grid.is_free(v):
                raise ParseError(f"{path}:{lineno}: ({r}, {c}) is an obstacle")
            o = EAST
            if len(fields) == 3:
                if fields[2] not in ORIENTATION_IDS:
                    raise ParseError(f"{path}:{lineno}: bad orientation {fields[2]!r}")
                o = ORIENTATION_IDS[fields[2]]
            agents.append(AgentState(v, o))
    if not agents:
        raise ParseError(f"{path}: no agents")
    return agents


def save_agents(agents: list[AgentState], grid: GridMap, path: str,
                with_orientation: bool = True) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for a in agents:
            r, c = grid.coords(a.location)
            if with_orientation:
                fh.write(f"{r} {c} {ORIENTATION_NAMES[a.orientation]}\n")
            else:
                fh.write(f"{r} {c}\n")


# ---------------------------------------------------------------------------
# Generators. All are deterministic in their seed and keep the free space
# connected so every goal is reachable from everywhere.
# ---------------------------------------------------------------------------


def _keep_largest_component(free: np.ndarray) -> np.ndarray:
    """Turn all free cells outside the largest 4-connected component into obstacles."""
    h, w = free.shape
    label = -np.ones((h, w), dtype=int)
    sizes = []
    for r in range(h):
        for c in range(w):
            if not free[r, c] or label[r, c] >= 0:
                continue
            lab = len(sizes)
            stack = [(r, c)]
            label[r, c] = lab
            count = 0
            while stack:
                rr, cc = stack.pop()
                count += 1
                for dr, dc in ((0, 1), (1, 0), (0, -1), (-1, 0)):
                    nr, nc = rr + dr, cc + dc
                    if 0 <= nr < h and 0 <= nc < w and free[nr, nc] and label[nr, nc] < 0:
                        label[nr, nc] = lab
                        stack.append((nr, nc))
            sizes.append(count)
    if not sizes:
        return free
    best = int(np.argmax(sizes))
    return free & (label == best)


def random_map(height: int = 32, width: int = 32, obstacle_ratio: float = 0.2,
               seed: int = 0) -> GridMap:
    """Uniform random obstacles, reduced to the largest connected free region."""
    rng = np.random.default_rng(seed)
    free = rng.random((height, width)) >= obstacle_ratio
    free = _keep_largest_component(free)
    return GridMap(free)


def warehouse_map(height: int = 33, width: int = 57, shelf_len: int = 8,
                  gap: int = 2, aisle_rows: int = 1, border: int = 2) -> GridMap:
    """Shelf rows separated by narrow aisles, the classic fulfillment layout.

    Shelves are 1-cell-high horizontal runs of shelf_len obstacles with `gap`
    free columns between runs; `aisle_rows` free rows separate shelf rows and
    an open border rings the whole floor.
    """
    free = np.ones((height, width), dtype=bool)
    r = border
    while r < height - border:
        c = border
        while c < width - border:
            end = min(c + shelf_len, width - border)
            free[r, c:end] = False
            c = end + gap
        r += 1 + aisle_rows
    return GridMap(_keep_largest_component(free))


def deadend_map(height: int = 21, width: int = 41, stub_depth: int = 3,
                stub_gap: int = 2) -> GridMap:
    """An open hall with dead-end stubs combed into solid blocks on both sides.

    Each stub is a 1-wide pocket of depth `stub_depth` whose innermost cell
    has exactly one free neighbor.
    """
    free = np.ones((height, width), dtype=bool)
    band = stub_depth + 1
    # Solid top and bottom bands with stub pockets carved from the hall side.
    free[:band, :] = False
    free[height - band:, :] = False
    for c in range(2, width - 2, stub_gap + 1):
        free[1:band, c] = True            # pocket opening downward into the hall
        free[height - band:height - 1, c] = True
    return GridMap(_keep_largest_component(free))


def random_agents(grid: GridMap, n: int, seed: int = 0,
                  random_orientation: bool = True) -> list[AgentState]:
    """n distinct free starts; orientations uniform unless disabled (then EAST)."""
    if n > grid.free_count:
        raise ValueError(f"{n} agents exceed {grid.free_count} free cells")
    rng = np.random.default_rng(seed)
    cells = rng.choice(grid.free_ids, size=n, replace=False)
    if random_orientation:
        oris = rng.integers(0, 4, size=n)
    else:
        oris = np.zeros(n, dtype=int)
    return [AgentState(int(v), int(o)) for v, o in zip(cells, oris)]
