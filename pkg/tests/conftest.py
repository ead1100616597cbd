from __future__ import annotations

import numpy as np
import pytest

from lmapf.domain import GridMap


def open_grid(height: int, width: int) -> GridMap:
    return GridMap(np.ones((height, width), dtype=bool))


def grid_from(*rows: str) -> GridMap:
    return GridMap.from_rows(list(rows))


@pytest.fixture
def grid3() -> GridMap:
    return open_grid(3, 3)


@pytest.fixture
def row3() -> GridMap:
    return open_grid(1, 3)
