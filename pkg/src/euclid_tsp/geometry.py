"""Points, distances and the snapping of real-coordinate input onto an integer grid."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

C_L_DEFAULT = 8.0


@dataclass(frozen=True)
class Point:
    x: float
    y: float


@dataclass(frozen=True)
class Transform:
    """grid = (original - offset) * scale, before snapping."""

    scale: float
    offset: tuple[float, float]

    def to_original(self, grid_xy: np.ndarray) -> np.ndarray:
        return np.asarray(grid_xy, dtype=float) / self.scale + np.asarray(self.offset)


@dataclass(frozen=True)
class GridInstance:
    points: np.ndarray  # (n, 2) int64 in {0..L}^2
    L: int
    transform: Transform
    original_n: int
    original: np.ndarray  # (n, 2) float64, the input before snapping
    epsilon: float = 1.0

    @property
    def n(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]
    cost: float


def distance(p, q) -> float:
    px, py = (p.x, p.y) if isinstance(p, Point) else p
    qx, qy = (q.x, q.y) if isinstance(q, Point) else q
    return math.hypot(px - qx, py - qy)


def tour_cost(points, order: Sequence[int]) -> float:
    """Closed-tour length of ``order`` over ``points`` (array-like of shape (n, 2))."""
    if len(order) < 2:
        return 0.0
    pts = np.asarray(points, dtype=float)[np.asarray(order)]
    diff = pts - np.roll(pts, -1, axis=0)
    return float(np.hypot(diff[:, 0], diff[:, 1]).sum())


def grid_side(n: int, epsilon: float, c_L: float = C_L_DEFAULT) -> int:
    """Smallest power of two that is at least c_L * n / epsilon."""
    target = c_L * n / epsilon
    L = 1
    while L < target:
        L *= 2
    return L


def _as_array(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        arr = points.astype(float)
    else:
        arr = np.array([(p.x, p.y) if isinstance(p, Point) else tuple(p) for p in points], dtype=float)
    return arr.reshape(-1, 2)


def preprocess(points, epsilon: float, c_L: float = C_L_DEFAULT) -> GridInstance:
    """Scale the bounding box so its longer side becomes L and snap to the integer grid.

    Duplicates survive snapping as a multiset.  The only rounding is a floor of
    values bounded by L, so every argument fits in O(log n) bits.
    """
    arr = _as_array(points)
    n = len(arr)
    if n == 0:
        raise ValueError("empty instance")
    if not (epsilon > 0):
        raise ValueError("epsilon must be positive")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite coordinate")
    L = grid_side(n, epsilon, c_L)
    lo = arr.min(axis=0)
    side = float((arr.max(axis=0) - lo).max())
    if side == 0.0:
        transform = Transform(1.0, (float(lo[0]), float(lo[1])))
        grid = np.zeros((n, 2), dtype=np.int64)
    else:
        scale = L / side
        transform = Transform(scale, (float(lo[0]), float(lo[1])))
        grid = np.floor((arr - lo) * scale + 0.5).astype(np.int64)
        np.clip(grid, 0, L, out=grid)
    return GridInstance(grid, L, transform, n, arr, float(epsilon))
