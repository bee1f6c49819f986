"""Exact TSP solvers for small instances: subset dynamic programming and plain enumeration."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .geometry import GridInstance

HELD_KARP_MAX_N = 20
BRUTE_FORCE_MAX_N = 9


@dataclass(frozen=True)
class ExactResult:
    cost: float
    order: tuple[int, ...]


def _coords(inst) -> np.ndarray:
    if isinstance(inst, GridInstance):
        return inst.points.astype(float)
    return np.asarray(inst, dtype=float).reshape(-1, 2)


def _dist_matrix(pts: np.ndarray) -> np.ndarray:
    diff = pts[:, None, :] - pts[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def held_karp(inst) -> ExactResult:
    """Optimal closed tour via the subset DP, vectorised one subset-size layer at a time.

    ``inst`` is a GridInstance (its grid points are used) or an (n, 2) array.
    """
    pts = _coords(inst)
    n = len(pts)
    if n > HELD_KARP_MAX_N:
        raise ValueError("instance too large for exact oracle")
    if n == 0:
        raise ValueError("empty instance")
    if n <= 2:
        order = tuple(range(n))
        return ExactResult(2 * float(_dist_matrix(pts)[0, -1]) if n == 2 else 0.0, order)
    d = _dist_matrix(pts)
    m = n - 1  # vertex 0 is fixed as the start; vertex j+1 is bit j
    full = 1 << m
    cost = np.full((full, m), np.inf)
    parent = np.full((full, m), -1, dtype=np.int8)
    for j in range(m):
        cost[1 << j, j] = d[0, j + 1]
    masks = np.arange(full)
    popcount = np.zeros(full, dtype=np.int64)
    for j in range(m):
        popcount += (masks >> j) & 1
    dd = d[1:, 1:]
    for size in range(2, m + 1):
        layer = masks[popcount == size]
        for k in range(m):
            sel = layer[(layer >> k) & 1 == 1]
            prev = sel ^ (1 << k)
            cand = cost[prev] + dd[:, k][None, :]  # (len, m) over predecessor j
            best = np.argmin(cand, axis=1)
            cost[sel, k] = cand[np.arange(len(sel)), best]
            parent[sel, k] = best
    last = cost[full - 1] + d[1:, 0]
    k = int(np.argmin(last))
    total = float(last[k])
    order = []
    mask = full - 1
    while k >= 0:
        order.append(k + 1)
        pk = int(parent[mask, k])
        mask ^= 1 << k
        k = pk if mask else -1
    order.append(0)
    order.reverse()
    return ExactResult(total, tuple(order))


def brute_force(inst) -> ExactResult:
    pts = _coords(inst)
    n = len(pts)
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError("instance too large for exact oracle")
    if n == 0:
        raise ValueError("empty instance")
    d = _dist_matrix(pts)
    best, best_order = np.inf, tuple(range(n))
    for perm in itertools.permutations(range(1, n)):
        order = (0,) + perm
        c = sum(d[order[i], order[(i + 1) % n]] for i in range(n))
        if c < best:
            best, best_order = c, order
    return ExactResult(float(best) if n > 1 else 0.0, best_order)
