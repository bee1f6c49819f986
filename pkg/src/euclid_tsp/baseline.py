"""Constant-factor baseline tour: double the minimum spanning tree and shortcut."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial import Delaunay, QhullError

from .geometry import GridInstance, Tour, tour_cost

# Above this size the quadratic Prim loop gives way to a Delaunay-restricted MST.
PRIM_MAX_N = 2000


@dataclass(frozen=True)
class BaselineTour:
    tour: Tour
    method: str = "mst-double"


def _coords(inst) -> np.ndarray:
    if isinstance(inst, GridInstance):
        return inst.points.astype(float)
    return np.asarray(inst, dtype=float).reshape(-1, 2)


def prim_mst(pts: np.ndarray) -> list[tuple[int, int]]:
    """Quadratic Prim; ties go to the lowest index."""
    n = len(pts)
    if n < 2:
        return []
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    link = np.zeros(n, dtype=np.int64)
    in_tree[0] = True
    best[:] = np.hypot(*(pts - pts[0]).T)
    best[0] = np.inf
    edges = []
    for _ in range(n - 1):
        cand = np.where(in_tree, np.inf, best)
        v = int(np.argmin(cand))
        u = int(link[v])
        edges.append((min(u, v), max(u, v)))
        in_tree[v] = True
        d = np.hypot(*(pts - pts[v]).T)
        closer = (d < best) & ~in_tree
        best[closer] = d[closer]
        link[closer] = v
    return edges


def _delaunay_mst(pts: np.ndarray) -> list[tuple[int, int]] | None:
    # Coincident points are chained at zero cost to their first copy.
    uniq, first, inverse = np.unique(pts, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    edges = [(int(first[inverse[i]]), i) for i in range(len(pts)) if first[inverse[i]] != i]
    if len(uniq) < 3:
        return None
    try:
        tri = Delaunay(uniq)
    except QhullError:
        return None
    s = tri.simplices
    a = np.concatenate([s[:, 0], s[:, 1], s[:, 2]])
    b = np.concatenate([s[:, 1], s[:, 2], s[:, 0]])
    w = np.hypot(*(uniq[a] - uniq[b]).T)
    # csgraph drops zero weights, but distinct points never produce one.
    g = coo_matrix((w, (a, b)), shape=(len(uniq),) * 2).tocsr()
    t = minimum_spanning_tree(g).tocoo()
    if t.nnz != len(uniq) - 1:
        return None
    for i, j in zip(t.row, t.col):
        u, v = int(first[i]), int(first[j])
        edges.append((min(u, v), max(u, v)))
    return sorted(edges)


def mst(inst) -> list[tuple[int, int]]:
    pts = _coords(inst)
    if len(pts) > PRIM_MAX_N:
        edges = _delaunay_mst(pts)
        if edges is not None:
            return edges
        order = np.lexsort((pts[:, 1], pts[:, 0]))
        if _collinear(pts):
            return [tuple(sorted((int(order[i]), int(order[i + 1])))) for i in range(len(pts) - 1)]
    return prim_mst(pts)


def _collinear(pts: np.ndarray) -> bool:
    d = pts - pts[0]
    far = d[np.argmax(np.abs(d).sum(axis=1))]
    return bool(np.all(d[:, 0] * far[1] - d[:, 1] * far[0] == 0))


def constant_factor_tour(inst) -> BaselineTour:
    """Preorder of the MST from vertex 0, children visited in index order."""
    pts = _coords(inst)
    n = len(pts)
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in mst(pts):
        adj[u].append(v)
        adj[v].append(u)
    seen = np.zeros(n, dtype=bool)
    order = []
    stack = [0]
    while stack:
        u = stack.pop()
        if seen[u]:
            continue
        seen[u] = True
        order.append(u)
        stack.extend(sorted((v for v in adj[u] if not seen[v]), reverse=True))
    return BaselineTour(Tour(tuple(order), tour_cost(pts, order)))
