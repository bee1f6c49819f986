"""Shared builders for the test modules."""

from __future__ import annotations

import numpy as np

from euclid_tsp.baseline import constant_factor_tour
from euclid_tsp.crossing_index import build_crossing_index
from euclid_tsp.dp import DpConfig, solve
from euclid_tsp.geometry import preprocess
from euclid_tsp.quadtree import build_tree, sample_shift


def uniform_points(seed: int, n: int, box: float = 1000.0) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0, box, (n, 2))


def pipeline(points, epsilon=1.0, shift_seed=0, r=5, c_L=8.0, baseline=None):
    """Everything up to and including one DP solve; returns a dict of the pieces."""
    inst = preprocess(points, epsilon, c_L)
    T = baseline or constant_factor_tour(inst)
    qt = build_tree(inst, sample_shift(inst.L, shift_seed))
    idx = build_crossing_index(qt, T)
    tour, table = solve(qt, idx, DpConfig(r), inst)
    return {"inst": inst, "T": T, "qt": qt, "idx": idx, "tour": tour, "table": table}


def is_permutation(order, n: int) -> bool:
    return sorted(order) == list(range(n))


def brute_crossings(qt, order, all_edges: bool = False) -> dict:
    """{(cell id, side): (first edge in tour order, exact crossing point)} by scanning every edge.

    Works in doubled grid units so cell sides (half-integers) and points
    (integers) are both integral.  Corner touches and grazing contacts are
    not crossings.  With ``all_edges`` the values are sets of every crossing edge.
    """
    from fractions import Fraction

    n = len(order)
    if n < 2:
        return {}
    pts = 2 * np.asarray(qt.grid_points, dtype=np.int64)
    P = pts[list(order)]
    Q = pts[[order[(i + 1) % n] for i in range(n)]]
    out = {}
    for c in qt.cells:
        lx, ly = c.lo2
        s2 = 2 * c.side_len
        sides = ((1, ly, lx), (0, lx + s2, ly), (1, ly + s2, lx), (0, lx, ly))
        for j, (horizontal, line, lo) in enumerate(sides):
            a, b = (1, 0) if horizontal else (0, 1)
            hit = np.flatnonzero((P[:, a] - line) * (Q[:, a] - line) < 0)
            for e in hit:
                pa, pb, qa, qb = int(P[e, a]), int(P[e, b]), int(Q[e, a]), int(Q[e, b])
                free = pb + Fraction(line - pa, qa - pa) * (qb - pb)
                if not lo < free < lo + s2:
                    continue
                if all_edges:
                    out.setdefault((c.id, j), set()).add(int(e))
                else:
                    pt = (free / 2, Fraction(line, 2))
                    out[(c.id, j)] = (int(e), pt if horizontal else pt[::-1])
                    break
    return out
