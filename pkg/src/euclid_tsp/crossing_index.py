"""Per cell-side record of one crossing of the baseline tour, built with two tree passes.

Crossing positions are kept as integers in units of ``1/D`` where ``D`` is a
power of two at least ``n**2``.  Only the coordinate along the side is stored;
the other coordinate is the side's supporting line.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .baseline import BaselineTour
from .geometry import Point
from .quadtree import DIRECTIONS, Cell, Quadtree

# Sides are examined in this order when one edge is tested against a cell.
_SCAN_ORDER = (3, 1, 0, 2)  # left, right, bottom, top
MIN_PRECISION_BITS = 20


def precision_bits(n: int, min_bits: int = MIN_PRECISION_BITS) -> int:
    return max(2 * max(n - 1, 1).bit_length(), min_bits)


def side_line(cell: Cell, j: int) -> tuple[bool, int, int, int]:
    """(horizontal, line, lo, hi) for side ``j`` in doubled grid units."""
    lx, ly = cell.lo2
    s2 = 2 * cell.side_len
    if j == 0:
        return True, ly, lx, lx + s2
    if j == 1:
        return False, lx + s2, ly, ly + s2
    if j == 2:
        return True, ly + s2, lx, lx + s2
    return False, lx, ly, ly + s2


def crossing_fraction(p, q, horizontal: bool, line: int, lo: int, hi: int):
    """Exact crossing of segment pq (doubled units) with an open side, as (num, den) or None.

    The returned free coordinate is ``num / den`` in doubled units.  Corner
    touches and contacts without a sign change are not crossings.
    """
    if horizontal:
        pa, pb, qa, qb = p[1], p[0], q[1], q[0]
    else:
        pa, pb, qa, qb = p[0], p[1], q[0], q[1]
    if (pa - line) * (qa - line) >= 0:
        return None
    den = qa - pa
    num = pb * den + (line - pa) * (qb - pb)
    if den < 0:
        num, den = -num, -den
    if not (lo * den < num < hi * den):
        return None
    return num, den


class CrossingIndex:
    def __init__(self, qt: Quadtree, tour: BaselineTour, bits: int):
        self.qt = qt
        self.bits = bits
        self.D = 1 << bits
        n = qt.n
        self.has = np.zeros((len(qt.cells), 4), dtype=bool)
        self.pos = np.zeros((len(qt.cells), 4), dtype=np.int64)
        self.order = tuple(tour.tour.order)
        self.edges = [(self.order[i], self.order[(i + 1) % n]) for i in range(n)] if n >= 2 else []
        self.active: list[list[int]] = [[] for _ in qt.cells]
        self.attachments = 0
        self.crossings = 0

    def lookup(self, cell_id: int, j: int):
        if not (0 <= cell_id < len(self.qt.cells)):
            raise KeyError("cell not in index")
        return int(self.pos[cell_id, j]) if self.has[cell_id, j] else None


def _segment_meets_square(p, q, x0, y0, x1, y1) -> bool:
    if max(p[0], q[0]) < x0 or min(p[0], q[0]) > x1 or max(p[1], q[1]) < y0 or min(p[1], q[1]) > y1:
        return False
    dx, dy = q[0] - p[0], q[1] - p[1]
    signs = set()
    for cx, cy in ((x0, y0), (x1, y0), (x1, y1), (x0, y1)):
        c = dx * (cy - p[1]) - dy * (cx - p[0])
        signs.add((c > 0) - (c < 0))
    return not (signs == {1} or signs == {-1})


def build_crossing_index(qt: Quadtree, T: BaselineTour, min_bits: int = MIN_PRECISION_BITS) -> CrossingIndex:
    idx = CrossingIndex(qt, T, precision_bits(qt.n, min_bits))
    cells = qt.cells
    ncell = len(cells)
    pts2 = [(2 * int(x), 2 * int(y)) for x, y in _grid_points(qt)]
    D = idx.D

    incident: dict[int, list[int]] = {}
    for e, (u, v) in enumerate(idx.edges):
        incident.setdefault(u, []).append(e)
        incident.setdefault(v, []).append(e)

    # Bottom-up: an edge climbs from each endpoint's leaf while exactly one
    # endpoint is inside, and stops at the cell where both copies meet.
    attached: list[list[int]] = [[] for _ in range(ncell)]
    climbing: list[list[int]] = [[] for _ in range(ncell)]
    for c in reversed(cells):
        arriving = list(climbing[c.id])
        for p in c.points:
            arriving.extend(incident.get(p, ()))
        seen: dict[int, int] = {}
        for e in arriving:
            seen[e] = seen.get(e, 0) + 1
        attached[c.id] = sorted(seen)
        if c.parent is not None:
            climbing[c.parent.id].extend(e for e, k in seen.items() if k == 1)
        climbing[c.id] = []

    # Top-down: parents hand intersecting active edges to their children.
    received: list[set[int]] = [set() for _ in range(ncell)]
    keys: set[tuple[int, bool, int]] = set()
    for c in cells:
        act = sorted(set(attached[c.id]) | received[c.id])
        received[c.id] = set()
        idx.active[c.id] = act
        idx.attachments += len(act)
        for kid in c.children:
            kx, ky = kid.lo2
            ks = 2 * kid.side_len
            box = (kx, ky, kx + ks, ky + ks)
            for e in act:
                u, v = idx.edges[e]
                if _segment_meets_square(pts2[u], pts2[v], *box):
                    received[kid.id].add(e)
        lines = [side_line(c, j) for j in range(4)]
        for e in act:
            u, v = idx.edges[e]
            for j in _SCAN_ORDER:
                horizontal, line, lo, hi = lines[j]
                hit = crossing_fraction(pts2[u], pts2[v], horizontal, line, lo, hi)
                if hit is None:
                    continue
                keys.add((e, horizontal, line))
                if idx.has[c.id, j]:
                    continue
                num, den = hit
                # free coordinate num/den is in doubled units; round to 1/D
                units = (num * D + den) // (2 * den)
                lo_u, hi_u = lo * D // 2, hi * D // 2
                units = min(max(units, lo_u + 1), hi_u - 1)
                idx.has[c.id, j] = True
                idx.pos[c.id, j] = units
    idx.crossings = len(keys)
    return idx


def _grid_points(qt: Quadtree):
    pts = getattr(qt, "grid_points", None)
    if pts is None:
        raise ValueError("quadtree carries no point coordinates")
    return pts


def cr_T(idx: CrossingIndex, cell, dir) -> Point | None:
    """Stored crossing of the baseline tour with one side of ``cell``, or None."""
    cid = cell.id if isinstance(cell, Cell) else int(cell)
    if not (0 <= cid < len(idx.qt.cells)) or (isinstance(cell, Cell) and idx.qt.cells[cid] is not cell):
        raise KeyError("cell not in index")
    j = DIRECTIONS.index(dir) if isinstance(dir, str) else int(dir)
    units = idx.lookup(cid, j)
    if units is None:
        return None
    horizontal, line, _, _ = side_line(idx.qt.cells[cid], j)
    free = Fraction(units, idx.D)
    fixed = Fraction(line, 2)
    return Point(free, fixed) if horizontal else Point(fixed, free)
