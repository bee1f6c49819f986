"""Slow, independent evaluation of the tour class the dynamic program optimises.

A tour of the class is fixed by choosing, in every cell of the augmented
quadtree that holds points, one route template per branching cell and one
portal for every place where the tour crosses a cell side.  This module
evaluates the cheapest such tour directly from that definition:

* portals come from ``portal_set_Z`` as exact rational points (side corners
  excluded), so their positions are derived independently of the DP's
  integer layout;
* a tour piece leaving one child enters the next one at the *same point*,
  and that point must be a portal of both cells;
* a parent portal is usable at the end of a route only if it is literally a
  portal of the child the route starts or ends in;
* tables are dictionaries keyed by ``(side, point)``.

Every route is evaluated by relaxing its steps one at a time over explicit
point sets, so the result is the minimum over all portal sequences of every
route.  Nothing here touches the DP's arrays, kernels or index maps.
"""

from __future__ import annotations

import math
from fractions import Fraction

from euclid_tsp.portals import portal_set_Z
from euclid_tsp.quadtree import OUTER, sides_of
from euclid_tsp.routes import GLUE, OUTER_SIDES, routes_for

INF = math.inf


def _dist(p, q) -> float:
    return math.hypot(float(p[0] - q[0]), float(p[1] - q[1]))


class ReferenceClass:
    def __init__(self, qt, idx, r: int, limits):
        self.qt = qt
        self.idx = idx
        self.r = r
        self.limits = limits
        self.kmax = limits.k_max
        self._portals = {}
        self.tables = {}
        self.below = {}
        for c in reversed(qt.cells):
            self.below[c.id] = len(c.points) + sum(self.below[k.id] for k in c.children)

    # ------------------------------------------------------------ portals

    def portals(self, cell, side: int, k: int = 1) -> list[tuple[Fraction, Fraction]]:
        """Portals of one side usable at crossing count ``k``, corners excluded."""
        if k < 1 or k > self.kmax:
            return []
        key = (cell.id, side, k)
        if key not in self._portals:
            zs = portal_set_Z(sides_of(cell)[side], k, self.r, self.idx)
            pts = []
            for t, p in zip(zs.offsets, zs.positions):
                if 0 < t < 1:
                    pts.append((Fraction(p.x), Fraction(p.y)))
            self._portals[key] = pts
        return self._portals[key]

    def allowed(self, cell, side: int, k: int) -> set:
        return set(self.portals(cell, side, k))

    # ------------------------------------------------------------ tables

    def nonempty(self, cell) -> bool:
        return self.below[cell.id] > 0

    def top(self):
        c = self.qt.root
        while True:
            full = [k for k in c.children if self.nonempty(k)]
            if len(full) != 1:
                return c
            c = full[0]

    def table(self, cell) -> dict:
        """{((side_u, u), (side_v, v)): cost} for a non-top cell holding points."""
        if cell.id in self.tables:
            return self.tables[cell.id]
        if cell.points and not cell.children:
            t = self._leaf(cell)
        elif cell.kind == OUTER:
            t = self._outer(cell)
        else:
            t = self._combine(cell)
        self.tables[cell.id] = t
        return t

    def _same_side_ok(self, cell, su, u, sv, v) -> bool:
        if su != sv:
            return True
        two = self.allowed(cell, su, 2)
        return u in two and v in two

    def _leaf(self, cell) -> dict:
        p = tuple(Fraction(int(c)) for c in self.qt.grid_points[cell.points[0]])
        t = {}
        for su in range(4):
            for u in self.portals(cell, su):
                for sv in range(4):
                    for v in self.portals(cell, sv):
                        if self._same_side_ok(cell, su, u, sv, v):
                            t[((su, u), (sv, v))] = _dist(u, p) + _dist(p, v)
        return t

    def _outer(self, cell) -> dict:
        inner = cell.children[0]
        inner_t = self.table(inner)
        osides, isides = sides_of(cell), sides_of(inner)

        def on_shared(side, point) -> bool:
            (ax, ay), (bx, by) = isides[side].endpoints
            (cx, cy), _ = osides[side].endpoints
            if side in (0, 2):
                return Fraction(ay) == Fraction(cy) and Fraction(ax) < point[0] < Fraction(bx)
            return Fraction(ax) == Fraction(cx) and Fraction(ay) < point[1] < Fraction(by)

        def collinear(side) -> bool:
            (ax, ay), _ = isides[side].endpoints
            (cx, cy), _ = osides[side].endpoints
            return Fraction(ay) == Fraction(cy) if side in (0, 2) else Fraction(ax) == Fraction(cx)

        def link(su, u, si, i) -> float:
            if on_shared(su, u):
                return 0.0 if (si == su and i == u) else INF
            if collinear(si):
                return INF
            return _dist(u, i)

        inner_keys = [(si, i) for si in range(4) for i in self.portals(inner, si)]
        t = {}
        for su in range(4):
            for u in self.portals(cell, su):
                # cheapest way from u into the inner cell and on to each inner exit
                reach = {}
                for a in inner_keys:
                    la = link(su, u, *a)
                    if la == INF:
                        continue
                    for b in inner_keys:
                        val = inner_t.get((a, b), INF)
                        if val < INF:
                            reach[b] = min(reach.get(b, INF), la + val)
                for sv in range(4):
                    for v in self.portals(cell, sv):
                        if not self._same_side_ok(cell, su, u, sv, v):
                            continue
                        best = INF
                        for b, cost in reach.items():
                            lb = link(sv, v, *b)
                            if lb < INF:
                                best = min(best, cost + lb)
                        if best < INF:
                            t[((su, u), (sv, v))] = best
        return t

    # ------------------------------------------------------------ routes

    def _step_cost(self, kid, direct: bool, enter, a, leave, b) -> float:
        if direct:
            return _dist(a, b)
        return self.table(kid).get(((enter, a), (leave, b)), INF)

    def _route_costs(self, cell, route) -> dict:
        """{(first entry point, last exit point): cheapest cost} over all portal sequences."""
        kids = cell.children
        steps = route.steps
        first = steps[0]
        out = {}
        starts = self.allowed(kids[first.child], first.enter, route.count(first.child, first.enter))
        for a in sorted(starts):
            cur = {a: 0.0}
            for i, st in enumerate(steps):
                kid = kids[st.child]
                exits = self.allowed(kid, st.leave, route.count(st.child, st.leave))
                if i + 1 < len(steps):
                    nxt = steps[i + 1]
                    # the exit point is the next child's entry point
                    exits &= self.allowed(kids[nxt.child], nxt.enter, route.count(nxt.child, nxt.enter))
                    assert GLUE[(st.child, nxt.child)] == (st.leave, nxt.enter)
                new = {}
                for p, base in cur.items():
                    for q in exits:
                        c = self._step_cost(kid, st.direct, st.enter, p, st.leave, q)
                        if c < INF and base + c < new.get(q, INF):
                            new[q] = base + c
                cur = new
                if not cur:
                    break
            for q, c in cur.items():
                out[(a, q)] = c
        return out

    def _pattern(self, cell) -> tuple:
        return tuple(self.nonempty(k) for k in cell.children)

    def _combine(self, cell) -> dict:
        t = {}
        for route in routes_for(self._pattern(cell), self.limits, False):
            s1, s2 = route.steps[0].enter, route.steps[-1].leave
            assert s1 in OUTER_SIDES[route.steps[0].child] and s2 in OUTER_SIDES[route.steps[-1].child]
            par1, par2 = set(self.portals(cell, s1)), set(self.portals(cell, s2))
            for (a, b), c in self._route_costs(cell, route).items():
                if a not in par1 or b not in par2:
                    continue
                if not self._same_side_ok(cell, s1, a, s2, b):
                    continue
                for key in (((s1, a), (s2, b)), ((s2, b), (s1, a))):
                    if c < t.get(key, INF):
                        t[key] = c
        return t

    def value(self) -> float:
        """Cheapest closed tour of the class."""
        top = self.top()
        if not top.children:
            return 0.0
        best = INF
        for route in routes_for(self._pattern(top), self.limits, True):
            for (a, b), c in self._route_costs(top, route).items():
                if a == b:
                    best = min(best, c)
        return best


def _close(a: float, b: float, rel: float) -> bool:
    return a == b or abs(a - b) <= rel * max(1.0, abs(b))


def portal_keys(table, cell) -> dict:
    """{(side, index) in the DP layout: (side, exact point)} for every valid portal."""
    from euclid_tsp.quadtree import sides_of

    b = table.boundary(cell)
    D = table.frame.D
    sd = sides_of(cell)
    keys = {}
    for j in range(4):
        (x0, y0), _ = sd[j].endpoints
        for i in range(b.free.shape[1]):
            if not b.valid[j, i]:
                continue
            f = Fraction(int(b.free[j, i]), D)
            keys[(j, i)] = (j, (f, Fraction(y0)) if j in (0, 2) else (Fraction(x0), f))
    return keys


def compare_with_dp(table, ref, rel: float = 1e-12) -> tuple[int, int, int]:
    """Entry-by-entry comparison of every stored DP table with the reference.

    Returns (entries compared, mismatches, outer-dummy cells compared).
    """
    seen = bad = outer = 0
    for cid, A in table.tables.items():
        cell = table.qt.cells[cid]
        outer += cell.kind == OUTER
        keys = portal_keys(table, cell)
        rt = ref.table(cell)
        for (j, i), ku in keys.items():
            for (j2, i2), kv in keys.items():
                seen += 1
                if not _close(float(A[j, i, j2, i2]), rt.get((ku, kv), INF), rel):
                    bad += 1
        # nothing the reference finds may fall outside the DP's portal layout
        valid = set(keys.values())
        bad += sum(1 for (u, v) in rt if u not in valid or v not in valid)
    return seen, bad, outer
