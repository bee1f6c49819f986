"""Dynamic program over the dummy-augmented quadtree.

Every cell except the top one is crossed by exactly one tour piece that visits
all of its points.  Its table is therefore a dense symmetric matrix ``A[u, v]``:
the cheapest such piece entering at boundary portal ``u`` and leaving at ``v``.
Portals of a cell are laid out as an array of shape ``(4, P)``: side (bottom,
right, top, left) by position along the side in increasing coordinate, padded
with infinite entries.  A side crossed ``k`` times may only use the portals of
``Z(F, k)``; a side crossed once uses all of them.

Children combine along route templates (see ``routes``).  A route is a chain
of child matrices (multipath steps) and straight-segment matrices (direct
steps), so its value is a min-plus product.  The loops themselves live in
``_kernels``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .crossing_index import CrossingIndex
from .geometry import Tour, tour_cost
from . import _kernels as _k
from .portals import g
from .quadtree import OUTER, Cell, Quadtree
from .routes import OUTER_SIDES, Limits, PackedRoutes, packed_for

INF = np.inf


@dataclass(frozen=True)
class DpConfig:
    r: int
    k_max: int | None = None
    per_full_child: int = 1
    per_empty_child: int = 2
    slack: int = 1
    cycle_slack: int = 2

    @property
    def limits(self) -> Limits:
        k = self.r if self.k_max is None else self.k_max
        return Limits(k, self.per_full_child, self.per_empty_child, self.slack, self.cycle_slack)


class InvariantError(RuntimeError):
    """Raised when the DP reaches a state that correct input can never produce."""


# ---------------------------------------------------------------- boundaries


@dataclass
class Boundary:
    """Portal layout of one cell."""

    free: np.ndarray  # (4, P) int64 position along each side, units of 1/D
    xy: np.ndarray  # (4, P, 2) float grid coordinates
    valid: np.ndarray  # (4, P) bool
    pen: np.ndarray  # (kmax + 1, 4, P) additive 0 / inf: portal allowed at that crossing count

    @property
    def flat_xy(self) -> np.ndarray:
        return self.xy.reshape(-1, 2)

    def allowed(self, k: int) -> np.ndarray:
        """(4, P) penalty for portals at crossing count k; all infinite beyond k_max."""
        if k >= self.pen.shape[0]:
            return np.full(self.pen.shape[1:], INF)
        return self.pen[k]


class Frame:
    """Shared constants for one DP run: portal spacing, units, masks."""

    def __init__(self, qt: Quadtree, idx: CrossingIndex, config: DpConfig):
        self.qt = qt
        self.idx = idx
        self.config = config
        self.r = config.r
        self.limits = config.limits
        self.kmax = self.limits.k_max
        self.D = idx.D
        self.P = g(1, self.r)
        if self.D < 2 * self.P:
            raise InvariantError("crossing precision too coarse for the portal grid")
        self.gk = [None] + [g(k, self.r) for k in range(1, self.kmax + 1)]
        # grid portal j (1-based) of a side belongs to Z(k) when j is a multiple of P / g(k)
        steps = np.arange(1, self.P)
        self._tmpl = np.full((self.kmax + 1, self.P - 1), INF)
        for k in range(1, self.kmax + 1):
            self._tmpl[k] = np.where(steps % (self.P // self.gk[k]) == 0, 0.0, INF)

    def boundary(self, cell: Cell) -> Boundary:
        P, K = self.P, self.kmax
        lx, ly = (v * self.D // 2 for v in cell.lo2)
        free = np.empty((4, P), dtype=np.int64)
        valid = np.empty((4, P), dtype=bool)
        pen = np.empty((K + 1, 4, P))
        xy = np.empty((4, P, 2))
        _k.fill_boundary(lx, ly, cell.side_len * self.D, self.D, self.idx.has[cell.id], self.idx.pos[cell.id],
                         self._tmpl, free, valid, pen, xy)
        return Boundary(free, xy, valid, pen)


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = a[:, None, :] - b[None, :, :]
    return np.hypot(d[..., 0], d[..., 1])


def _same_side_mask(A: np.ndarray, bnd: Boundary) -> np.ndarray:
    """Entry and exit on one side means two crossings there."""
    two = bnd.allowed(2)
    for j in range(4):
        A[j, :, j, :] += two[j][:, None] + two[j][None, :]
    return A


def _invalid_inf(A: np.ndarray, bnd: Boundary) -> np.ndarray:
    bad = ~bnd.valid
    A[bad, :, :] = INF
    A[:, :, bad] = INF
    return A


def leaf_table(point_xy: np.ndarray, bnd: Boundary) -> np.ndarray:
    """Path from portal u to the leaf's point and on to portal v."""
    P = bnd.free.shape[1]
    d = np.hypot(*(bnd.flat_xy - point_xy).T).reshape(4, P)
    d[~bnd.valid] = INF
    A = d[:, :, None, None] + d[None, None, :, :]
    return _same_side_mask(A, bnd)


def direct_table(bnd: Boundary) -> np.ndarray:
    """Straight segments between portals of different sides."""
    P = bnd.free.shape[1]
    A = _pairwise(bnd.flat_xy, bnd.flat_xy).reshape(4, P, 4, P)
    for j in range(4):
        A[j, :, j, :] = INF
    return _invalid_inf(A, bnd)


def connector(outer: Boundary, inner: Boundary, outer_cell: Cell, inner_cell: Cell, D: int) -> np.ndarray:
    """Cost of joining outer portal o to inner portal i.

    Where the inner cell shares part of a side with the outer cell, a portal on
    the shared segment must be used by both at once: the join costs 0 if the
    two portals coincide and is forbidden otherwise.
    """
    P = outer.free.shape[1]
    C = _pairwise(outer.flat_xy, inner.flat_xy).reshape(4, P, 4, P)
    olx, oly = outer_cell.lo2
    ilx, ily = inner_cell.lo2
    os2, is2 = 2 * outer_cell.side_len, 2 * inner_cell.side_len
    lines_o = ((oly, olx), (olx + os2, oly), (oly + os2, olx), (olx, oly))
    lines_i = ((ily, ilx), (ilx + is2, ily), (ily + is2, ilx), (ilx, ily))
    for j in range(4):
        if lines_o[j][0] != lines_i[j][0]:
            continue
        lo = lines_i[j][1] * D // 2
        hi = lo + inner_cell.side_len * D
        o_on = outer.valid[j] & (outer.free[j] > lo) & (outer.free[j] < hi)
        # an outer portal on the shared segment pairs only with the identical inner portal
        C[j, o_on, :, :] = INF
        C[:, :, j, :] = INF
        same = (outer.free[j][:, None] == inner.free[j][None, :]) & o_on[:, None] & inner.valid[j][None, :]
        oi, ii = np.nonzero(same)
        C[j, oi, j, ii] = 0.0
    C[~outer.valid, :, :] = INF
    C[:, :, ~inner.valid] = INF
    return C


def outer_table(inner_A: np.ndarray, C: np.ndarray, bnd: Boundary) -> np.ndarray:
    n4 = C.shape[0] * C.shape[1]
    Cf = C.reshape(n4, n4)
    X = _k.minplus(Cf, inner_A.reshape(n4, n4))
    A = _k.minplus(X, np.ascontiguousarray(Cf.T)).reshape(C.shape)
    return _same_side_mask(A, bnd)


# ---------------------------------------------------------------- the table


@dataclass
class DpStats:
    cells: int = 0
    routes_examined: int = 0
    routes_infeasible: int = 0
    trace: list[str] = field(default_factory=list)


class DpTable:
    """Filled tables plus what is needed to walk back down to a tour."""

    def __init__(self, qt: Quadtree, idx: CrossingIndex, config: DpConfig, trace: bool = False):
        self.qt = qt
        self.idx = idx
        self.config = config
        self.frame = Frame(qt, idx, config)
        self.tables: dict[int, np.ndarray] = {}
        self.stats = DpStats()
        self.trace = trace
        self.points_below = _points_below(qt)
        self.top = _effective_root(qt, self.points_below)
        self.value = INF
        self._bcache: dict[int, Boundary] = {}
        self._kept: dict[int, Boundary] = {}

    # boundaries of cells with a table are kept; others go through a bounded cache
    def boundary(self, cell: Cell) -> Boundary:
        b = self._kept.get(cell.id) or self._bcache.get(cell.id)
        if b is None:
            if len(self._bcache) > 4096:
                self._bcache.clear()
            b = self.frame.boundary(cell)
            self._bcache[cell.id] = b
        return b

    def nonempty(self, cell: Cell) -> bool:
        return self.points_below[cell.id] > 0

    def point_xy(self, cell: Cell) -> np.ndarray:
        return self.qt.grid_points[cell.points[0]].astype(float)

    def multipath(self, cell: Cell) -> np.ndarray | None:
        """Table of ``cell``; point leaves are rebuilt on demand."""
        if not self.nonempty(cell):
            return None
        if cell.id in self.tables:
            return self.tables[cell.id]
        if cell.points:
            return leaf_table(self.point_xy(cell), self.boundary(cell))
        raise InvariantError("child table missing")


def _points_below(qt: Quadtree) -> np.ndarray:
    cnt = np.zeros(len(qt.cells), dtype=np.int64)
    for c in reversed(qt.cells):
        cnt[c.id] = len(c.points) + sum(cnt[k.id] for k in c.children)
    return cnt


def _effective_root(qt: Quadtree, below: np.ndarray) -> Cell:
    """Highest cell whose points are split between at least two children."""
    c = qt.root
    while True:
        full = [k for k in c.children if below[k.id] > 0]
        if len(full) != 1:
            return c
        c = full[0]


class _Stack:
    """Children of one cell laid out for the kernels."""

    def __init__(self, table: DpTable, cell: Cell):
        fr = table.frame
        P, K = fr.P, fr.kmax
        self.Tm = np.full((4, 4, P, 4, P), INF)
        self.cxy = np.empty((4, 4, P, 2))
        self.pen = np.empty((4, K + 1, 4, P))
        self.bnds = []
        for c, kid in enumerate(cell.children):
            b = table.boundary(kid)
            self.bnds.append(b)
            self.cxy[c] = b.xy
            self.pen[c] = b.pen
            if not table.nonempty(kid):
                continue
            if kid.points and not kid.children:
                px, py = table.point_xy(kid)
                _k.fill_leaf(b.xy, b.allowed(2), float(px), float(py), self.Tm[c])
            else:
                A = table.tables.get(kid.id)
                if A is None:
                    raise InvariantError("child table missing")
                self.Tm[c] = A

    def args(self, packed: PackedRoutes) -> tuple:
        return (self.Tm, self.cxy, self.pen, packed.child, packed.kind, packed.enter, packed.leave,
                packed.cin, packed.cout)

    def cmap(self, parent: Boundary) -> np.ndarray:
        P = parent.free.shape[1]
        cfree = np.stack([b.free for b in self.bnds])
        cvalid = np.stack([b.valid for b in self.bnds])
        m = np.full((4, 4, P), -1, dtype=np.int64)
        _k.child_to_parent(parent.free, parent.valid, cfree, cvalid, _OUTER_SIDES, m)
        return m


_OUTER_SIDES = np.array([OUTER_SIDES[c] for c in range(4)], dtype=np.int64)


def _pattern(table: DpTable, cell: Cell) -> tuple[bool, ...]:
    return tuple(bool(table.nonempty(k)) for k in cell.children)


def combine_children(table: DpTable, cell: Cell) -> np.ndarray:
    """Parent matrix from the four children along every open route."""
    P = table.frame.P
    packed = packed_for(_pattern(table, cell), table.frame.limits, False)
    st = _Stack(table, cell)
    parent = table.boundary(cell)
    out = np.full((4, P, 4, P), INF)
    dead = _k.combine_open(*st.args(packed), packed.length, packed.shared, st.cmap(parent),
                           parent.allowed(1), parent.allowed(2), out)
    table.stats.routes_examined += len(packed.routes)
    table.stats.routes_infeasible += int(dead)
    return out


def close_top(table: DpTable, cell: Cell) -> tuple[float, np.ndarray]:
    """Cheapest closed route through the children of the top cell."""
    packed = packed_for(_pattern(table, cell), table.frame.limits, True)
    st = _Stack(table, cell)
    best = np.full(len(packed.routes), INF)
    if len(packed.routes):
        _k.close_routes(*st.args(packed), packed.length, packed.shared, best)
    table.stats.routes_examined += len(packed.routes)
    table.stats.routes_infeasible += int(np.sum(~np.isfinite(best)))
    return (float(best.min()) if best.size else INF), best


def dp2_leaf(table: DpTable, cell: Cell, M2) -> float:
    """Multipath value of a leaf for a matching given as pairs of flat portal indices."""
    M2 = list(M2)
    if not cell.points:
        return 0.0 if not M2 else INF
    if len(M2) != 1:
        return INF
    (u, v), = M2
    A = leaf_table(table.point_xy(cell), table.boundary(cell)).reshape(4 * table.frame.P, -1)
    return float(A[u, v])


def dp2_compressed(table: DpTable, cell: Cell, M2) -> float:
    M2 = list(M2)
    if cell.kind != OUTER:
        raise ValueError("not an outer dummy")
    if len(M2) != 1:
        return INF
    (u, v), = M2
    A = table.tables.get(cell.id)
    if A is None:
        A = _outer_from_inner(table, cell)
    return float(A.reshape(4 * table.frame.P, -1)[u, v])


def dp2(table: DpTable, cell: Cell, M2) -> float:
    """Multipath value of any non-top cell for a matching of flat portal indices.

    A cell without points admits only the empty matching (value 0); a cell
    with points is crossed by exactly one piece, so it needs one pair.
    """
    M2 = list(M2)
    if not table.nonempty(cell):
        return 0.0 if not M2 else INF
    if cell.points and not cell.children:
        return dp2_leaf(table, cell, M2)
    if cell.kind == OUTER:
        return dp2_compressed(table, cell, M2)
    if len(M2) != 1 or cell.id not in table.tables:
        return INF
    (u, v), = M2
    return float(table.tables[cell.id].reshape(4 * table.frame.P, -1)[u, v])


def dp1(points_pairs) -> float:
    """Total length of straight portal-to-portal segments."""
    return float(sum(math.hypot(float(a[0]) - float(b[0]), float(a[1]) - float(b[1])) for a, b in points_pairs))


def _outer_from_inner(table: DpTable, cell: Cell) -> np.ndarray:
    inner = cell.children[0]
    ob, ib = table.boundary(cell), table.boundary(inner)
    C = connector(ob, ib, cell, inner, table.frame.D)
    return outer_table(table.multipath(inner), C, ob)


def fill(qt: Quadtree, idx: CrossingIndex, config: DpConfig, trace: bool = False) -> DpTable:
    """Bottom-up pass over the subtree of the top cell."""
    table = DpTable(qt, idx, config, trace)
    top = table.top
    if table.points_below[top.id] == 0:
        raise InvariantError("no points")
    if not top.children:
        table.value = 0.0
        return table
    order = []
    stack = [top]
    while stack:
        c = stack.pop()
        order.append(c)
        stack.extend(k for k in c.children if table.nonempty(k) and k.children)
    for c in reversed(order):
        before = table.stats.routes_examined
        if c is top:
            table.value, _ = close_top(table, c)
        else:
            if c.kind == OUTER:
                table.tables[c.id] = _outer_from_inner(table, c)
            else:
                table.tables[c.id] = combine_children(table, c)
            table._kept[c.id] = table.boundary(c)
        table.stats.cells += 1
        if trace:
            table.stats.trace.append(f"{c.id} {c.kind} {table.stats.routes_examined - before}")
    if not np.isfinite(table.value):
        raise InvariantError("no feasible tour at the top cell")
    return table


# ---------------------------------------------------------------- extraction


def _close(a: float, b: float) -> bool:
    return a == b or abs(a - b) <= 1e-12 * max(1.0, abs(b))


class _Walker:
    def __init__(self, table: DpTable):
        self.t = table
        self.fr = table.frame

    def pos(self, cell: Cell, flat: int) -> tuple[float, float]:
        x, y = self.t.boundary(cell).flat_xy[flat]
        return (float(x), float(y))

    def piece(self, cell: Cell, u: int, v: int) -> list:
        """Waypoints of the table's optimum in ``cell`` from portal u to v."""
        if cell.points and not cell.children:
            return [self.pos(cell, u), *cell.points, self.pos(cell, v)]
        if cell.kind == OUTER:
            return self._outer(cell, u, v)
        return self._regular(cell, u, v)

    def _outer(self, cell: Cell, u: int, v: int) -> list:
        t = self.t
        inner = cell.children[0]
        ob, ib = t.boundary(cell), t.boundary(inner)
        n4 = 4 * self.fr.P
        C = connector(ob, ib, cell, inner, self.fr.D).reshape(n4, n4)
        Ain = t.multipath(inner).reshape(n4, n4)
        target = t.tables[cell.id].reshape(n4, n4)[u, v]
        M = C[u][:, None] + Ain
        x = M.min(axis=0)
        tot = x + C[v]
        i2 = int(np.argmin(tot))
        if not _close(float(tot[i2]), float(target)):
            raise InvariantError("broken backpointer chain")
        i1 = int(np.argmin(M[:, i2]))
        return [self.pos(cell, u), *self.piece(inner, i1, i2), self.pos(cell, v)]

    def _regular(self, cell: Cell, u: int, v: int) -> list:
        t = self.t
        P = self.fr.P
        target = float(t.tables[cell.id].reshape(4 * P, 4 * P)[u, v])
        packed = packed_for(_pattern(t, cell), self.fr.limits, False)
        st = _Stack(t, cell)
        parent = t.boundary(cell)
        su, pu, sv, pv = u // P, u % P, v // P, v % P
        pp = parent.allowed(2 if su == sv else 1)
        args = np.zeros((max(1, packed.child.shape[1]), P), dtype=np.int64)
        i, flip, a, b = _k.find_open(*st.args(packed), packed.length, st.cmap(parent), pp,
                                     su, pu, sv, pv, target, args)
        if i < 0:
            raise InvariantError("broken backpointer chain")
        pts = self._unroll(cell, st, packed, int(i), int(a), int(b))
        return pts[::-1] if flip else pts

    def _unroll(self, cell: Cell, st: _Stack, packed: PackedRoutes, i: int, a: int, b: int) -> list:
        P = self.fr.P
        m = int(packed.length[i])
        args = np.zeros((max(1, m), P), dtype=np.int64)
        _k.row_chain(*st.args(packed), i, m, a, args)
        exits = [0] * m
        exits[m - 1] = b
        for s in range(m - 1, 0, -1):
            exits[s - 1] = int(args[s - 1, exits[s]])
        out = []
        for s, step in enumerate(packed.routes[i].steps):
            enter = a if s == 0 else exits[s - 1]
            kid = cell.children[step.child]
            fu, fv = step.enter * P + enter, step.leave * P + exits[s]
            if step.direct:
                out.extend([self.pos(kid, fu), self.pos(kid, fv)])
            else:
                out.extend(self.piece(kid, fu, fv))
        return out

    def top(self, cell: Cell) -> list:
        t = self.t
        if not cell.children:
            return list(cell.points)
        packed = packed_for(_pattern(t, cell), self.fr.limits, True)
        st = _Stack(t, cell)
        args = np.zeros((max(1, packed.child.shape[1]), self.fr.P), dtype=np.int64)
        i, a = _k.find_closed(*st.args(packed), packed.length, t.value, args)
        if i < 0:
            raise InvariantError("broken backpointer chain")
        return self._unroll(cell, st, packed, int(i), int(a), int(a))


def extract_tour(table: DpTable) -> Tour:
    """Walk the filled tables back down and read off the point order."""
    walk = _Walker(table)
    waypoints = walk.top(table.top)
    order = []
    seen = set()
    for w in waypoints:
        if isinstance(w, (int, np.integer)):
            if int(w) in seen:
                raise InvariantError("point visited twice")
            seen.add(int(w))
            order.append(int(w))
    if len(order) != table.qt.n:
        raise InvariantError("tour misses points")
    table.waypoints = waypoints
    return Tour(tuple(order), tour_cost(table.qt.grid_points, order))


def polyline_length(table: DpTable, waypoints) -> float:
    pts = table.qt.grid_points
    xy = [tuple(map(float, pts[w])) if isinstance(w, (int, np.integer)) else w for w in waypoints]
    if len(xy) < 2:
        return 0.0
    arr = np.array(xy + [xy[0]])
    return float(np.hypot(*np.diff(arr, axis=0).T).sum())


def solve(qt: Quadtree, idx: CrossingIndex, r, inst=None, trace: bool = False):
    """Best tour of the restricted class for this shift; returns (Tour, DpTable)."""
    config = r if isinstance(r, DpConfig) else DpConfig(int(r))
    if qt.n == 1:
        table = DpTable(qt, idx, config)
        table.value = 0.0
        table.waypoints = [0]
        return Tour((0,), 0.0), table
    table = fill(qt, idx, config, trace)
    tour = extract_tour(table)
    if inst is not None:
        tour = Tour(tour.order, tour_cost(inst.original, tour.order))
    return tour, table


# ---------------------------------------------------------------- matchings


def enumerate_noncrossing_matchings(slots, size: int) -> list[tuple[tuple, ...]]:
    """All ways to pick ``size`` disjoint slot pairs with no two pairs interleaving.

    ``slots`` is taken in cyclic order.  Slots may stay unused unless
    ``2 * size == len(slots)``, in which case the matchings are perfect.
    """
    slots = list(slots)
    if size < 0 or 2 * size > len(slots):
        return []

    def rec(lo: int, hi: int, k: int):
        if k == 0:
            return [()]
        if hi - lo < 2 * k:
            return []
        res = list(rec(lo + 1, hi, k))  # slot lo unused
        for j in range(lo + 1, hi):
            for a in range(k):
                for ins in rec(lo + 1, j, a):
                    for outs in rec(j + 1, hi, k - 1 - a):
                        res.append(((slots[lo], slots[j]),) + ins + outs)
        return res

    return rec(0, len(slots), size)


def slot_sequence(table: DpTable, cell: Cell, counts=(1, 1, 1, 1)) -> list[tuple[int, int, int]]:
    """Portals of ``cell`` allowed at the given per-side counts, each as two slots,
    counter-clockwise from the lower-left corner.  Slot = (side, position, copy)."""
    b = table.boundary(cell)
    out = []
    for j in range(4):
        k = counts[j]
        if k == 0:
            continue
        idx = [i for i in range(b.free.shape[1]) if b.valid[j, i] and b.pen[min(k, table.frame.kmax), j, i] == 0]
        if j in (2, 3):
            idx.reverse()
        for i in idx:
            out.extend([(j, i, 0), (j, i, 1)])
    return out
