"""Shifted dissection and the compressed quadtree built from Morton keys.

Coordinates inside this module live in two frames.  Grid coordinates are the
integers of a GridInstance.  Shifted coordinates are ``X = x + a1 - 1`` which
lie in ``[0, 2L - 1]``; the cell at level ``d`` with index ``(i, j)`` covers the
shifted integers ``[i*s, (i+1)*s - 1]`` with ``s = 2L >> d``.  Geometrically that
cell is ``[i*s - a1 + 1/2, (i+1)*s - a1 + 1/2]`` in grid coordinates, so no
integer point ever sits on a cell boundary.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .geometry import GridInstance

# Side order used everywhere in the package.
DIRECTIONS = ("bottom", "right", "top", "left")
# Children are stored counter-clockwise from the lower-left quadrant.
SW, SE, NE, NW = 0, 1, 2, 3
CHILD_OFFSETS = ((0, 0), (1, 0), (1, 1), (0, 1))
# Morton digit (ybit << 1 | xbit) -> child slot.
_DIGIT_TO_CHILD = (SW, SE, NW, NE)

ROOT, INTERNAL, LEAF, EMPTY, OUTER = "root", "internal", "leaf", "empty-dummy", "outer-dummy"


@dataclass(frozen=True)
class Shift:
    a1: int
    a2: int


def sample_shift(L: int, rng_seed: int) -> Shift:
    rng = np.random.default_rng(rng_seed)
    a1, a2 = rng.integers(1, L + 1, size=2)
    return Shift(int(a1), int(a2))


class Cell:
    __slots__ = ("id", "level", "ix", "iy", "kind", "children", "points", "parent", "_L", "_shift")

    def __init__(self, level, ix, iy, kind, L, shift):
        self.id = -1
        self.level = level
        self.ix = ix
        self.iy = iy
        self.kind = kind
        self.children: list[Cell] = []
        self.points: tuple[int, ...] = ()
        self.parent: Cell | None = None
        self._L = L
        self._shift = shift

    @property
    def side_len(self) -> int:
        return (2 * self._L) >> self.level

    @property
    def lo(self) -> tuple[float, float]:
        s = self.side_len
        return (self.ix * s - self._shift.a1 + 0.5, self.iy * s - self._shift.a2 + 0.5)

    @property
    def lo2(self) -> tuple[int, int]:
        """Twice the lower corner; always odd integers."""
        s = self.side_len
        return (2 * (self.ix * s - self._shift.a1) + 1, 2 * (self.iy * s - self._shift.a2) + 1)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def contains(self, x: float, y: float) -> bool:
        lx, ly = self.lo
        s = self.side_len
        return lx < x < lx + s and ly < y < ly + s

    def __repr__(self):
        return f"Cell(id={self.id}, level={self.level}, lo={self.lo}, kind={self.kind})"


@dataclass(frozen=True)
class Side:
    cell: int
    direction: str
    endpoints: tuple[tuple[float, float], tuple[float, float]]
    level: int

    @property
    def horizontal(self) -> bool:
        return self.direction in ("bottom", "top")


class Quadtree:
    def __init__(self, root: Cell, shift: Shift, L: int, grid_points: np.ndarray, augmented: bool):
        self.root = root
        self.grid_points = grid_points
        n = len(grid_points)
        self.shift = shift
        self.L = L
        self.n = n
        self.augmented = augmented
        self.cells: list[Cell] = []
        for c in _preorder(root):
            c.id = len(self.cells)
            self.cells.append(c)
        self.point_leaf = np.full(n, -1, dtype=np.int64)
        for c in self.cells:
            for p in c.points:
                self.point_leaf[p] = c.id

    @property
    def vertex_count(self) -> int:
        return len(self.cells)

    @property
    def depth_bits(self) -> int:
        return (2 * self.L).bit_length() - 1

    def dump(self) -> str:
        lines = []
        for c in self.cells:
            lx, ly = c.lo
            pts = ",".join(map(str, c.points)) or "-"
            lines.append(f"{c.level} {lx:g} {ly:g} {c.side_len} {c.kind} {pts}")
        return "\n".join(lines) + "\n"


def _preorder(root: Cell) -> Iterator[Cell]:
    stack = [root]
    while stack:
        c = stack.pop()
        yield c
        stack.extend(reversed(c.children))


def _spread_bits(v: np.ndarray) -> np.ndarray:
    v = v.astype(np.uint64) & np.uint64(0xFFFFFFFF)
    v = (v | (v << np.uint64(16))) & np.uint64(0x0000FFFF0000FFFF)
    v = (v | (v << np.uint64(8))) & np.uint64(0x00FF00FF00FF00FF)
    v = (v | (v << np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    v = (v | (v << np.uint64(2))) & np.uint64(0x3333333333333333)
    v = (v | (v << np.uint64(1))) & np.uint64(0x5555555555555555)
    return v


def morton_keys(shifted: np.ndarray) -> np.ndarray:
    return (_spread_bits(shifted[:, 1]) << np.uint64(1)) | _spread_bits(shifted[:, 0])


def shifted_coords(inst: GridInstance, shift: Shift) -> np.ndarray:
    X = inst.points + np.array([shift.a1 - 1, shift.a2 - 1], dtype=np.int64)
    if X.size and (X.min() < 0 or X.max() > 2 * inst.L - 1):
        raise ValueError("shift/grid mismatch")
    return X


def build_compressed_quadtree(inst: GridInstance, shift: Shift) -> Quadtree:
    """Compressed quadtree: root, branching cells and point leaves only.

    A child of a branching cell may sit several levels deeper (a compressed
    edge); ``add_dummy_cells`` turns those into outer/inner pairs.
    """
    L = inst.L
    if not (1 <= shift.a1 <= L and 1 <= shift.a2 <= L):
        raise ValueError("shift/grid mismatch")
    K = (2 * L).bit_length() - 1
    X = shifted_coords(inst, shift)
    keys = morton_keys(X)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    uniq, starts = np.unique(sorted_keys, return_index=True)
    codes = [int(c) for c in uniq]
    bounds = list(starts) + [len(order)]
    groups = [tuple(sorted(int(i) for i in order[bounds[g]:bounds[g + 1]])) for g in range(len(codes))]

    def xy_prefix(code: int, level: int) -> tuple[int, int]:
        ix = iy = 0
        for d in range(level):
            digit = (code >> (2 * (K - 1 - d))) & 3
            ix = (ix << 1) | (digit & 1)
            iy = (iy << 1) | (digit >> 1)
        return ix, iy

    def lcp(a: int, b: int) -> int:
        return (2 * K - (a ^ b).bit_length()) // 2

    def build(lo: int, hi: int, level: int) -> Cell:
        if hi - lo == 1:
            ix, iy = xy_prefix(codes[lo], level)
            leaf = Cell(level, ix, iy, LEAF, L, shift)
            leaf.points = groups[lo]
            return leaf
        b = lcp(codes[lo], codes[hi - 1])
        ix, iy = xy_prefix(codes[lo], b)
        node = Cell(b, ix, iy, INTERNAL, L, shift)
        shift_bits = 2 * (K - b - 1)
        base = (codes[lo] >> (shift_bits + 2)) << (shift_bits + 2)
        cuts = [lo]
        for digit in (1, 2, 3):
            cuts.append(bisect.bisect_left(codes, base | (digit << shift_bits), cuts[-1], hi))
        cuts.append(hi)
        kids = {}
        for digit in range(4):
            if cuts[digit] < cuts[digit + 1]:
                kids[_DIGIT_TO_CHILD[digit]] = build(cuts[digit], cuts[digit + 1], b + 1)
        for slot in sorted(kids):
            kids[slot].parent = node
            node.children.append(kids[slot])
        return node

    if len(codes) == 1:
        root = Cell(0, 0, 0, ROOT, L, shift)
        root.points = groups[0]
    elif lcp(codes[0], codes[-1]) == 0:
        root = build(0, len(codes), 0)
        root.kind = ROOT
    else:
        root = Cell(0, 0, 0, ROOT, L, shift)
        child = build(0, len(codes), 1)
        child.parent = root
        root.children.append(child)
    return Quadtree(root, shift, L, inst.points, augmented=False)


def _quadrant_of(parent: Cell, child: Cell) -> int:
    up = child.level - parent.level - 1
    dx = (child.ix >> up) & 1
    dy = (child.iy >> up) & 1
    return CHILD_OFFSETS.index((dx, dy))


def add_dummy_cells(qt: Quadtree) -> Quadtree:
    """Give every branching cell exactly four children.

    Empty quadrants become empty dummies; a quadrant holding a compressed
    descendant becomes an outer dummy whose only child is that descendant.
    """
    if qt.augmented:
        return qt
    L, shift = qt.L, qt.shift

    def copy(node: Cell) -> Cell:
        new = Cell(node.level, node.ix, node.iy, node.kind, L, shift)
        new.points = node.points
        if not node.children:
            return new
        by_quadrant = {_quadrant_of(node, c): c for c in node.children}
        for q, (dx, dy) in enumerate(CHILD_OFFSETS):
            qx, qy = 2 * node.ix + dx, 2 * node.iy + dy
            c = by_quadrant.get(q)
            if c is None:
                kid = Cell(node.level + 1, qx, qy, EMPTY, L, shift)
            elif c.level == node.level + 1:
                kid = copy(c)
            else:
                kid = Cell(node.level + 1, qx, qy, OUTER, L, shift)
                inner = copy(c)
                inner.parent = kid
                kid.children.append(inner)
            kid.parent = new
            new.children.append(kid)
        return new

    return Quadtree(copy(qt.root), shift, L, qt.grid_points, augmented=True)


def _line_level(level: int, t: int) -> int:
    """Level of the dissection line at index ``t`` among cells of ``level``."""
    if t == 0:
        return 0
    return level - ((t & -t).bit_length() - 1)


def sides_of(cell: Cell) -> tuple[Side, Side, Side, Side]:
    lx, ly = cell.lo
    s = float(cell.side_len)
    lv = cell.level
    return (
        Side(cell.id, "bottom", ((lx, ly), (lx + s, ly)), _line_level(lv, cell.iy)),
        Side(cell.id, "right", ((lx + s, ly), (lx + s, ly + s)), _line_level(lv, cell.ix + 1)),
        Side(cell.id, "top", ((lx, ly + s), (lx + s, ly + s)), _line_level(lv, cell.iy + 1)),
        Side(cell.id, "left", ((lx, ly), (lx, ly + s)), _line_level(lv, cell.ix)),
    )


def build_tree(inst: GridInstance, shift: Shift) -> Quadtree:
    return add_dummy_cells(build_compressed_quadtree(inst, shift))
