"""Portal arithmetic: equally spaced grids on a side, their sparsity-dependent granularity,
and the portal set that adds the baseline tour's crossing."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .geometry import Point
from .quadtree import DIRECTIONS, Side

C_R_DEFAULT = 6.0


@dataclass(frozen=True)
class Granularity:
    r: int

    def __post_init__(self):
        if self.r < 5:
            raise ValueError("r must be at least 5")


def r_from_epsilon(epsilon: float, c_r: float = C_R_DEFAULT) -> int:
    if not (0 < epsilon <= 1):
        raise ValueError("epsilon must lie in (0, 1]")
    return max(5, math.ceil(c_r / epsilon))


def g(k: int, r: int) -> int:
    """Smallest power of two that is at least ceil(r^2 / 4k)."""
    if k < 1:
        raise ValueError("g(k) needs k >= 1")
    q = -(-r * r // (4 * k))
    p = 1
    while p < q:
        p *= 2
    return p


def _at(side: Side, t: Fraction) -> Point:
    (x0, y0), (x1, y1) = side.endpoints
    x0, y0, x1, y1 = (Fraction(v) for v in (x0, y0, x1, y1))
    return Point(x0 + (x1 - x0) * t, y0 + (y1 - y0) * t)


def grid(side: Side, m: int) -> list[Point]:
    """The m+1 points cutting ``side`` into m equal pieces, endpoints included."""
    if m < 1:
        raise ValueError("m must be positive")
    return [_at(side, Fraction(j, m)) for j in range(m + 1)]


@dataclass(frozen=True)
class PortalSet:
    side: Side
    offsets: tuple[Fraction, ...]  # increasing fractions of the side, 0 and 1 are the endpoints
    has_T_portal: bool
    T_portal_index: int | None

    @property
    def positions(self) -> list[Point]:
        return [_at(self.side, t) for t in self.offsets]

    def __len__(self):
        return len(self.offsets)


def portal_set_Z(side: Side, k: int, r: int, idx) -> PortalSet:
    from .crossing_index import cr_T

    m = g(k, r)
    offsets = {Fraction(j, m) for j in range(m + 1)}
    xf = cr_T(idx, side.cell, DIRECTIONS.index(side.direction))
    t = None
    if xf is not None:
        (x0, y0), (x1, y1) = side.endpoints
        free, start, length = (xf.x, x0, x1 - x0) if side.horizontal else (xf.y, y0, y1 - y0)
        t = (Fraction(free) - Fraction(start)) / Fraction(length)
        offsets.add(t)
    ordered = tuple(sorted(offsets))
    return PortalSet(side, ordered, xf is not None, ordered.index(t) if t is not None else None)
