"""Route templates: the ways one tour piece can thread the four children of a cell.

A route is a sequence of steps.  Each step runs inside one child from one of
its sides to another, either visiting that child's points (a multipath step)
or as a straight segment (a direct step).  Consecutive steps sit in
edge-adjacent children and meet on their shared side.  Every child holding
points gets exactly one multipath step, so each route collects all points of
the cell.  An open route starts and ends on the parent boundary; a closed
route (used only at the top of the tree) never touches it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# (child, child2) -> (side of child, side of child2) for the shared segment
GLUE = {
    (0, 1): (1, 3), (1, 0): (3, 1),
    (1, 2): (2, 0), (2, 1): (0, 2),
    (2, 3): (3, 1), (3, 2): (1, 3),
    (3, 0): (0, 2), (0, 3): (2, 0),
}
NEIGHBOUR = {(c, s): c2 for (c, c2), (s, _) in GLUE.items()}
OUTER_SIDES = {0: (0, 3), 1: (0, 1), 2: (1, 2), 3: (2, 3)}


@dataclass(frozen=True)
class Step:
    child: int
    direct: bool
    enter: int
    leave: int

    def reversed(self) -> "Step":
        return Step(self.child, self.direct, self.leave, self.enter)


@dataclass(frozen=True)
class Route:
    steps: tuple[Step, ...]
    closed: bool
    counts: tuple[tuple[int, int, int], ...]  # (child, side, crossings)

    def count(self, child: int, side: int) -> int:
        for c, s, k in self.counts:
            if c == child and s == side:
                return k
        return 0


@dataclass(frozen=True)
class Limits:
    """Caps on direct steps.  A route may use ``slack`` more direct steps than
    there are empty children; a closed route ``cycle_slack`` more."""

    k_max: int
    per_full_child: int = 1
    per_empty_child: int = 2
    slack: int = 1
    cycle_slack: int = 2


def _key(steps) -> tuple:
    return tuple((s.child, s.direct, s.enter, s.leave) for s in steps)


def _counts(steps, closed: bool) -> dict:
    cnt: dict[tuple[int, int], int] = {}
    for st in steps:
        cnt[(st.child, st.enter)] = cnt.get((st.child, st.enter), 0) + 1
        cnt[(st.child, st.leave)] = cnt.get((st.child, st.leave), 0) + 1
    return cnt


def _walk(nonempty: tuple[bool, ...], limits: Limits, closed: bool):
    """Yield every directed route as a tuple of steps."""
    need = frozenset(c for c in range(4) if nonempty[c])
    cap = 4 - len(need) + (limits.cycle_slack if closed else limits.slack)
    out = []

    def rec(steps, child, enter, visited, direct_used, cnt, start):
        for direct in (False, True):
            if direct:
                per_child = limits.per_full_child if child in need else limits.per_empty_child
                if direct_used[child] >= per_child or sum(direct_used) >= cap:
                    continue
            elif child not in need or child in visited:
                continue
            for leave in range(4):
                if direct and leave == enter:
                    continue
                c2 = dict(cnt)
                c2[(child, leave)] = c2.get((child, leave), 0) + 1
                if c2[(child, leave)] > limits.k_max:
                    continue
                st = Step(child, direct, enter, leave)
                vis = visited | ({child} if not direct else set())
                du = list(direct_used)
                if direct:
                    du[child] += 1
                nsteps = steps + (st,)
                if leave in OUTER_SIDES[child]:
                    if not closed and vis == need:
                        out.append(nsteps)
                    continue
                nxt = NEIGHBOUR[(child, leave)]
                nenter = GLUE[(child, nxt)][1]
                if closed and start == (nxt, nenter) and vis == need:
                    out.append(nsteps)
                c3 = dict(c2)
                c3[(nxt, nenter)] = c3.get((nxt, nenter), 0) + 1
                if c3[(nxt, nenter)] > limits.k_max:
                    continue
                rec(nsteps, nxt, nenter, vis, du, c3, start)

    if closed:
        c0 = min(need)
        for enter in range(4):
            if enter in OUTER_SIDES[c0]:
                continue
            # the closing crossing is already counted on entry
            rec((), c0, enter, frozenset(), [0, 0, 0, 0], {(c0, enter): 1}, (c0, enter))
    else:
        for child in range(4):
            for enter in OUTER_SIDES[child]:
                rec((), child, enter, frozenset(), [0, 0, 0, 0], {(child, enter): 1}, None)
    return out


def _canonical_closed(steps: tuple[Step, ...]) -> tuple[Step, ...]:
    """Rotate a closed route so it starts with the first nonempty child's multipath step."""
    c0 = min(s.child for s in steps if not s.direct)
    i = next(i for i, s in enumerate(steps) if s.child == c0 and not s.direct)
    return steps[i:] + steps[:i]


@lru_cache(maxsize=None)
def routes_for(nonempty: tuple[bool, ...], limits: Limits, closed: bool) -> tuple[Route, ...]:
    """One representative per undirected route, in a fixed order."""
    if not any(nonempty):
        return ()
    seen = set()
    result = []
    for steps in _walk(nonempty, limits, closed):
        cnt = _counts(steps, closed)
        if any(k > limits.k_max for k in cnt.values()):
            continue
        rev = tuple(s.reversed() for s in reversed(steps))
        if closed:
            rev = _canonical_closed(rev)
        key, rkey = _key(steps), _key(rev)
        if min(key, rkey) in seen:
            continue
        seen.add(min(key, rkey))
        chosen = steps if key <= rkey else rev
        counts = tuple(sorted((c, s, k) for (c, s), k in _counts(chosen, closed).items()))
        result.append(Route(chosen, closed, counts))
    result.sort(key=lambda r: (len(r.steps), _key(r.steps)))
    return tuple(result)


@dataclass(frozen=True)
class PackedRoutes:
    """Routes as padded integer arrays of shape (T, m_max) for the compiled kernels.

    Routes are in lexicographic step order and ``shared[t]`` counts the leading
    steps route ``t`` has in common with route ``t - 1``, so chain prefixes can
    be reused.
    """

    routes: tuple[Route, ...]
    child: np.ndarray
    kind: np.ndarray
    enter: np.ndarray
    leave: np.ndarray
    cin: np.ndarray
    cout: np.ndarray
    length: np.ndarray
    shared: np.ndarray


@lru_cache(maxsize=None)
def packed_for(nonempty: tuple[bool, ...], limits: Limits, closed: bool) -> PackedRoutes:
    rs = tuple(sorted(routes_for(nonempty, limits, closed), key=lambda r: _key(r.steps)))
    m = max((len(r.steps) for r in rs), default=1)
    arr = np.zeros((6, len(rs), m), dtype=np.int64)
    length = np.zeros(len(rs), dtype=np.int64)
    for t, r in enumerate(rs):
        length[t] = len(r.steps)
        for i, st in enumerate(r.steps):
            arr[:, t, i] = (st.child, int(st.direct), st.enter, st.leave,
                            r.count(st.child, st.enter), r.count(st.child, st.leave))
    shared = np.zeros(len(rs), dtype=np.int64)
    for t in range(1, len(rs)):
        top = min(length[t - 1], length[t])
        while shared[t] < top and (arr[:, t - 1, shared[t]] == arr[:, t, shared[t]]).all():
            shared[t] += 1
    return PackedRoutes(rs, *arr, length, shared)
