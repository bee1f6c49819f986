"""Compiled inner loops of the dynamic program.

All matrices here are indexed by (side, position) pairs laid out as in
``dp``: a cell table has shape (4, P, 4, P).  A step of a route is a P x P
slice of either a child's table (multipath step) or of the straight-segment
distances between two sides of that child (direct step), plus the additive
0 / inf penalties that restrict portals by crossing count.  Every function
that reads a step goes through ``_step`` so forward values and the values
recomputed during extraction agree bit for bit.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

INF = np.inf


@njit(cache=True)
def fill_leaf(xy, pen2, px, py, out):
    """Table of a cell holding one location: portal -> point -> portal."""
    P = xy.shape[1]
    d = np.empty((4, P))
    for s in range(4):
        for a in range(P):
            d[s, a] = math.hypot(xy[s, a, 0] - px, xy[s, a, 1] - py)
    for s in range(4):
        for a in range(P):
            for t in range(4):
                for b in range(P):
                    v = d[s, a] + d[t, b]
                    if s == t:
                        v = v + pen2[s, a] + pen2[s, b]
                    out[s, a, t, b] = v


@njit(cache=True)
def _step(Tm, cxy, pen, c, kind, e, l, ci, co, X):
    P = X.shape[0]
    for a in range(P):
        pa = pen[c, ci, e, a]
        for b in range(P):
            if kind == 0:
                base = Tm[c, e, a, l, b]
            else:
                base = math.hypot(cxy[c, e, a, 0] - cxy[c, l, b, 0], cxy[c, e, a, 1] - cxy[c, l, b, 1])
            X[a, b] = base + pa + pen[c, co, l, b]


@njit(cache=True)
def _minplus_into(R, X, S):
    P = R.shape[0]
    Q = X.shape[1]
    for a in range(P):
        for c in range(Q):
            S[a, c] = INF
        for b in range(R.shape[1]):
            r = R[a, b]
            if r == INF:
                continue
            for c in range(Q):
                S[a, c] = min(S[a, c], r + X[b, c])


@njit(cache=True)
def _chain(Tm, cxy, pen, child, kind, enter, leave, cin, cout, t, m, start, buf, X):
    """Chain matrix of route ``t``.  ``buf[i]`` holds the product of steps 0..i;
    the first ``start`` of them are left over from the previous route."""
    if start == 0:
        _step(Tm, cxy, pen, child[t, 0], kind[t, 0], enter[t, 0], leave[t, 0], cin[t, 0], cout[t, 0], buf[0])
        start = 1
    for i in range(start, m):
        _step(Tm, cxy, pen, child[t, i], kind[t, i], enter[t, i], leave[t, i], cin[t, i], cout[t, i], X)
        _minplus_into(buf[i - 1], X, buf[i])
    return buf[m - 1]


@njit(cache=True)
def combine_open(Tm, cxy, pen, child, kind, enter, leave, cin, cout, length, shared, cmap, one, two, out):
    """Scatter every open route into the parent table ``out`` (pre-filled with inf).

    Returns the number of routes with no finite entry.
    """
    P = Tm.shape[2]
    buf = np.empty((child.shape[1], P, P))
    X = np.empty((P, P))
    dead = 0
    for t in range(child.shape[0]):
        m = length[t]
        M = _chain(Tm, cxy, pen, child, kind, enter, leave, cin, cout, t, m, min(shared[t], m), buf, X)
        s1 = enter[t, 0]
        s2 = leave[t, m - 1]
        c1 = child[t, 0]
        c2 = child[t, m - 1]
        pp = two if s1 == s2 else one
        alive = False
        for a in range(P):
            pa = cmap[c1, s1, a]
            if pa < 0:
                continue
            for b in range(P):
                pb = cmap[c2, s2, b]
                if pb < 0:
                    continue
                v = M[a, b] + pp[s1, pa] + pp[s2, pb]
                if v < INF:
                    alive = True
                if v < out[s1, pa, s2, pb]:
                    out[s1, pa, s2, pb] = v
                if v < out[s2, pb, s1, pa]:
                    out[s2, pb, s1, pa] = v
        if not alive:
            dead += 1
    return dead


@njit(cache=True)
def close_routes(Tm, cxy, pen, child, kind, enter, leave, cin, cout, length, shared, best):
    """Per closed route, the cheapest cycle (min over the diagonal of its chain)."""
    P = Tm.shape[2]
    buf = np.empty((child.shape[1], P, P))
    X = np.empty((P, P))
    for t in range(child.shape[0]):
        m = length[t]
        M = _chain(Tm, cxy, pen, child, kind, enter, leave, cin, cout, t, m, min(shared[t], m), buf, X)
        v = INF
        for a in range(P):
            if M[a, a] < v:
                v = M[a, a]
        best[t] = v


@njit(cache=True)
def row_chain(Tm, cxy, pen, child, kind, enter, leave, cin, cout, t, m, a, args):
    """Row ``a`` of route ``t`` propagated step by step.

    ``args[i, c]`` is the best exit of step ``i`` when step ``i + 1`` leaves at
    ``c``.  Returns the final row.
    """
    P = Tm.shape[2]
    X = np.empty((P, P))
    _step(Tm, cxy, pen, child[t, 0], kind[t, 0], enter[t, 0], leave[t, 0], cin[t, 0], cout[t, 0], X)
    v = X[a].copy()
    w = np.empty(P)
    for i in range(1, m):
        _step(Tm, cxy, pen, child[t, i], kind[t, i], enter[t, i], leave[t, i], cin[t, i], cout[t, i], X)
        for c in range(P):
            w[c] = INF
            args[i - 1, c] = 0
        for b in range(P):
            r = v[b]
            if r == INF:
                continue
            for c in range(P):
                x = r + X[b, c]
                if x < w[c]:
                    w[c] = x
                    args[i - 1, c] = b
        v, w = w, v
    return v


@njit(cache=True)
def _close(a, b):
    return a == b or abs(a - b) <= 1e-12 * max(1.0, abs(b))


@njit(cache=True)
def find_open(Tm, cxy, pen, child, kind, enter, leave, cin, cout, length, cmap, pp,
              su, pu, sv, pv, target, args):
    """First route (and orientation) whose value between parent portals u and v
    equals ``target``.  Returns (route, flipped, row, col) or (-1, 0, 0, 0)."""
    P = Tm.shape[2]
    extra = pp[su, pu] + pp[sv, pv]
    for t in range(child.shape[0]):
        m = length[t]
        s1 = enter[t, 0]
        s2 = leave[t, m - 1]
        c1 = child[t, 0]
        c2 = child[t, m - 1]
        for flip in range(2):
            if flip == 0:
                as_, ap, bs, bp = su, pu, sv, pv
            else:
                as_, ap, bs, bp = sv, pv, su, pu
            if s1 != as_ or s2 != bs:
                continue
            a = -1
            b = -1
            for i in range(P):
                if a < 0 and cmap[c1, s1, i] == ap:
                    a = i
                if b < 0 and cmap[c2, s2, i] == bp:
                    b = i
            if a < 0 or b < 0:
                continue
            v = row_chain(Tm, cxy, pen, child, kind, enter, leave, cin, cout, t, m, a, args)
            if _close(v[b] + extra, target):
                return t, flip, a, b
    return -1, 0, 0, 0


@njit(cache=True)
def find_closed(Tm, cxy, pen, child, kind, enter, leave, cin, cout, length, target, args):
    """First closed route and start portal whose cycle costs ``target``."""
    P = Tm.shape[2]
    for t in range(child.shape[0]):
        m = length[t]
        for a in range(P):
            v = row_chain(Tm, cxy, pen, child, kind, enter, leave, cin, cout, t, m, a, args)
            if _close(v[a], target):
                return t, a
    return -1, 0


@njit(cache=True)
def minplus(X, Y):
    out = np.empty((X.shape[0], Y.shape[1]))
    _minplus_into(X, Y, out)
    return out


@njit(cache=True)
def child_to_parent(pfree, pvalid, cfree, cvalid, outer_sides, cmap):
    """For each child's outer side, the parent portal index of each child portal, or -1."""
    P = pfree.shape[1]
    for c in range(4):
        for k in range(2):
            s = outer_sides[c, k]
            j = 0
            for i in range(P):
                cmap[c, s, i] = -1
                if not cvalid[c, s, i]:
                    continue
                f = cfree[c, s, i]
                while j < P and pvalid[s, j] and pfree[s, j] < f:
                    j += 1
                if j < P and pvalid[s, j] and pfree[s, j] == f:
                    cmap[c, s, i] = j


@njit(cache=True)
def fill_boundary(lx, ly, s_u, D, has, pos, tmpl, free, valid, pen, xy):
    """Portal layout of one cell: grid portals plus any stored crossing, per side.

    ``tmpl`` is the (K+1, P) penalty pattern of the grid portals alone.
    """
    P = free.shape[1]
    step = s_u // P
    for j in range(4):
        origin = lx if j % 2 == 0 else ly
        if j == 0:
            fixed = ly
        elif j == 1:
            fixed = lx + s_u
        elif j == 2:
            fixed = ly + s_u
        else:
            fixed = lx
        for i in range(P - 1):
            free[j, i] = origin + step * (i + 1)
            valid[j, i] = True
            for k in range(tmpl.shape[0]):
                pen[k, j, i] = tmpl[k, i]
        free[j, P - 1] = origin + s_u
        valid[j, P - 1] = False
        for k in range(tmpl.shape[0]):
            pen[k, j, P - 1] = INF
        if has[j]:
            rel = pos[j] - origin
            q = rel // step
            if rel % step:
                # the crossing falls between grid portals q and q + 1: insert it
                for i in range(P - 1, q, -1):
                    free[j, i] = free[j, i - 1]
                    for k in range(tmpl.shape[0]):
                        pen[k, j, i] = pen[k, j, i - 1]
                free[j, q] = pos[j]
                valid[j, P - 1] = True
                for k in range(1, tmpl.shape[0]):
                    pen[k, j, q] = 0.0
            else:
                for k in range(1, tmpl.shape[0]):
                    pen[k, j, q - 1] = 0.0
        for i in range(P):
            f = free[j, i] / D
            c = fixed / D
            if j % 2 == 0:
                xy[j, i, 0] = f
                xy[j, i, 1] = c
            else:
                xy[j, i, 0] = c
                xy[j, i, 1] = f
