"""Self-intersection test for closed planar polylines using a uniform grid."""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np


def _orient(ax, ay, bx, by, cx, cy):
    v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return int(v > 0) - int(v < 0)


def _on_segment(ax, ay, bx, by, cx, cy):
    return min(ax, bx) <= cx <= max(ax, bx) and min(ay, by) <= cy <= max(ay, by)


def segments_intersect(p1, p2, q1, q2) -> bool:
    """Closed-segment intersection, touching and collinear overlap included."""
    o1 = _orient(*p1, *p2, *q1)
    o2 = _orient(*p1, *p2, *q2)
    o3 = _orient(*q1, *q2, *p1)
    o4 = _orient(*q1, *q2, *p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and _on_segment(*p1, *p2, *q1):
        return True
    if o2 == 0 and _on_segment(*p1, *p2, *q2):
        return True
    if o3 == 0 and _on_segment(*q1, *q2, *p1):
        return True
    if o4 == 0 and _on_segment(*q1, *q2, *p2):
        return True
    return False


def self_intersections(points, closed: bool = True, first_only: bool = True):
    """Pairs ``(i, j)`` of non-adjacent segments that intersect.

    Segment ``i`` joins ``points[i]`` and ``points[i + 1]`` (and, for closed
    polylines, the last point back to the first).  Segments are bucketed on
    a grid whose cell size is the longest segment, so only nearby pairs are
    tested.
    """
    pts = np.asarray(points, dtype=float)
    m = len(pts)
    nseg = m if closed else m - 1
    if nseg < 3:
        return []
    a = pts
    b = np.roll(pts, -1, axis=0) if closed else pts[1:]
    a = a[:nseg]
    seg_len = np.hypot(*(b - a).T)
    cell = float(seg_len.max()) or 1.0
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    grid = defaultdict(list)
    for i in range(nseg):
        for gx in range(math.floor(lo[i, 0] / cell), math.floor(hi[i, 0] / cell) + 1):
            for gy in range(math.floor(lo[i, 1] / cell), math.floor(hi[i, 1] / cell) + 1):
                grid[gx, gy].append(i)

    pa = [tuple(map(float, v)) for v in a]
    pb = [tuple(map(float, v)) for v in b]
    found = []
    seen = set()
    for bucket in grid.values():
        for u in range(len(bucket)):
            i = bucket[u]
            for v in range(u + 1, len(bucket)):
                j = bucket[v]
                key = (i, j) if i < j else (j, i)
                if key in seen:
                    continue
                seen.add(key)
                d = key[1] - key[0]
                if d <= 1 or (closed and d == nseg - 1):
                    continue
                if segments_intersect(pa[i], pb[i], pa[j], pb[j]):
                    found.append(key)
                    if first_only:
                        return found
    return sorted(found)


def is_simple(points, closed: bool = True) -> bool:
    return not self_intersections(points, closed=closed, first_only=True)
