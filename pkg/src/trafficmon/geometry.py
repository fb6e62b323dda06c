"""2D geometry primitives shared by the simulator, rasterizer and grounding.

All polygons are lists of (x, y) vertex tuples in order around the outline.
Containment uses the even-odd rule with boundary points counted as inside.
"""
from __future__ import annotations

import math


Point = tuple[float, float]
Polygon = list[Point]


def rect_corners(cx: float, cy: float, hx: float, hy: float, heading: float) -> Polygon:
    """Corners of an oriented rectangle, counter-clockwise from front-right."""
    c, s = math.cos(heading), math.sin(heading)
    out: Polygon = []
    for dx, dy in ((hx, -hy), (hx, hy), (-hx, hy), (-hx, -hy)):
        out.append((cx + dx * c - dy * s, cy + dx * s + dy * c))
    return out


def _project_onto(poly: Polygon, axis: Point) -> tuple[float, float]:
    dots = [p[0] * axis[0] + p[1] * axis[1] for p in poly]
    return min(dots), max(dots)


def convex_overlap_sat(a: Polygon, b: Polygon) -> bool:
    """Separating-axis overlap test for convex polygons; touching counts."""
    for poly in (a, b):
        n = len(poly)
        for i in range(n):
            ex = poly[(i + 1) % n][0] - poly[i][0]
            ey = poly[(i + 1) % n][1] - poly[i][1]
            axis = (-ey, ex)
            amin, amax = _project_onto(a, axis)
            bmin, bmax = _project_onto(b, axis)
            if amax < bmin or bmax < amin:
                return False
    return True


def circle_rect_overlap(center: Point, radius: float,
                        cx: float, cy: float, hx: float, hy: float, heading: float) -> bool:
    """Circle vs oriented rectangle; touching counts."""
    c, s = math.cos(heading), math.sin(heading)
    dx, dy = center[0] - cx, center[1] - cy
    # circle center in the rectangle's frame
    lx = dx * c + dy * s
    ly = -dx * s + dy * c
    qx = min(max(lx, -hx), hx)
    qy = min(max(ly, -hy), hy)
    return (lx - qx) ** 2 + (ly - qy) ** 2 <= radius * radius


def point_in_polygon(point: Point, poly: Polygon) -> bool:
    """Even-odd containment; points on an edge count as inside."""
    x, y = point
    n = len(poly)
    if n < 3:
        return False
    inside = False
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        if _on_segment(x, y, x0, y0, x1, y1):
            return True
        if (y0 > y) != (y1 > y):
            xisect = x0 + (x1 - x0) * (y - y0) / (y1 - y0)
            if xisect > x:
                inside = not inside
    return inside


def _on_segment(px: float, py: float, x0: float, y0: float, x1: float, y1: float,
                eps: float = 1e-9) -> bool:
    cross = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
    if abs(cross) > eps * max(1.0, abs(x1 - x0) + abs(y1 - y0)):
        return False
    dot = (px - x0) * (x1 - x0) + (py - y0) * (y1 - y0)
    length2 = (x1 - x0) ** 2 + (y1 - y0) ** 2
    return -eps <= dot <= length2 + eps


def clip_polygon_to_rect(poly: Polygon, xmin: float, ymin: float,
                         xmax: float, ymax: float) -> Polygon:
    """Sutherland-Hodgman clip against an axis-aligned rectangle."""
    def clip_edge(points: Polygon, inside, intersect) -> Polygon:
        out: Polygon = []
        n = len(points)
        for i in range(n):
            cur, nxt = points[i], points[(i + 1) % n]
            cur_in, nxt_in = inside(cur), inside(nxt)
            if cur_in:
                out.append(cur)
                if not nxt_in:
                    out.append(intersect(cur, nxt))
            elif nxt_in:
                out.append(intersect(cur, nxt))
        return out

    def cross_x(bound):
        def f(p, q):
            t = (bound - p[0]) / (q[0] - p[0])
            return (bound, p[1] + t * (q[1] - p[1]))
        return f

    def cross_y(bound):
        def f(p, q):
            t = (bound - p[1]) / (q[1] - p[1])
            return (p[0] + t * (q[0] - p[0]), bound)
        return f

    out = list(poly)
    for inside, intersect in (
        (lambda p: p[0] >= xmin, cross_x(xmin)),
        (lambda p: p[0] <= xmax, cross_x(xmax)),
        (lambda p: p[1] >= ymin, cross_y(ymin)),
        (lambda p: p[1] <= ymax, cross_y(ymax)),
    ):
        if not out:
            return []
        out = clip_edge(out, inside, intersect)
    return out


def polygon_area(poly: Polygon) -> float:
    n = len(poly)
    if n < 3:
        return 0.0
    acc = 0.0
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        acc += x0 * y1 - x1 * y0
    return abs(acc) * 0.5


def polygon_bounds(poly: Polygon) -> tuple[float, float, float, float]:
    xs = [p[0] for p in poly]
    ys = [p[1] for p in poly]
    return min(xs), min(ys), max(xs), max(ys)


def polygon_centroid(poly: Polygon) -> Point:
    """Area centroid; falls back to the vertex mean for degenerate outlines."""
    n = len(poly)
    acc = cx = cy = 0.0
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        w = x0 * y1 - x1 * y0
        acc += w
        cx += (x0 + x1) * w
        cy += (y0 + y1) * w
    if abs(acc) < 1e-12:
        return (sum(p[0] for p in poly) / n, sum(p[1] for p in poly) / n)
    return cx / (3.0 * acc), cy / (3.0 * acc)


def regular_polygon(cx: float, cy: float, radius: float, sides: int,
                    phase: float = 0.0) -> Polygon:
    return [
        (cx + radius * math.cos(phase + 2.0 * math.pi * k / sides),
         cy + radius * math.sin(phase + 2.0 * math.pi * k / sides))
        for k in range(sides)
    ]


def segment_distance(p0: Point, p1: Point, q0: Point, q1: Point) -> float:
    """Minimum distance between two segments (0 when they intersect)."""
    if segments_intersect(p0, p1, q0, q1):
        return 0.0
    return min(
        _point_segment_distance(p0, q0, q1),
        _point_segment_distance(p1, q0, q1),
        _point_segment_distance(q0, p0, p1),
        _point_segment_distance(q1, p0, p1),
    )


def segments_intersect(p0: Point, p1: Point, q0: Point, q1: Point) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if v > 1e-12:
            return 1
        if v < -1e-12:
            return -1
        return 0

    def within(a, b, c):
        return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))

    o1, o2 = orient(p0, p1, q0), orient(p0, p1, q1)
    o3, o4 = orient(q0, q1, p0), orient(q0, q1, p1)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and within(p0, p1, q0):
        return True
    if o2 == 0 and within(p0, p1, q1):
        return True
    if o3 == 0 and within(q0, q1, p0):
        return True
    return o4 == 0 and within(q0, q1, p1)


def _point_segment_distance(p: Point, a: Point, b: Point) -> float:
    ax, ay = b[0] - a[0], b[1] - a[1]
    length2 = ax * ax + ay * ay
    if length2 == 0.0:
        return math.hypot(p[0] - a[0], p[1] - a[1])
    t = ((p[0] - a[0]) * ax + (p[1] - a[1]) * ay) / length2
    t = min(max(t, 0.0), 1.0)
    return math.hypot(p[0] - (a[0] + t * ax), p[1] - (a[1] + t * ay))


def convex_polygon_distance(a: Polygon, b: Polygon) -> float:
    """Minimum separation between two convex polygons; 0 when overlapping."""
    if point_in_polygon(a[0], b) or point_in_polygon(b[0], a):
        return 0.0
    best = math.inf
    na, nb = len(a), len(b)
    for i in range(na):
        for j in range(nb):
            d = segment_distance(a[i], a[(i + 1) % na], b[j], b[(j + 1) % nb])
            if d == 0.0:
                return 0.0
            best = min(best, d)
    return best
