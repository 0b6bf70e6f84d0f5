"""Planar convex geometry: hulls, convex-set distance (GJK), segment helpers.

Points are complex numbers; polygons are vertex arrays in counterclockwise
order.  Degenerate "polygons" (single points, segments) are valid convex sets
throughout.
"""
from __future__ import annotations

import numpy as np


def _cross(o, a, b) -> float:
    return (a.real - o.real) * (b.imag - o.imag) - (a.imag - o.imag) * (b.real - o.real)


def _akl_toussaint_filter(pts: np.ndarray) -> np.ndarray:
    """Drop points strictly inside the quadrilateral of coordinate extremes."""
    if pts.size < 16:
        return pts
    corners = [
        pts[np.argmin(pts.real)],
        pts[np.argmin(pts.imag)],
        pts[np.argmax(pts.real)],
        pts[np.argmax(pts.imag)],
    ]
    keep = np.zeros(pts.size, dtype=bool)
    for i in range(4):
        a, b = corners[i], corners[(i + 1) % 4]
        d = b - a
        keep |= (d.real * (pts.imag - a.imag) - d.imag * (pts.real - a.real)) >= 0
    return pts[keep]


def convex_hull(points) -> np.ndarray:
    """Convex hull vertices, counterclockwise, collinear points dropped.

    Monotone chain; returns 1 or 2 vertices for degenerate inputs.
    """
    pts = np.unique(np.asarray(points, dtype=complex))
    if pts.size > 2:
        pts = _akl_toussaint_filter(pts)
    if pts.size <= 2:
        return pts
    order = np.lexsort((pts.imag, pts.real))
    pts = pts[order]

    def build(seq):
        h = []
        for p in seq:
            while len(h) >= 2 and _cross(h[-2], h[-1], p) <= 0:
                h.pop()
            h.append(p)
        return h

    lower = build(pts)
    upper = build(pts[::-1])
    hull = lower[:-1] + upper[:-1]
    if not hull:  # all collinear: keep the two extremes
        return np.array([pts[0], pts[-1]])
    return np.asarray(hull)


def point_segment_distance(p: complex, a: complex, b: complex) -> float:
    ab = b - a
    den = ab.real * ab.real + ab.imag * ab.imag
    if den == 0.0:
        return abs(p - a)
    t = ((p.real - a.real) * ab.real + (p.imag - a.imag) * ab.imag) / den
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return abs(p - (a + t * ab))


def _closest_on_segment(a, b):
    """Closest point to the origin on segment [a, b] plus barycentric weight of b."""
    ab = b - a
    den = ab.real * ab.real + ab.imag * ab.imag
    if den == 0.0:
        return a, 0.0
    t = -(a.real * ab.real + a.imag * ab.imag) / den
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return a + t * ab, t


def gjk_distance(A, B, tol: float = 1e-13, max_iter: int = 256):
    """Distance between the convex hulls of two point sets, with witnesses.

    Returns ``(distance, point_a, point_b)`` where the witness points realize
    the distance (for intersecting sets a common point is returned twice).
    Exact supports over the given vertices; works for 1- and 2-point sets.
    """
    A = np.asarray(A, dtype=complex).ravel()
    B = np.asarray(B, dtype=complex).ravel()
    if A.size == 0 or B.size == 0:
        raise ValueError("empty vertex set")
    Ax, Ay, Bx, By = A.real, A.imag, B.real, B.imag

    def support(dx, dy):
        i = int(np.argmax(Ax * dx + Ay * dy))
        j = int(np.argmax(-Bx * dx - By * dy))
        return A[i] - B[j], A[i], B[j]

    v, pa, pb = support(1.0, 0.0)
    # simplex entries: (minkowski point, witness in A, witness in B)
    S = [(v, pa, pb)]
    witness = (pa, pb)
    for _ in range(max_iter):
        d = abs(v)
        if d < tol:
            return 0.0, witness[0], witness[1]
        w, wa, wb = support(-v.real / d, -v.imag / d)
        # no further progress toward the origin: v is optimal
        if d - (v.real * w.real + v.imag * w.imag) / d <= tol * max(1.0, d):
            return d, witness[0], witness[1]
        S.append((w, wa, wb))
        if len(S) == 2:
            (p0, a0, b0), (p1, a1, b1) = S
            v, t = _closest_on_segment(p0, p1)
            witness = (a0 + t * (a1 - a0), b0 + t * (b1 - b0))
            if t == 0.0:
                S = [S[0]]
            elif t == 1.0:
                S = [S[1]]
        else:
            (p0, a0, b0), (p1, a1, b1), (p2, a2, b2) = S
            # origin inside the triangle -> sets intersect
            d0, d1, d2 = _cross(p0, p1, 0j), _cross(p1, p2, 0j), _cross(p2, p0, 0j)
            area = _cross(p0, p1, p2)
            if area != 0.0 and (d0 * area >= 0) and (d1 * area >= 0) and (d2 * area >= 0):
                # barycentric coordinates of the origin
                l0 = d1 / area
                l1 = d2 / area
                l2 = d0 / area
                wa = l0 * a0 + l1 * a1 + l2 * a2
                wb = l0 * b0 + l1 * b1 + l2 * b2
                return 0.0, wa, wb
            best = None
            for (pp, qq, keep) in (((p0, a0, b0), (p1, a1, b1), (0, 1)),
                                   ((p0, a0, b0), (p2, a2, b2), (0, 2)),
                                   ((p1, a1, b1), (p2, a2, b2), (1, 2))):
                cp, t = _closest_on_segment(pp[0], qq[0])
                dd = abs(cp)
                if best is None or dd < best[0]:
                    best = (dd, cp, t, pp, qq, keep)
            _, v, t, pp, qq, keep = best
            witness = (pp[1] + t * (qq[1] - pp[1]), pp[2] + t * (qq[2] - pp[2]))
            S = [S[keep[0]], S[keep[1]]]
        if abs(v) < tol:
            return 0.0, witness[0], witness[1]
    return abs(v), witness[0], witness[1]


def point_in_convex_polygon(p: complex, verts, tol: float = 0.0) -> bool:
    """Membership in the convex hull of ``verts`` (CCW), boundary inclusive."""
    verts = np.asarray(verts, dtype=complex).ravel()
    n = verts.size
    if n == 1:
        return abs(p - verts[0]) <= tol
    if n == 2:
        return point_segment_distance(p, verts[0], verts[1]) <= tol
    for i in range(n):
        if _cross(verts[i], verts[(i + 1) % n], p) < -tol:
            return False
    return True


def polygon_point_distance(p: complex, verts) -> float:
    """Distance from a point to a convex polygon (0 if inside)."""
    verts = np.asarray(verts, dtype=complex).ravel()
    if verts.size == 1:
        return abs(p - verts[0])
    if point_in_convex_polygon(p, verts):
        return 0.0
    n = verts.size
    return min(point_segment_distance(p, verts[i], verts[(i + 1) % n]) for i in range(n))
