"""Small planar-geometry helpers used throughout the package.

Points are numpy arrays of shape (2,) (or stacks of shape (n, 2)); all
lengths are Euclidean.
"""
from __future__ import annotations

import numpy as np

from .errors import GeometryError


def dist(p, q) -> float:
    return float(np.hypot(*(np.asarray(q, float) - np.asarray(p, float))))


def signed_area(points: np.ndarray) -> float:
    """Shoelace signed area of a polygon given as an (n, 2) array."""
    p = np.asarray(points, float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def rot90(v: np.ndarray) -> np.ndarray:
    """Counterclockwise rotation by pi/2."""
    return np.array([-v[1], v[0]], float)


def cross2(u, v) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def seg_point_distance(a, b, p) -> float:
    """Distance from point p to segment ab."""
    a = np.asarray(a, float)
    d = np.asarray(b, float) - a
    w = np.asarray(p, float) - a
    denom = float(d @ d)
    if denom == 0.0:
        return float(np.hypot(*w))
    t = min(1.0, max(0.0, float(w @ d) / denom))
    return float(np.hypot(*(w - t * d)))


def seg_points_distance(a, b, pts: np.ndarray) -> np.ndarray:
    """Distances from each row of pts to segment ab (vectorized)."""
    a = np.asarray(a, float)
    d = np.asarray(b, float) - a
    w = np.asarray(pts, float) - a
    denom = float(d @ d)
    if denom == 0.0:
        return np.hypot(w[:, 0], w[:, 1])
    t = np.clip((w @ d) / denom, 0.0, 1.0)
    r = w - t[:, None] * d
    return np.hypot(r[:, 0], r[:, 1])


def seg_seg_distance(a, b, c, d) -> float:
    """Distance between segments ab and cd (0 if they intersect)."""
    if segments_intersect(a, b, c, d):
        return 0.0
    return min(
        seg_point_distance(a, b, c),
        seg_point_distance(a, b, d),
        seg_point_distance(c, d, a),
        seg_point_distance(c, d, b),
    )


def segments_intersect(a, b, c, d, include_endpoints: bool = True) -> bool:
    a, b, c, d = (np.asarray(p, float) for p in (a, b, c, d))
    d1 = cross2(b - a, c - a)
    d2 = cross2(b - a, d - a)
    d3 = cross2(d - c, a - c)
    d4 = cross2(d - c, b - c)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != d2 and d3 != d4:
        return True
    if not include_endpoints:
        return False

    def on_seg(p, q, r):
        return (
            cross2(q - p, r - p) == 0.0
            and min(p[0], q[0]) <= r[0] <= max(p[0], q[0])
            and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])
        )

    return on_seg(a, b, c) or on_seg(a, b, d) or on_seg(c, d, a) or on_seg(c, d, b)


def incircle(a, b, c):
    """Incenter and inradius of triangle abc.

    Raises GeometryError for (near-)collinear input.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    c = np.asarray(c, float)
    la = dist(b, c)
    lb = dist(c, a)
    lc = dist(a, b)
    s = la + lb + lc
    area2 = abs(cross2(b - a, c - a))
    if s == 0.0 or area2 <= 1e-14 * max(la, lb, lc) ** 2:
        raise GeometryError("collinear or degenerate triangle has no incircle")
    center = (la * a + lb * b + lc * c) / s
    radius = area2 / s
    return center, radius


def circumcircle(a, b, c):
    """Center and radius of the circle through three points."""
    ax, ay = a
    bx, by = b
    cx, cy = c
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0.0:
        raise GeometryError("collinear points have no circumcircle")
    ux = ((ax**2 + ay**2) * (by - cy) + (bx**2 + by**2) * (cy - ay) + (cx**2 + cy**2) * (ay - by)) / d
    uy = ((ax**2 + ay**2) * (cx - bx) + (bx**2 + by**2) * (ax - cx) + (cx**2 + cy**2) * (bx - ax)) / d
    center = np.array([ux, uy])
    return center, dist(center, a)


def hull_diameter(points: np.ndarray) -> float:
    """Diameter of a finite point set (max pairwise distance)."""
    pts = np.asarray(points, float)
    if len(pts) < 2:
        return 0.0
    if len(pts) > 40:
        from scipy.spatial import ConvexHull, QhullError  # type: ignore

        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            pass
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(d2.max()))


# ---------------------------------------------------------------------------
# quadrature over orthodiagonal quads


def split_quad(quad: np.ndarray):
    """Split a simple CCW quad into two triangles along an interior diagonal."""
    q = np.asarray(quad, float)
    v1, w1, v2, w2 = q
    if signed_area(np.array([v1, w1, v2])) > 0 and signed_area(np.array([v1, v2, w2])) > 0:
        return np.array([v1, w1, v2]), np.array([v1, v2, w2])
    if signed_area(np.array([w1, v2, w2])) > 0 and signed_area(np.array([w1, w2, v1])) > 0:
        return np.array([w1, v2, w2]), np.array([w1, w2, v1])
    raise GeometryError("quad is not a simple CCW polygon")


def gauss_triangle(n: int):
    """Tensor Gauss-Legendre rule on the reference triangle via the Duffy map.

    Returns (points (k, 2) in barycentric-free reference coords, weights (k,)).
    Exact for polynomials of degree ~2n-2 on the triangle.
    """
    x, wx = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * wx
    U, V = np.meshgrid(u, u, indexing="ij")
    W = np.outer(wu, wu) * (1.0 - U)
    px = U
    py = V * (1.0 - U)
    return np.column_stack([px.ravel(), py.ravel()]), W.ravel()


def integrate_over_triangle(f, tri: np.ndarray, n: int) -> float:
    """Integrate f(pts) over triangle tri using an n x n Duffy-Gauss rule."""
    a, b, c = np.asarray(tri, float)
    ref, w = gauss_triangle(n)
    pts = a + ref[:, 0:1] * (b - a) + ref[:, 1:2] * (c - a)
    jac = abs(cross2(b - a, c - a))
    return float(jac * (w @ f(pts)))


def integrate_over_quad(f, quad: np.ndarray, tol: float = 1e-10, n0: int = 4) -> float:
    """Integrate f over an orthodiagonal quad, doubling the rule until stable."""
    t1, t2 = split_quad(quad)
    prev = None
    n = n0
    while True:
        val = integrate_over_triangle(f, t1, n) + integrate_over_triangle(f, t2, n)
        if prev is not None and abs(val - prev) <= tol * (1.0 + abs(val)):
            return val
        if n > 64:
            return val
        prev = val
        n *= 2
