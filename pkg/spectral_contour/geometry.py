"""
Planar geometry helpers on complex coordinates.

Smallest enclosing circle (Welzl, iterative form), even-odd point-in-polygon,
distances to segments and a polyline self-intersection scan.
"""

from typing import Optional, Sequence, Tuple

import numpy as np

Circle = Tuple[complex, float]


def _contains(circle: Optional[Circle], p: complex) -> bool:
    return circle is not None and abs(p - circle[0]) <= circle[1] * (1 + 1e-14) + 1e-300


def _diameter_circle(a: complex, b: complex) -> Circle:
    center = 0.5 * (a + b)
    return center, max(abs(center - a), abs(center - b))


def _cross(p: complex, q: complex, r: complex) -> float:
    """Twice the signed area of the triangle p, q, r."""
    return ((q - p).conjugate() * (r - p)).imag


def _circumcircle(a: complex, b: complex, c: complex) -> Optional[Circle]:
    # shift to the bounding-box centre for conditioning
    o = complex(
        (min(a.real, b.real, c.real) + max(a.real, b.real, c.real)) / 2,
        (min(a.imag, b.imag, c.imag) + max(a.imag, b.imag, c.imag)) / 2,
    )
    a, b, c = a - o, b - o, c - o
    d = 2.0 * (a.real * (b.imag - c.imag) + b.real * (c.imag - a.imag) + c.real * (a.imag - b.imag))
    if d == 0.0:
        return None
    na, nb, nc = abs(a) ** 2, abs(b) ** 2, abs(c) ** 2
    x = (na * (b.imag - c.imag) + nb * (c.imag - a.imag) + nc * (a.imag - b.imag)) / d
    y = (na * (c.real - b.real) + nb * (a.real - c.real) + nc * (b.real - a.real)) / d
    center = complex(x, y)
    return center + o, max(abs(center - a), abs(center - b), abs(center - c))


def _circle_two(points: Sequence[complex], p: complex, q: complex) -> Circle:
    circle = _diameter_circle(p, q)
    left: Optional[Circle] = None
    right: Optional[Circle] = None
    for r in points:
        if _contains(circle, r):
            continue
        cross = _cross(p, q, r)
        candidate = _circumcircle(p, q, r)
        if candidate is None:
            continue
        if cross > 0.0 and (left is None or _cross(p, q, candidate[0]) > _cross(p, q, left[0])):
            left = candidate
        elif cross < 0.0 and (right is None or _cross(p, q, candidate[0]) < _cross(p, q, right[0])):
            right = candidate
    if left is None and right is None:
        return circle
    if left is None:
        return right
    if right is None:
        return left
    return left if left[1] <= right[1] else right


def _circle_one(points: Sequence[complex], p: complex) -> Circle:
    circle: Circle = (p, 0.0)
    for i, q in enumerate(points):
        if not _contains(circle, q):
            if circle[1] == 0.0:
                circle = _diameter_circle(p, q)
            else:
                circle = _circle_two(points[:i + 1], p, q)
    return circle


def min_enclosing_circle(points, seed: Optional[int] = 0) -> Circle:
    """
    Smallest circle containing all points (Chebyshev centre and radius).

    Args:
        points: Iterable of complex points (non-empty)
        seed: Shuffle seed; the circle itself does not depend on it

    Returns:
        (center, radius)
    """
    pts = [complex(z) for z in np.asarray(points, dtype=complex).ravel()]
    if not pts:
        raise ValueError("min_enclosing_circle needs at least one point")
    order = np.random.default_rng(seed).permutation(len(pts))
    shuffled = [pts[k] for k in order]
    circle: Optional[Circle] = None
    for i, p in enumerate(shuffled):
        if circle is None or not _contains(circle, p):
            circle = _circle_one(shuffled[:i + 1], p)
    return circle


def points_in_polygon(z, polygon, chunk: int = 2048) -> np.ndarray:
    """Even-odd rule membership of points ``z`` in the closed polygon ``polygon``."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    a = np.asarray(polygon, dtype=complex)
    b = np.roll(a, -1)
    ax, ay, bx, by = a.real[None, :], a.imag[None, :], b.real[None, :], b.imag[None, :]
    flat = z.ravel()
    inside = np.empty(flat.size, dtype=bool)
    for start in range(0, flat.size, chunk):
        block = flat[start:start + chunk]
        x, y = block.real[:, None], block.imag[:, None]
        straddles = (ay > y) != (by > y)
        with np.errstate(divide='ignore', invalid='ignore'):
            x_cross = ax + (y - ay) * (bx - ax) / (by - ay)
        hits = straddles & (x < x_cross)
        inside[start:start + chunk] = (np.count_nonzero(hits, axis=1) % 2) == 1
    return inside.reshape(z.shape)


def distance_to_segments(z, starts, ends) -> np.ndarray:
    """Minimum distance from each point in ``z`` to the segments [starts_k, ends_k]."""
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    flat = z.ravel()[:, None]
    a = np.asarray(starts, dtype=complex)[None, :]
    d = np.asarray(ends, dtype=complex)[None, :] - a
    length2 = np.abs(d) ** 2
    with np.errstate(divide='ignore', invalid='ignore'):
        t = np.where(length2 > 0, np.real((flat - a) * np.conj(d)) / length2, 0.0)
    t = np.clip(t, 0.0, 1.0)
    dist = np.abs(flat - (a + t * d)).min(axis=1)
    return dist.reshape(shape)


def polyline_self_intersects(points) -> bool:
    """True when two non-adjacent edges of the closed polyline intersect."""
    p = np.asarray(points, dtype=complex)
    m = p.size
    q = np.roll(p, -1)
    cols = np.arange(m)

    def orient(u, v, w):
        return np.sign(((v - u).conj() * (w - u)).imag)

    block = 256
    for start in range(0, m, block):
        rows = np.arange(start, min(start + block, m))[:, None]
        pairs = cols[None, :] >= rows + 2
        pairs &= ~((rows == 0) & (cols[None, :] == m - 1))
        if not pairs.any():
            continue
        a, b = p[rows], q[rows]
        c, d = p[None, :], q[None, :]
        o1, o2 = orient(a, b, c), orient(a, b, d)
        o3, o4 = orient(c, d, a), orient(c, d, b)
        if np.any(pairs & (o1 * o2 < 0) & (o3 * o4 < 0)):
            return True
    return False
