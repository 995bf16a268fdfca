"""Independent oracles shared by the test modules."""

import itertools

import numpy as np
import pytest


def facet_planes(pts, rel_tol=1e-9):
    """Supporting planes found by trying every point triple.

    Returns a list of (unit normal, offset) with every point on the inner side.
    """
    pts = np.asarray(pts, dtype=float)
    scale = np.abs(pts - pts.mean(axis=0)).max()
    tol = rel_tol * scale
    planes = []
    for i, j, k in itertools.combinations(range(len(pts)), 3):
        n = np.cross(pts[j] - pts[i], pts[k] - pts[i])
        norm = np.linalg.norm(n)
        if norm <= 1e-12 * scale * scale:
            continue
        n = n / norm
        d = n @ pts[i]
        s = pts @ n - d
        if np.all(s <= tol):
            cand = (n, d)
        elif np.all(s >= -tol):
            cand = (-n, -d)
        else:
            continue
        if not any(np.allclose(cand[0], p[0], atol=1e-9) and abs(cand[1] - p[1]) <= tol for p in planes):
            planes.append(cand)
    return planes


def _polygon_area(points, normal):
    c = points.mean(axis=0)
    u = points[0] - c
    if np.linalg.norm(u) == 0:
        u = points[1] - c
    u = u / np.linalg.norm(u)
    v = np.cross(normal, u)
    xy = np.column_stack([(points - c) @ u, (points - c) @ v])
    order = np.argsort(np.arctan2(xy[:, 1], xy[:, 0]))
    x, y = xy[order, 0], xy[order, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def brute_force_area_volume(pts, rel_tol=1e-9):
    """Surface area and volume from facet enumeration over all triples."""
    pts = np.asarray(pts, dtype=float)
    scale = np.abs(pts - pts.mean(axis=0)).max()
    c = pts.mean(axis=0)
    area = vol = 0.0
    for n, d in facet_planes(pts, rel_tol):
        on = pts[np.abs(pts @ n - d) <= rel_tol * scale]
        a = _polygon_area(on, n)
        area += a
        vol += a * (d - n @ c) / 3.0
    return area, vol


def monte_carlo_volume(pts, samples, rng):
    """Hit-or-miss volume estimate and its standard error."""
    pts = np.asarray(pts, dtype=float)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    box = float(np.prod(hi - lo))
    planes = facet_planes(pts)
    N = np.array([p[0] for p in planes])
    D = np.array([p[1] for p in planes])
    hits = 0
    chunk = 200_000
    for start in range(0, samples, chunk):
        m = min(chunk, samples - start)
        x = lo + (hi - lo) * rng.random((m, 3))
        hits += int(np.count_nonzero(np.all(x @ N.T <= D, axis=1)))
    p = hits / samples
    return box * p, box * np.sqrt(p * (1 - p) / samples)


def random_rotation(rng):
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


UNIT_TETRA = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
CUBE = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
REGULAR_TETRA = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
OCTAHEDRON = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float)
