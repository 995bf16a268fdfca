"""Probes of the area and volume of conv(base + v) as functions of one free point v.

For a fixed base hull, adding ``v`` removes the faces visible from ``v`` and
adds a cone from ``v`` over the horizon edges.  ``SurfaceProbe`` evaluates
both functionals this way for whole batches of points at once.  The level
sets of the area are the strictly convex bodies whose boundary is smooth
except where an edge line of the base pierces it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .hull3d import (DegenerateInput, as_points, convex_hull, diameter, faces_are_hull, faces_quality,
                     global_faces, surface_area, volume)

EXAMPLE_SINGULAR_BASE = np.array([[0, 1, 0], [0, 0, 0], [1, 0, 0], [0, 0, 1]], dtype=float)

# Printed patch formulas for the example base.  Each left-hand side equals
# twice the hull area (3 and 1 are twice the areas of the kept base faces),
# so the printed level 8 corresponds to area 4.  The first domain also
# needs x + y + z >= 1; below that plane v lies inside the base.
EXAMPLE_SINGULAR_PATCHES = (
    (lambda x, y, z: math.sqrt(2 * x * x + (y + z - 1) ** 2) + math.sqrt((x + z - 1) ** 2 + 2 * y * y)
     + math.sqrt((x + y - 1) ** 2 + 2 * z * z) + 3,
     lambda x, y, z: x >= 0 and y >= 0 and z >= 0 and x + y + z >= 1),
    (lambda x, y, z: math.sqrt(x * x + y * y) + math.sqrt((x + z - 1) ** 2 + 2 * y * y)
     + math.sqrt(y * y + z * z) + 1,
     lambda x, y, z: x <= 0 and y >= 0 and z <= 0 and x + y + z >= 1),
    (lambda x, y, z: math.sqrt(2 * x * x + (y + z - 1) ** 2) + math.sqrt(x * x + z * z)
     + math.sqrt((x + z - 1) ** 2 + 2 * y * y) + math.sqrt(y * y + z * z) + 2,
     lambda x, y, z: x >= 0 and y >= 0 and z <= 0 and x + y + z >= 1),
    (lambda x, y, z: math.sqrt(x * x + y * y) + math.sqrt(x * x + z * z)
     + math.sqrt((x + z - 1) ** 2 + 2 * y * y) + math.sqrt((x + y - 1) ** 2 + 2 * z * z) + 2,
     lambda x, y, z: x <= 0 and y >= 0 and z >= 0 and x + y + z >= 1),
)
EXAMPLE_SINGULAR_PATCH_SCALE = 2.0


class SurfaceProbe:
    """Vectorised area and volume of conv(base + v)."""

    def __init__(self, base, level: float | None = None):
        self.base = as_points(base)
        self.mesh = convex_hull(self.base)
        self.level = level
        m = self.mesh
        self.area0 = surface_area(m)
        self.volume0 = volume(m)
        self.diameter = diameter(m.vertices)[0]
        self.normals = m.face_planes[:, :3]
        self.offsets = m.face_planes[:, 3]
        v = m.vertices
        f = m.faces
        self.face_areas = 0.5 * np.linalg.norm(np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]]), axis=1)
        owner = {}
        for fi, tri in enumerate(f):
            for k in range(3):
                owner[(int(tri[k]), int(tri[(k + 1) % 3]))] = fi
        keys = list(owner)
        self.e_from = v[[a for a, _ in keys]]
        self.e_vec = v[[b for _, b in keys]] - self.e_from
        self.e_face = np.array([owner[k] for k in keys])
        self.e_twin = np.array([owner[(b, a)] for a, b in keys])
        if level is not None and level <= self.area0:
            raise ValueError(f"level {level} must exceed the base area {self.area0}")

    def signed_distances(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return pts @ self.normals.T - self.offsets

    def area(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        vis = self.signed_distances(pts) > 0.0
        horizon = vis[:, self.e_face] & ~vis[:, self.e_twin]
        rel = pts[:, None, :] - self.e_from[None, :, :]
        cr = np.cross(self.e_vec[None, :, :], rel)
        tri = 0.5 * np.sqrt((cr * cr).sum(axis=2))
        return self.area0 - vis @ self.face_areas + (horizon * tri).sum(axis=1)

    def volume(self, pts) -> np.ndarray:
        d = self.signed_distances(pts)
        return self.volume0 + (np.where(d > 0.0, d, 0.0) @ self.face_areas) / 3.0

    def cell(self, v) -> tuple:
        """Sign vector of ``v`` against every face plane of the base hull."""
        d = self.signed_distances(v)[0]
        tol = 1e-12 * self.diameter
        return tuple(int(s) for s in np.where(d > tol, 1, np.where(d < -tol, -1, 0)))

    def inside(self, pts) -> np.ndarray:
        return np.all(self.signed_distances(pts) <= 0.0, axis=1)

    def ray_level(self, origin, direction, level, rel_tol=1e-12) -> float | None:
        """Smallest t > 0 with area(origin + t d) = level, by doubling then bisection."""
        o = np.asarray(origin, dtype=float)
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        f = lambda t: float(self.area(o + t * d)[0]) - level
        if f(0.0) > 0:
            return None
        hi = self.diameter * 1e-3
        while f(hi) < 0:
            hi *= 2.0
            if hi > 1e8 * self.diameter:
                return None
        lo = 0.0
        while hi - lo > rel_tol * hi:
            mid = 0.5 * (lo + hi)
            if f(mid) < 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def area_functional(base, v) -> float:
    return float(SurfaceProbe(base).area(v)[0])


def volume_functional(base, v) -> float:
    return float(SurfaceProbe(base).volume(v)[0])


# ---------------------------------------------------------------------------
# gradients and singular points
# ---------------------------------------------------------------------------


def _gradient_at(probe: SurfaceProbe, w: np.ndarray, delta: float) -> np.ndarray:
    e = np.eye(3) * delta
    vals = probe.area(np.vstack([w + e, w - e]))
    return (vals[:3] - vals[3:]) / (2 * delta)


def one_sided_gradient(base, v, direction, eps_rel: float = 1e-6) -> np.ndarray:
    """Gradient of the area at ``v`` as seen from the cell containing v + eps d.

    Central differences are taken at v + eps d and v + 2 eps d with a step
    small enough to stay inside the cell; a Richardson combination removes
    the first-order offset.
    """
    probe = base if isinstance(base, SurfaceProbe) else SurfaceProbe(base)
    v = np.asarray(v, dtype=float)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    eps = eps_rel * probe.diameter
    dist = probe.signed_distances(v)[0]
    through = np.abs(dist) <= 1e-9 * probe.diameter
    margin = np.min(np.abs(probe.normals[through] @ d)) if through.any() else 1.0
    if margin <= 1e-9:
        raise ValueError("approach direction lies in a face plane through v")
    delta = eps * min(margin, 1.0) * 1e-2
    g1 = _gradient_at(probe, v + eps * d, delta)
    g2 = _gradient_at(probe, v + 2 * eps * d, 2 * delta)
    return 2 * g1 - g2


def _angle(a, b) -> float:
    c = a @ b / (np.linalg.norm(a) * np.linalg.norm(b))
    return float(math.acos(max(-1.0, min(1.0, c))))


def adjacent_directions(probe: SurfaceProbe, v, samples: int = 4000, seed: int = 0) -> dict:
    """One approach direction per cell around ``v``, keyed by sign pattern.

    Only face planes through ``v`` are considered; each direction is the
    sampled unit vector with the largest margin to those planes.
    """
    v = np.asarray(v, dtype=float)
    dist = probe.signed_distances(v)[0]
    through = np.flatnonzero(np.abs(dist) <= 1e-9 * probe.diameter)
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((samples, 3))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    if len(through) == 0:
        return {(): dirs[0]}
    dots = dirs @ probe.normals[through].T
    signs = np.where(dots > 0, 1, -1)
    margin = np.abs(dots).min(axis=1)
    best = {}
    for k in range(samples):
        key = tuple(int(s) for s in signs[k])
        if key not in best or margin[k] > margin[best[key]]:
            best[key] = k
    return {key: dirs[k] for key, k in sorted(best.items())}


@dataclass
class SingularPointReport:
    point: np.ndarray
    edge: tuple
    normals: dict = field(default_factory=dict)
    max_angle: float = 0.0

    def as_dict(self) -> dict:
        return {
            "point": self.point.tolist(),
            "edge": list(self.edge),
            "normals": {",".join(map(str, k)): (v / np.linalg.norm(v)).tolist()
                        for k, v in self.normals.items()},
            "max_angle": self.max_angle,
        }


def singular_candidates(base, h: float, with_normals: bool = True) -> list:
    """Points of the level set {area = h} on the prolongations of base edges.

    Each merged base edge contributes two rays, one beyond each endpoint.
    """
    probe = base if isinstance(base, SurfaceProbe) else SurfaceProbe(base)
    if h <= probe.area0:
        raise ValueError("level must exceed the base area")
    verts = probe.mesh.vertices
    out = []
    for i, j in probe.mesh.edges:
        for a, b in ((i, j), (j, i)):
            t = probe.ray_level(verts[b], verts[b] - verts[a], h)
            if t is None:
                continue
            d = verts[b] - verts[a]
            p = verts[b] + t * d / np.linalg.norm(d)
            rep = SingularPointReport(p, (int(probe.mesh.point_ids[a]), int(probe.mesh.point_ids[b])))
            if with_normals:
                for key, dvec in adjacent_directions(probe, p).items():
                    rep.normals[key] = one_sided_gradient(probe, p, dvec)
                angles = [_angle(x, y) for x, y in itertools.combinations(rep.normals.values(), 2)]
                rep.max_angle = max(angles, default=0.0)
            out.append(rep)
    return out


# ---------------------------------------------------------------------------
# sampling tests
# ---------------------------------------------------------------------------


def sample_sublevel(probe: SurfaceProbe, h: float, m: int, rng) -> np.ndarray:
    """m points of {area <= h}: random rays from the base centroid, random depth."""
    c = probe.mesh.vertices.mean(axis=0)
    d = rng.standard_normal((m, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    lo = np.zeros(m)
    hi = np.full(m, probe.diameter)
    while True:
        over = probe.area(c + hi[:, None] * d) > h
        if over.all():
            break
        hi = np.where(over, hi, 2 * hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = probe.area(c + mid[:, None] * d) <= h
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    t = lo * rng.random(m)
    return c + t[:, None] * d


@dataclass
class ConvexityReport:
    trials: int
    violations: int
    strict_failures: int
    equal_pairs: int
    max_excess: float
    scale: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def convexity_sample(base, h: float, trials: int, rng, tol_rel: float = 1e-12) -> ConvexityReport:
    """Midpoint convexity of the area over random pairs in {area <= h}.

    A violation is F(mid) > (F(u) + F(w)) / 2 + tol.  When u != w and at
    least one of them lies outside the base hull the inequality must also be
    strict by at least tol; misses are counted as strict failures.
    """
    probe = base if isinstance(base, SurfaceProbe) else SurfaceProbe(base)
    if h <= probe.area0:
        raise ValueError("level must exceed the base area")
    u = sample_sublevel(probe, h, trials, rng)
    w = sample_sublevel(probe, h, trials, rng)
    fu, fw = probe.area(u), probe.area(w)
    fm = probe.area(0.5 * (u + w))
    avg = 0.5 * (fu + fw)
    scale = probe.area0
    tol = tol_rel * scale
    excess = fm - avg
    outside = ~(probe.inside(u) & probe.inside(w))
    distinct = np.any(u != w, axis=1)
    strict_needed = outside & distinct
    return ConvexityReport(
        trials=int(trials),
        violations=int(np.count_nonzero(excess > tol)),
        strict_failures=int(np.count_nonzero(strict_needed & (excess > -tol))),
        equal_pairs=int(np.count_nonzero(~strict_needed)),
        max_excess=float(excess.max() / scale),
        scale=float(scale),
    )


def containment_sample(config, vertex: int, trials: int, rng, tol_rel: float = 1e-9) -> int:
    """Points with area <= A(config) but volume > V(config), freeing one vertex.

    Returns the number of such points among ``trials`` samples (0 at a minimum).
    """
    pts = as_points(config)
    base = np.delete(pts, vertex, axis=0)
    mesh = convex_hull(pts)
    h, vol = surface_area(mesh), volume(mesh)
    probe = SurfaceProbe(base)
    s = sample_sublevel(probe, h, trials, rng)
    return int(np.count_nonzero(probe.volume(s) > vol * (1 + tol_rel)))


# ---------------------------------------------------------------------------
# rigidity
# ---------------------------------------------------------------------------


@dataclass
class RigidityReport:
    rigid: bool
    vertex: int
    trials: int
    max_return_distance: float
    min_quality_gain: float
    tolerance: float
    mode: str = "single-vertex"

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _vertex_quality(pts: np.ndarray, vertex: int):
    """Q of the hull with ``pts[vertex]`` replaced by x, as a function of x."""
    others = np.delete(pts, vertex, axis=0)
    try:
        probe = SurfaceProbe(others)
    except (DegenerateInput, ValueError):
        probe = None
    if probe is not None:
        def q(x):
            x = np.atleast_2d(x)
            return float(probe.area(x)[0] / probe.volume(x)[0] ** (2.0 / 3.0))
        return q

    # planar or tiny base: reuse the hull triangulation while it stays convex
    state = {"faces": global_faces(convex_hull(pts))}

    def q_fixed(x):
        p = pts.copy()
        p[vertex] = x
        if not faces_are_hull(p, state["faces"], 0.0):
            try:
                state["faces"] = global_faces(convex_hull(p))
            except DegenerateInput:
                return math.inf
        return faces_quality(p, state["faces"])
    return q_fixed


def rigidity_report(config, vertex: int, radius: float, trials: int, rng,
                    tol_rel: float = 1e-6, margin: float = 1e-10) -> RigidityReport:
    """Perturb one vertex inside a ball, re-minimise Q over that vertex alone."""
    pts = as_points(config)
    p = pts[vertex]
    q = _vertex_quality(pts, vertex)
    q0 = q(p)
    diam = diameter(pts)[0]
    worst_dist, worst_gain = 0.0, math.inf
    for _ in range(trials):
        d = rng.standard_normal(3)
        d *= radius * rng.random() ** (1 / 3) / np.linalg.norm(d)
        x0 = p + d
        simplex = np.vstack([x0, x0 + radius * 0.5 * np.eye(3)])
        res = minimize(q, x0, method="Nelder-Mead",
                       options={"initial_simplex": simplex, "xatol": 1e-11 * diam,
                                "fatol": 5e-15, "maxiter": 5000, "maxfev": 5000})
        x = res.x
        worst_dist = max(worst_dist, float(np.linalg.norm(x - p)))
        worst_gain = min(worst_gain, float(q(x) - q0))
    tol = tol_rel * diam
    rigid = worst_dist <= tol and worst_gain >= -margin
    return RigidityReport(rigid, int(vertex), int(trials), worst_dist, worst_gain, tol)


def rigidity_probe(config, vertex: int, radius: float, trials: int, rng) -> bool:
    """True iff every perturbation of ``vertex`` returns to it with no lower Q."""
    return rigidity_report(config, vertex, radius, trials, rng).rigid


def rigidity_probe_free(config, fixed, radius: float, trials: int, rng,
                        tol_rel: float = 1e-5, margin: float = 1e-10) -> RigidityReport:
    """Hold three vertices, perturb all others jointly and re-minimise.

    The three fixed vertices pin translation, rotation and scale, so a
    strict local minimum must pull every free vertex back.
    """
    pts = as_points(config).copy()
    fixed = [int(i) for i in fixed]
    if len(set(fixed)) != 3:
        raise ValueError("exactly three distinct fixed vertices are required")
    free = [i for i in range(len(pts)) if i not in fixed]
    faces = global_faces(convex_hull(pts))
    q0 = faces_quality(pts, faces)

    def q(x):
        p = pts.copy()
        p[free] = x.reshape(-1, 3)
        return faces_quality(p, faces)

    diam = diameter(pts)[0]
    worst_dist, worst_gain = 0.0, math.inf
    for _ in range(trials):
        d = rng.standard_normal((len(free), 3))
        d *= radius * rng.random(len(free))[:, None] ** (1 / 3) / np.linalg.norm(d, axis=1)[:, None]
        x0 = (pts[free] + d).ravel()
        res = minimize(q, x0, method="BFGS", options={"gtol": 1e-11, "maxiter": 5000})
        p = pts.copy()
        p[free] = res.x.reshape(-1, 3)
        if not faces_are_hull(p, faces):
            worst_dist = math.inf
            continue
        worst_dist = max(worst_dist, float(np.abs(res.x - pts[free].ravel()).max()))
        worst_gain = min(worst_gain, float(res.fun - q0))
    tol = tol_rel * diam
    rigid = worst_dist <= tol and worst_gain >= -margin
    return RigidityReport(rigid, -1, int(trials), worst_dist, worst_gain, tol, mode="all-but-three")
