"""Convex hulls of small 3D point sets and the functionals defined on them.

The hull is built by incremental insertion.  Visibility is decided by an
orientation predicate that is exact: a floating-point evaluation is trusted
only when it clears a forward error bound, otherwise the determinant is
recomputed in rational arithmetic.  Triangles that are coplanar within
``TAU_PLANE * diameter`` are grouped into merged faces, and all combinatorial
quantities (edges, valencies, Euler characteristic) are read off the merged
structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

TAU_PLANE = 1e-9
TAU_PT = 1e-12
TAU_RANK = 1e-10

_EPS = np.finfo(float).eps / 2
_O3D_ERRBOUND = (7.0 + 56.0 * _EPS) * _EPS


class DegenerateInput(ValueError):
    """Raised when a point set does not span 3-space."""


@dataclass(frozen=True)
class Configuration:
    """An ordered set of labelled points in 3-space."""

    points: np.ndarray
    label: Optional[str] = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"expected an (n, 3) array, got shape {pts.shape}")
        if pts.shape[0] < 4:
            raise ValueError("a configuration needs at least 4 points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __len__(self):
        return self.points.shape[0]

    def with_points(self, points) -> "Configuration":
        return Configuration(points, self.label)


def as_points(config) -> np.ndarray:
    if isinstance(config, Configuration):
        return config.points
    return np.asarray(config, dtype=float)


# ---------------------------------------------------------------------------
# predicates
# ---------------------------------------------------------------------------


def orient3d(a, b, c, d) -> int:
    """Sign of dot((b - a) x (c - a), d - a), computed exactly.

    Positive when ``d`` lies on the side that the right-handed normal of
    the triangle ``abc`` points to.
    """
    adx = a[0] - d[0]
    ady = a[1] - d[1]
    adz = a[2] - d[2]
    bdx = b[0] - d[0]
    bdy = b[1] - d[1]
    bdz = b[2] - d[2]
    cdx = c[0] - d[0]
    cdy = c[1] - d[1]
    cdz = c[2] - d[2]
    bdxcdy = bdx * cdy
    cdxbdy = cdx * bdy
    cdxady = cdx * ady
    adxcdy = adx * cdy
    adxbdy = adx * bdy
    bdxady = bdx * ady
    det = (
        adz * (bdxcdy - cdxbdy)
        + bdz * (cdxady - adxcdy)
        + cdz * (adxbdy - bdxady)
    )
    permanent = (
        (abs(bdxcdy) + abs(cdxbdy)) * abs(adz)
        + (abs(cdxady) + abs(adxcdy)) * abs(bdz)
        + (abs(adxbdy) + abs(bdxady)) * abs(cdz)
    )
    if det > _O3D_ERRBOUND * permanent:
        return -1
    if -det > _O3D_ERRBOUND * permanent:
        return 1
    return -_orient3d_exact(a, b, c, d)


def _orient3d_exact(a, b, c, d) -> int:
    fa = [Fraction(float(v)) for v in a]
    fb = [Fraction(float(v)) for v in b]
    fc = [Fraction(float(v)) for v in c]
    fd = [Fraction(float(v)) for v in d]
    adx, ady, adz = fa[0] - fd[0], fa[1] - fd[1], fa[2] - fd[2]
    bdx, bdy, bdz = fb[0] - fd[0], fb[1] - fd[1], fb[2] - fd[2]
    cdx, cdy, cdz = fc[0] - fd[0], fc[1] - fd[1], fc[2] - fd[2]
    det = (
        adz * (bdx * cdy - cdx * bdy)
        + bdz * (cdx * ady - adx * cdy)
        + cdz * (adx * bdy - bdx * ady)
    )
    return (det > 0) - (det < 0)


# ---------------------------------------------------------------------------
# hull mesh
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HullMesh:
    """Triangulated convex hull.

    ``faces`` index into ``vertices`` and are counterclockwise seen from
    outside.  ``point_ids[i]`` is the index of vertex ``i`` in the input
    configuration.  ``edges`` are the edges of the merged (coplanar-grouped)
    polytope, ``coplanar_groups`` lists triangle indices per merged face.
    """

    vertices: np.ndarray
    faces: np.ndarray
    edges: list
    face_planes: np.ndarray
    coplanar_groups: list
    point_ids: np.ndarray
    _neighbors: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def diameter(self) -> float:
        return diameter(self.vertices)[0]

    def triangle_edges(self) -> list:
        seen = set()
        for f in self.faces:
            for k in range(3):
                i, j = int(f[k]), int(f[(k + 1) % 3])
                seen.add((min(i, j), max(i, j)))
        return sorted(seen)

    def group_of(self) -> np.ndarray:
        out = np.empty(len(self.faces), dtype=int)
        for g, members in enumerate(self.coplanar_groups):
            out[list(members)] = g
        return out

    def group_polygon(self, g: int) -> list:
        """Boundary of merged face ``g`` as a cyclic list of vertex indices."""
        members = set(self.coplanar_groups[g])
        directed = {}
        for fi in members:
            f = self.faces[fi]
            for k in range(3):
                directed[(int(f[k]), int(f[(k + 1) % 3]))] = fi
        boundary = {a: b for (a, b) in directed if (b, a) not in directed}
        start = next(iter(boundary))
        loop = [start]
        nxt = boundary[start]
        while nxt != start:
            loop.append(nxt)
            nxt = boundary[nxt]
        return loop

    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges) + len(self.coplanar_groups)

    @property
    def all_triangles(self) -> bool:
        return all(len(g) == 1 for g in self.coplanar_groups)


def _initial_simplex(pts: np.ndarray, diam: float):
    i0 = int(np.argmin(pts[:, 0]))
    d0 = np.linalg.norm(pts - pts[i0], axis=1)
    i1 = int(np.argmax(d0))
    u = pts[i1] - pts[i0]
    u = u / np.linalg.norm(u)
    rel = pts - pts[i0]
    perp = rel - np.outer(rel @ u, u)
    i2 = int(np.argmax(np.linalg.norm(perp, axis=1)))
    nrm = np.cross(pts[i1] - pts[i0], pts[i2] - pts[i0])
    vols = np.abs(rel @ nrm)
    i3 = int(np.argmax(vols))
    if vols[i3] / 6.0 <= TAU_RANK * diam**3 or len({i0, i1, i2, i3}) < 4:
        raise DegenerateInput("points do not span 3-space")
    return i0, i1, i2, i3


def _dedupe(pts: np.ndarray, diam: float) -> list:
    keep = []
    tol = TAU_PT * diam
    for i in range(len(pts)):
        if keep:
            d = np.linalg.norm(pts[keep] - pts[i], axis=1)
            if np.min(d) <= tol:
                continue
        keep.append(i)
    return keep


def _incremental(pts: list, order: list, simplex) -> list:
    """Return counterclockwise triangles (global indices) of the hull."""
    faces = {}
    edge_face = {}
    next_id = 0

    def add(i, j, k):
        nonlocal next_id
        faces[next_id] = (i, j, k)
        edge_face[(i, j)] = next_id
        edge_face[(j, k)] = next_id
        edge_face[(k, i)] = next_id
        next_id += 1

    a, b, c, d = simplex
    if orient3d(pts[a], pts[b], pts[c], pts[d]) > 0:
        b, c = c, b
    # d is now below abc
    add(a, b, c)
    add(a, d, b)
    add(b, d, c)
    add(c, d, a)

    for p in order:
        q = pts[p]
        visible = [fid for fid, (i, j, k) in faces.items()
                   if orient3d(pts[i], pts[j], pts[k], q) > 0]
        if not visible:
            continue
        vis = set(visible)
        horizon = []
        for fid in visible:
            i, j, k = faces[fid]
            for e in ((i, j), (j, k), (k, i)):
                if edge_face[(e[1], e[0])] not in vis:
                    horizon.append(e)
        for fid in visible:
            i, j, k = faces.pop(fid)
            for e in ((i, j), (j, k), (k, i)):
                if edge_face.get(e) == fid:
                    del edge_face[e]
        for i, j in horizon:
            add(i, j, p)
    return list(faces.values())


def _build_mesh(pts: np.ndarray, tris: list, diam: float) -> HullMesh:
    used = sorted({v for t in tris for v in t})
    local = {g: i for i, g in enumerate(used)}
    verts = pts[used]
    faces = np.array([[local[v] for v in t] for t in tris], dtype=int)

    p0, p1, p2 = verts[faces[:, 0]], verts[faces[:, 1]], verts[faces[:, 2]]
    nrm = np.cross(p1 - p0, p2 - p0)
    nrm = nrm / np.linalg.norm(nrm, axis=1)[:, None]
    offs = np.einsum("ij,ij->i", nrm, p0)
    planes = np.column_stack([nrm, offs])

    edge_face = {}
    for fi, f in enumerate(faces):
        for k in range(3):
            edge_face[(int(f[k]), int(f[(k + 1) % 3]))] = fi

    parent = list(range(len(faces)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tol = TAU_PLANE * diam
    neighbors = {}
    for (i, j), fi in edge_face.items():
        gj = edge_face[(j, i)]
        neighbors[(i, j)] = (fi, gj)
        if fi < gj:
            opp_g = [v for v in faces[gj] if v != i and v != j][0]
            opp_f = [v for v in faces[fi] if v != i and v != j][0]
            dg = abs(planes[fi, :3] @ verts[opp_g] - planes[fi, 3])
            df = abs(planes[gj, :3] @ verts[opp_f] - planes[gj, 3])
            if dg <= tol and df <= tol:
                parent[find(fi)] = find(gj)

    roots = {}
    for fi in range(len(faces)):
        roots.setdefault(find(fi), []).append(fi)
    groups = [tuple(m) for m in sorted(roots.values())]
    gid = np.empty(len(faces), dtype=int)
    for g, members in enumerate(groups):
        gid[list(members)] = g

    edges = sorted({(min(i, j), max(i, j)) for (i, j), fi in edge_face.items()
                    if gid[fi] != gid[edge_face[(j, i)]]})
    return HullMesh(
        vertices=verts,
        faces=faces,
        edges=edges,
        face_planes=planes,
        coplanar_groups=groups,
        point_ids=np.array(used, dtype=int),
        _neighbors=neighbors,
    )


def _non_extreme(mesh: HullMesh) -> list:
    """Vertices touching fewer than three merged faces (on an edge or face)."""
    gid = mesh.group_of()
    touching = [set() for _ in range(mesh.n_vertices)]
    for fi, f in enumerate(mesh.faces):
        for v in f:
            touching[v].add(gid[fi])
    return [v for v, s in enumerate(touching) if len(s) < 3]


def convex_hull(config) -> HullMesh:
    """Convex hull of a configuration as a triangulated, grouped mesh."""
    pts = as_points(config)
    if len(pts) < 4:
        raise DegenerateInput("need at least 4 points")
    diam = diameter(pts)[0]
    if diam == 0.0:
        raise DegenerateInput("all points coincide")
    keep = _dedupe(pts, diam)
    while True:
        sub = pts[keep]
        simplex = _initial_simplex(sub, diam)
        rows = [tuple(map(float, r)) for r in sub]
        order = [i for i in range(len(sub)) if i not in simplex]
        tris = _incremental(rows, order, simplex)
        mesh = _build_mesh(sub, tris, diam)
        bad = _non_extreme(mesh)
        if not bad:
            break
        drop = {int(mesh.point_ids[v]) for v in bad}
        keep = [k for i, k in enumerate(keep) if i not in drop]
    ids = np.array(keep, dtype=int)[mesh.point_ids]
    return HullMesh(
        vertices=mesh.vertices,
        faces=mesh.faces,
        edges=mesh.edges,
        face_planes=mesh.face_planes,
        coplanar_groups=mesh.coplanar_groups,
        point_ids=ids,
        _neighbors=mesh._neighbors,
    )


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------


def volume(mesh: HullMesh) -> float:
    c = mesh.vertices.mean(axis=0)
    v = mesh.vertices - c
    a, b, d = v[mesh.faces[:, 0]], v[mesh.faces[:, 1]], v[mesh.faces[:, 2]]
    return float(np.einsum("ij,ij->i", a, np.cross(b, d)).sum() / 6.0)


def triangle_areas(mesh: HullMesh) -> np.ndarray:
    v = mesh.vertices
    a, b, c = v[mesh.faces[:, 0]], v[mesh.faces[:, 1]], v[mesh.faces[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def surface_area(mesh: HullMesh) -> float:
    return float(triangle_areas(mesh).sum())


def quality(mesh: HullMesh) -> float:
    """Isoperimetric quotient A / V**(2/3); similitude invariant."""
    return surface_area(mesh) / volume(mesh) ** (2.0 / 3.0)


def group_area(mesh: HullMesh, g: int) -> float:
    """Area of merged face ``g`` from its boundary polygon."""
    loop = mesh.group_polygon(g)
    poly = mesh.vertices[loop]
    n = mesh.face_planes[mesh.coplanar_groups[g][0], :3]
    s = np.cross(poly, np.roll(poly, -1, axis=0)).sum(axis=0)
    return float(abs(s @ n) / 2.0)


def valency_vector(mesh: HullMesh) -> list:
    deg = [0] * mesh.n_vertices
    for i, j in mesh.edges:
        deg[i] += 1
        deg[j] += 1
    return sorted(deg)


def diameter(config):
    """Largest pairwise distance and the lexicographically first pair achieving it."""
    pts = as_points(config)
    if len(pts) < 2:
        raise ValueError("diameter needs at least two points")
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    iu = np.triu_indices(len(pts), 1)
    vals = d2[iu]
    k = int(np.argmax(vals))  # first occurrence is the lexicographic minimum
    return float(math.sqrt(vals[k])), (int(iu[0][k]), int(iu[1][k]))


# ---------------------------------------------------------------------------
# planar projection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Polygon2D:
    """Counterclockwise convex polygon in a projection plane."""

    vertices: np.ndarray

    @property
    def area(self) -> float:
        v = self.vertices
        if len(v) < 3:
            return 0.0
        x, y = v[:, 0], v[:, 1]
        return float(0.5 * (x @ np.roll(y, -1) - y @ np.roll(x, -1)))

    @property
    def perimeter(self) -> float:
        v = self.vertices
        if len(v) < 2:
            return 0.0
        return float(np.linalg.norm(v - np.roll(v, -1, axis=0), axis=1).sum())


def convex_hull_2d(points) -> np.ndarray:
    """Andrew's monotone chain; returns counterclockwise hull vertices."""
    pts = sorted(map(tuple, np.asarray(points, dtype=float)))
    pts = list(dict.fromkeys(pts))
    if len(pts) <= 2:
        return np.array(pts)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def plane_basis(direction) -> tuple:
    d = np.asarray(direction, dtype=float)
    nd = np.linalg.norm(d)
    if nd == 0.0:
        raise ValueError("projection direction must be nonzero")
    d = d / nd
    helper = np.eye(3)[int(np.argmin(np.abs(d)))]
    e1 = np.cross(d, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    return e1, e2


def orthogonal_project(config, direction) -> Polygon2D:
    """Orthogonal projection along ``direction`` onto a plane, as a convex polygon."""
    e1, e2 = plane_basis(direction)
    pts = as_points(config)
    flat = np.column_stack([pts @ e1, pts @ e2])
    return Polygon2D(convex_hull_2d(flat))


# ---------------------------------------------------------------------------
# OFF files
# ---------------------------------------------------------------------------


def write_off(path, mesh_or_config) -> None:
    if isinstance(mesh_or_config, HullMesh):
        verts, faces = mesh_or_config.vertices, mesh_or_config.faces
    else:
        mesh = convex_hull(mesh_or_config)
        verts, faces = mesh.vertices, mesh.faces
    lines = ["OFF", f"{len(verts)} {len(faces)} 0"]
    lines += [" ".join(format(float(c), ".17g") for c in v) for v in verts]
    lines += ["3 " + " ".join(str(int(i)) for i in f) for f in faces]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_off(path):
    """Read an ASCII OFF file; returns (vertices, triangles).

    Polygonal faces are fan-triangulated.
    """
    with open(path) as fh:
        tokens = []
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise ValueError(f"{path}: missing OFF header")
    nv, nf = int(tokens[1]), int(tokens[2])
    pos = 4
    verts = np.array(tokens[pos:pos + 3 * nv], dtype=float).reshape(nv, 3)
    pos += 3 * nv
    tris = []
    for _ in range(nf):
        k = int(tokens[pos])
        idx = [int(t) for t in tokens[pos + 1:pos + 1 + k]]
        pos += 1 + k
        for m in range(1, k - 1):
            tris.append((idx[0], idx[m], idx[m + 1]))
    return verts, np.array(tris, dtype=int).reshape(-1, 3)


# ---------------------------------------------------------------------------
# fixed-triangulation fast path
# ---------------------------------------------------------------------------


def _cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    # np.cross is several times slower on short (k, 3) arrays
    out = np.empty_like(u)
    out[:, 0] = u[:, 1] * v[:, 2] - u[:, 2] * v[:, 1]
    out[:, 1] = u[:, 2] * v[:, 0] - u[:, 0] * v[:, 2]
    out[:, 2] = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    return out


def faces_area_volume(points: np.ndarray, faces: np.ndarray):
    """Area and volume of the closed triangulated surface ``faces`` over ``points``."""
    v = points - points.mean(axis=0)
    a, b, d = v[faces[:, 0]], v[faces[:, 1]], v[faces[:, 2]]
    cr = _cross(b - a, d - a)
    area = 0.5 * np.sqrt((cr * cr).sum(axis=1)).sum()
    # sum of a . (b x d) equals sum of a . ((b - a) x (d - a))
    vol = (a * cr).sum() / 6.0
    return float(area), float(vol)


def faces_quality(points: np.ndarray, faces: np.ndarray) -> float:
    area, vol = faces_area_volume(points, faces)
    if vol <= 0.0:
        return math.inf
    return area / vol ** (2.0 / 3.0)


def faces_are_hull(points: np.ndarray, faces: np.ndarray, rel_tol: float = TAU_PLANE) -> bool:
    """True when every point lies strictly inside every face plane.

    For a closed, consistently oriented triangulation that uses every point
    this means the triangulation is exactly the boundary of the convex hull,
    with no coplanar neighbours at tolerance ``rel_tol * extent``.
    """
    a = points[faces[:, 0]]
    nrm = _cross(points[faces[:, 1]] - a, points[faces[:, 2]] - a)
    nl = np.sqrt((nrm * nrm).sum(axis=1))
    if np.any(nl == 0.0):
        return False
    ext = float(np.ptp(points, axis=0).max())
    s = (points @ nrm.T - (a * nrm).sum(axis=1)) / nl  # (n, F) signed distances
    on_face = np.zeros_like(s, dtype=bool)
    cols = np.arange(len(faces))
    for k in range(3):
        on_face[faces[:, k], cols] = True
    return bool(np.all(s[~on_face] < -rel_tol * ext))


def face_valency(faces: np.ndarray, n: int) -> list:
    edges = set()
    for f in faces:
        for k in range(3):
            i, j = int(f[k]), int(f[(k + 1) % 3])
            edges.add((min(i, j), max(i, j)))
    deg = [0] * n
    for i, j in edges:
        deg[i] += 1
        deg[j] += 1
    return sorted(deg)


def global_faces(mesh: HullMesh) -> np.ndarray:
    """Mesh triangles re-indexed into the original configuration."""
    return mesh.point_ids[mesh.faces]
