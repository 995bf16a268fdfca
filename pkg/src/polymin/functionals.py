"""Closed-form qualities, bi-pyramids, in-centers and apex refinement."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .hull3d import Configuration, HullMesh, convex_hull, volume, surface_area, quality

BALL_LIMIT = (36.0 * math.pi) ** (1.0 / 3.0)
MAX_K = 64


class EpsilonTooLarge(ValueError):
    """The refining apex sees faces other than the one being refined."""


@dataclass(frozen=True)
class NamedConstant:
    name: str
    n: int | None
    value: float
    closed_form: str
    exact: bool
    tag: str


def _algebraic(poly_name: str, printed: float) -> float:
    """printed**6 refined to the nearby root of the shipped Q**6 polynomial, then the 6th root."""
    from .polynomial import IntPolynomial, root_near
    return root_near(IntPolynomial.load(poly_name), printed ** 6) ** (1.0 / 6.0)


NAMED_CONSTANTS = (
    NamedConstant("alpha4", 4, 6 * 3 ** (1 / 6), "6*3^(1/6)", True, "regular tetrahedron"),
    NamedConstant("alpha5", 5, 3 ** (5 / 3), "3^(5/3)", True, "regular 3 bi-pyramid"),
    NamedConstant("eta6", 6, 3 ** (7 / 6) * 2 ** (2 / 3), "3^(7/6)*2^(2/3)", True, "regular octahedron"),
    NamedConstant("eta7", 7, 3 ** (7 / 6) * 5 ** (5 / 12) * (math.sqrt(5) - 2) ** (1 / 6),
                  "3^(7/6)*5^(5/12)*(sqrt(5)-2)^(1/6)", True, "regular 5 bi-pyramid"),
    NamedConstant("eta8", 8, _algebraic("n8_q6", 5.42118), "root of degree-12 polynomial in Q^6", False,
                  "n8 family"),
    NamedConstant("eta9", 9, _algebraic("n9_q6", 5.31637), "root of degree-13 polynomial in Q^6", False,
                  "n9 family"),
    NamedConstant("eta10", 10, _algebraic("n10_q6", 5.2533), "root of degree-6 polynomial in Q^6", False,
                  "n10 family"),
    NamedConstant("bound11", 11, 5.207134373504469, "numeric only", False, "n11 family"),
    NamedConstant("eta12", 12, 3 ** (7 / 6) * (70 - 30 * math.sqrt(5)) ** (1 / 3),
                  "3^(7/6)*(70-30*sqrt(5))^(1/3)", True, "regular icosahedron"),
    NamedConstant("ball_limit", None, BALL_LIMIT, "(36*pi)^(1/3)", True, "limit n -> infinity"),
)

CONSTANTS = {c.name: c for c in NAMED_CONSTANTS}
REFERENCE_VALUE = {c.n: c.value for c in NAMED_CONSTANTS if c.n is not None}
# values as printed, for tolerance checks against rounded figures
PRINTED_VALUE = {4: 7.20562, 5: 6.24025, 6: 5.71911, 7: 5.53841, 8: 5.42118,
                 9: 5.31637, 10: 5.2533, 11: 5.20713, 12: 5.14835}


def constants_table() -> list:
    return [
        {"name": c.name, "n": c.n, "value": c.value, "closed_form": c.closed_form,
         "exactness": "closed-form" if c.exact else "numeric-only", "tag": c.tag}
        for c in NAMED_CONSTANTS
    ]


# ---------------------------------------------------------------------------
# bi-pyramids
# ---------------------------------------------------------------------------


def _check_k(k: int) -> None:
    if not 3 <= k <= MAX_K:
        raise ValueError(f"k must be in [3, {MAX_K}], got {k}")


def bipyramid_quality(k: int) -> float:
    _check_k(k)
    x = (k - 2) * math.pi / (2 * k)
    return (3 ** 3.5 * k * math.cos(x) / math.sin(x)) ** (1.0 / 3.0)


def bipyramid_points(k: int, h: float, apex_height: float | None = None) -> np.ndarray:
    """Regular k-gon circumscribed about a circle of radius h, apexes at +-H."""
    _check_k(k)
    if h <= 0:
        raise ValueError("in-radius must be positive")
    H = math.sqrt(2.0) * h if apex_height is None else apex_height
    R = h / math.cos(math.pi / k)
    ang = 2 * math.pi * np.arange(k) / k
    ring = np.column_stack([R * np.cos(ang), R * np.sin(ang), np.zeros(k)])
    return np.vstack([ring, [[0, 0, H], [0, 0, -H]]])


def bipyramid_mesh(k: int, h: float) -> Configuration:
    return Configuration(bipyramid_points(k, h), f"bipyramid{k}")


# ---------------------------------------------------------------------------
# in-center and apex refinement
# ---------------------------------------------------------------------------


def incenter(triangle) -> np.ndarray:
    L, M, N = (np.asarray(p, dtype=float) for p in triangle)
    e1 = np.linalg.norm(N - M)  # opposite L
    e2 = np.linalg.norm(L - N)
    e3 = np.linalg.norm(M - L)
    if np.linalg.norm(np.cross(M - L, N - L)) <= 1e-14 * max(e1, e2, e3) ** 2:
        raise ValueError("degenerate triangle")
    return (e1 * L + e2 * M + e3 * N) / (e1 + e2 + e3)


def _edge_heights(foot: np.ndarray, poly: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Signed in-plane distances from ``foot`` to the edges of a ccw polygon."""
    a = poly
    b = np.roll(poly, -1, axis=0)
    e = b - a
    inward = np.cross(normal, e)
    inward /= np.linalg.norm(inward, axis=1)[:, None]
    return np.einsum("ij,ij->i", foot - a, inward)


def incenter_residual(apex, base) -> float:
    """Spread of the distances from the apex foot to the three base edges."""
    apex = np.asarray(apex, dtype=float)
    tri = np.asarray(base, dtype=float)
    n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
    n /= np.linalg.norm(n)
    height = (apex - tri[0]) @ n
    if abs(height) <= 1e-14 * np.abs(tri).max():
        raise ValueError("apex lies on the base plane")
    foot = apex - height * n
    h = _edge_heights(foot, tri, n)
    return float(max(abs(h[0] - h[1]), abs(h[1] - h[2]), abs(h[0] - h[2])))


class Refinement(NamedTuple):
    config: Configuration
    volume: float
    area: float
    degenerate: bool


def apex_update(mesh: HullMesh, group: int, eps: float):
    """Foot point, outward normal, and the predicted (V, A) after refinement."""
    loop = mesh.group_polygon(group)
    poly = mesh.vertices[loop]
    normal = mesh.face_planes[mesh.coplanar_groups[group][0], :3]
    foot = incenter(poly) if len(poly) == 3 else poly.mean(axis=0)
    r = _edge_heights(foot, poly, normal)
    e = np.linalg.norm(np.roll(poly, -1, axis=0) - poly, axis=1)
    face_area = 0.5 * float(e @ r)
    V = volume(mesh) + eps * face_area / 3.0
    A = surface_area(mesh) - face_area + 0.5 * float(e @ np.sqrt(eps**2 + r**2))
    return foot, normal, V, A


def apex_refine(mesh: HullMesh, group: int, eps: float) -> Refinement:
    """Add a point at height ``eps`` over merged face ``group``.

    Returns the enlarged configuration together with the analytically
    predicted volume and area of its hull.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    foot, normal, V, A = apex_update(mesh, group, eps)
    apex = foot + eps * normal
    members = set(mesh.coplanar_groups[group])
    tol = 1e-12 * mesh.diameter
    for fi, plane in enumerate(mesh.face_planes):
        if fi not in members and plane[:3] @ apex - plane[3] > tol:
            raise EpsilonTooLarge(f"apex at eps={eps} sees face {fi}")
    pts = np.vstack([mesh.vertices, apex])
    return Refinement(Configuration(pts, "refined"), V, A, eps == 0.0)


def apex_height_optimum(k: int, h: float) -> float:
    """Apex height minimising the hull quality over a fixed regular k-gon base.

    Root of a five-point finite-difference derivative of log Q, where Q is
    evaluated from the hull mesh.
    """
    from scipy.optimize import brentq

    def logq(H):
        return math.log(quality(convex_hull(bipyramid_points(k, h, H))))

    d = 1e-3 * h

    def dlogq(H):
        return (-logq(H + 2 * d) + 8 * logq(H + d) - 8 * logq(H - d) + logq(H - 2 * d)) / (12 * d)

    return brentq(dlogq, 0.5 * h, 3.0 * h, xtol=1e-14, rtol=4 * np.finfo(float).eps)
