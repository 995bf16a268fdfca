"""Parametric candidate shapes for n = 4..12 and their certification.

Each family maps a small parameter vector to a point configuration.  Where
closed forms for area and volume are known they are used for the quality,
and the mesh path is kept as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize

from .functionals import bipyramid_points
from .hull3d import (Configuration, convex_hull, faces_are_hull, faces_quality,
                     global_faces, quality)
from .polynomial import IntPolynomial, RootCertificate, verify_minpoly

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)
PHI = (1 + math.sqrt(5.0)) / 2


@dataclass(frozen=True)
class ShapeFamily:
    name: str
    n: int
    param_names: tuple
    reference_params: tuple
    generator: Callable
    area_volume: Optional[Callable] = None
    quality_cubed: Optional[Callable] = None
    polynomials: dict = field(default_factory=dict)

    def points(self, params=None) -> np.ndarray:
        p = self.reference_params if params is None else tuple(params)
        return np.asarray(self.generator(*p), dtype=float)

    @property
    def has_closed_form(self) -> bool:
        return self.area_volume is not None or self.quality_cubed is not None


# ---------------------------------------------------------------------------
# generators and closed forms
# ---------------------------------------------------------------------------


def _tetra():
    return np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)


def _icosahedron():
    pts = []
    for s1 in (-1, 1):
        for s2 in (-1, 1):
            pts += [(0, s1, s2 * PHI), (s1, s2 * PHI, 0), (s2 * PHI, 0, s1)]
    return np.array(pts, dtype=float)


def _bipyramid(k):
    def gen(H):
        return bipyramid_points(k, 1.0, H)
    return gen


def _bipyramid_av(k):
    r = 2 * k / math.tan((k - 2) * math.pi / (2 * k))

    def av(H):
        return r * math.sqrt(1 + H * H), r * H / 3
    return av


def _n8(w, x, z):
    return [(z, 0, w), (z, 0, -w), (x, 1, 0), (x, -1, 0),
            (-z, w, 0), (-z, -w, 0), (-x, 0, 1), (-x, 0, -1)]


def _n8_av(w, x, z):
    A = 4 * math.sqrt(w**2 + (x - z) ** 2) + 4 * math.sqrt(
        (w - 1) ** 2 * w**2 + w**2 * (x + z) ** 2 + (w * (x - z) + 2 * z) ** 2)
    V = 4 * w * (x + w * x + z) / 3
    return A, V


def _n9(b, h):
    # unit-edge triangular prism of height b, with a 4-pyramid of height h
    # standing on each rectangular side at its centroid
    R = 1 / SQRT3
    r = R / 2
    pts = []
    for j in range(3):
        t = 2 * math.pi * j / 3
        pts += [(R * math.cos(t), R * math.sin(t), b / 2), (R * math.cos(t), R * math.sin(t), -b / 2)]
    for j in range(3):
        t = 2 * math.pi * j / 3 + math.pi / 3
        pts.append(((r + h) * math.cos(t), (r + h) * math.sin(t), 0.0))
    return pts


def _n9_av(b, h):
    A = SQRT3 / 2 + 3 * b * math.sqrt(h * h + 0.25) + 3 * math.sqrt(h * h + b * b / 4)
    V = b * SQRT3 / 4 + b * h
    return A, V


def _n10(h, z):
    s = 1 / SQRT2
    return [(1, 0, -h), (-1, 0, -h), (0, 1, -h), (0, -1, -h),
            (s, s, h), (s, -s, h), (-s, s, h), (-s, -s, h), (0, 0, z), (0, 0, -z)]


def _n10_q3(h, z):
    num = math.sqrt(3 - 2 * SQRT2 + 8 * h * h) + math.sqrt(1 + 2 * h * h - 4 * h * z + 2 * z * z)
    return 36 * num**3 / (h + SQRT2 * h + z) ** 2


def _n11(x1, x2, x3, x4, x5, y, z1, z2, z3):
    return [(x1, 1, 0), (x1, -1, 0), (x2, 0, z1), (x2, 0, -z1), (-x3, 0, z2), (-x3, 0, -z2),
            (-x4, y, z3), (-x4, y, -z3), (-x4, -y, z3), (-x4, -y, -z3), (-x5, 0, 0)]


FAMILIES = {
    "tetra": ShapeFamily("tetra", 4, (), (), _tetra),
    "bipyramid3": ShapeFamily("bipyramid3", 5, ("H",), (SQRT2,), _bipyramid(3), _bipyramid_av(3)),
    "octahedron": ShapeFamily("octahedron", 6, ("H",), (SQRT2,), _bipyramid(4), _bipyramid_av(4)),
    "bipyramid5": ShapeFamily("bipyramid5", 7, ("H",), (SQRT2,), _bipyramid(5), _bipyramid_av(5)),
    "n8": ShapeFamily("n8", 8, ("w", "x", "z"), (2.0428, 1.53525, 0.476614), _n8, _n8_av,
                      polynomials={"w": ("n8_w", 1), "x": ("n8_x2", 2), "z": ("n8_z2", 2)}),
    "n9": ShapeFamily("n9", 9, ("b", "h"), (1.04725, 0.413823), _n9, _n9_av,
                      polynomials={"b": ("n9_b2", 2), "h": ("n9_h2", 2)}),
    "n10": ShapeFamily("n10", 10, ("h", "z"), (0.541397, 1.02619), _n10, None, _n10_q3,
                       polynomials={"h": ("n10_h2", 2), "z": ("n10_z2", 2)}),
    "n11": ShapeFamily("n11", 11, ("x1", "x2", "x3", "x4", "x5", "y", "z1", "z2", "z3"),
                       (1.15135, 0.617047, 0.91681, 0.550702, 1.98113,
                        1.38959, 1.4264, 1.34059, 0.845054), _n11),
    "icosahedron": ShapeFamily("icosahedron", 12, (), (), _icosahedron),
}

BY_N = {f.n: f for f in FAMILIES.values()}
Q6_POLY = {8: "n8_q6", 9: "n9_q6", 10: "n10_q6"}


def get_family(name) -> ShapeFamily:
    if isinstance(name, ShapeFamily):
        return name
    if isinstance(name, int) or str(name).isdigit():
        return BY_N[int(name)]
    try:
        return FAMILIES[name]
    except KeyError:
        raise KeyError(f"unknown family {name!r}; choose from {sorted(FAMILIES)}") from None


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def _check_domain(fam: ShapeFamily, params) -> tuple:
    params = fam.reference_params if params is None else tuple(float(p) for p in params)
    if len(params) != len(fam.param_names):
        raise ValueError(f"{fam.name} takes {len(fam.param_names)} parameters")
    for name, p, ref in zip(fam.param_names, params, fam.reference_params):
        if not (p > 0 and ref / 2 <= p <= 2 * ref):
            raise ValueError(f"{fam.name}: {name}={p} outside (ref/2, 2 ref) around {ref}")
    return params


def instantiate(family, params=None) -> Configuration:
    fam = get_family(family)
    params = _check_domain(fam, params)
    pts = fam.points(params)
    mesh = convex_hull(pts)
    if mesh.n_vertices != fam.n:
        raise ValueError(f"{fam.name} at {params} has {mesh.n_vertices} hull vertices")
    return Configuration(pts, fam.name)


def mesh_quality(family, params=None) -> float:
    fam = get_family(family)
    return quality(convex_hull(fam.points(_check_domain(fam, params))))


def closed_form_quality(fam: ShapeFamily, params) -> float:
    if fam.area_volume is not None:
        A, V = fam.area_volume(*params)
        return A / V ** (2.0 / 3.0)
    if fam.quality_cubed is not None:
        return fam.quality_cubed(*params) ** (1.0 / 3.0)
    raise ValueError(f"{fam.name} has no closed form")


def family_quality(family, params=None) -> float:
    fam = get_family(family)
    params = _check_domain(fam, params)
    if fam.has_closed_form:
        return closed_form_quality(fam, params)
    return quality(convex_hull(fam.points(params)))


def _objective(fam: ShapeFamily):
    """Quality as a function of the parameters, hull faces cached between calls."""
    if fam.has_closed_form:
        return lambda p: closed_form_quality(fam, p)
    state = {"faces": global_faces(convex_hull(fam.points()))}

    def q(p):
        pts = fam.points(p)
        if not faces_are_hull(pts, state["faces"], 0.0):
            state["faces"] = global_faces(convex_hull(pts))
        return faces_quality(pts, state["faces"])
    return q


def fd_gradient(f, x, rel_step=1e-5) -> np.ndarray:
    """Fourth-order central-difference gradient."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(len(x)):
        d = rel_step * max(1.0, abs(x[i]))
        e = np.zeros_like(x)
        e[i] = d
        g[i] = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * d)
    return g


@dataclass(frozen=True)
class FamilyOptimum:
    family: str
    params: tuple
    quality: float
    grad_norm: float


def optimize_family(family, tol: float = 1e-8) -> FamilyOptimum:
    """Local minimum of the family quality started from the printed parameters."""
    fam = get_family(family)
    if not fam.param_names:
        q = family_quality(fam)
        return FamilyOptimum(fam.name, (), q, 0.0)
    if len(fam.param_names) > 9:
        raise ValueError("optimize_family handles at most 9 parameters")
    f = _objective(fam)
    x0 = np.array(fam.reference_params)
    res = minimize(f, x0, jac=lambda x: fd_gradient(f, x), method="BFGS",
                   options={"gtol": tol / 10, "maxiter": 2000})
    x = res.x
    g = fd_gradient(f, x)
    # a few Newton corrections tighten the last digits of the parameters
    for _ in range(3):
        if np.linalg.norm(g) <= tol / 100:
            break
        H = np.array([fd_gradient(f, x + e * 1e-4) - fd_gradient(f, x - e * 1e-4)
                      for e in np.eye(len(x))]) / 2e-4
        H = (H + H.T) / 2
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            break
        if f(x - step) <= f(x):
            x = x - step
            g = fd_gradient(f, x)
        else:
            break
    gn = float(np.linalg.norm(g))
    if gn > tol:
        raise RuntimeError(f"{fam.name}: gradient norm {gn:.3g} above {tol:.3g}")
    return FamilyOptimum(fam.name, tuple(float(v) for v in x), float(f(x)), gn)


def certify_params(family, opt: FamilyOptimum | None = None, tol: float = 1e-3) -> dict:
    """Certify the optimized parameters against the shipped minimal polynomials."""
    fam = get_family(family)
    opt = opt or optimize_family(fam)
    out = {}
    for name, (poly_name, power) in fam.polynomials.items():
        value = opt.params[fam.param_names.index(name)] ** power
        out[poly_name] = verify_minpoly(IntPolynomial.load(poly_name), value, tol)
    return out


def certify_eta(n: int, tol: float = 1e-6) -> RootCertificate:
    """Certify Q**6 = A**6 / V**4 of the optimized family against its polynomial."""
    if n not in Q6_POLY:
        raise ValueError("certify_eta is defined for n in {8, 9, 10}")
    opt = optimize_family(BY_N[n])
    return verify_minpoly(IntPolynomial.load(Q6_POLY[n]), opt.quality ** 6, tol)
