"""Randomized search for minimum-quotient n-hedra.

A restart samples points on the unit sphere until the hull has a valency
vector of small variance, then alternates random local moves of a vertex,
an edge or a face (rejected whenever the valency vector changes) with
occasional contractions along the diameter.  Each restart ends with a
derivative-free polish of all coordinates.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .functionals import BALL_LIMIT
from .hull3d import (Configuration, DegenerateInput, convex_hull, diameter,
                     faces_are_hull, faces_area_volume, faces_quality, global_faces,
                     quality, valency_vector, volume)

log = logging.getLogger(__name__)

SCOPES = ("vertex", "edge", "face")
SCOPE_WEIGHTS = (0.6, 0.2, 0.2)


class BudgetExhausted(RuntimeError):
    """The time budget ran out; ``best`` holds the best result so far (or None)."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class SearchParams:
    n: int
    restarts: int = 20
    iterations: int = 5000
    seed: int = 0
    variance_max: float = 0.5
    squeeze: float = 0.98
    step_initial: float = 0.1
    step_final: float = 1e-4
    polish_tol: float = 1e-12
    retry_cap: int = 200
    squeeze_every: int = 50
    trace_every: int = 250
    time_limit: Optional[float] = None
    threads: Optional[int] = None

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("n must be at least 4")
        if not 0.9 < self.squeeze < 1.0:
            raise ValueError("squeeze factor must lie in (0.9, 1)")
        if not 0 < self.step_final <= self.step_initial:
            raise ValueError("need 0 < step_final <= step_initial")
        if self.restarts < 1 or self.iterations < 0:
            raise ValueError("restarts must be >= 1 and iterations >= 0")


@dataclass
class SearchResult:
    config: Configuration
    quality: float
    valency: list
    trace: list
    seed: int
    restart: int
    wall_time: float
    restarts: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "n": int(self.config.n),
            "quality": self.quality,
            "valency": self.valency,
            "points": self.config.points.tolist(),
            "trace": self.trace,
            "seed": self.seed,
            "best_restart": self.restart,
            "restarts": self.restarts,
            "wall_time": self.wall_time,
        }


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------


def random_configuration(n: int, rng: np.random.Generator) -> Configuration:
    """n points uniform on the unit sphere, resampled until the hull is solid."""
    if n < 4:
        raise ValueError("n must be at least 4")
    while True:
        g = rng.standard_normal((n, 3))
        pts = g / np.linalg.norm(g, axis=1)[:, None]
        try:
            convex_hull(pts)
        except DegenerateInput:
            continue
        return Configuration(pts, f"random{n}")


def valency_variance(v) -> float:
    return float(np.var(np.asarray(v, dtype=float)))


def normalize(points: np.ndarray) -> np.ndarray:
    """Gauge fix: centroid at the origin and unit hull volume."""
    p = points - points.mean(axis=0)
    v = volume(convex_hull(p))
    return p / v ** (1.0 / 3.0)


def _scope_indices(faces: np.ndarray, edges: list, n: int, scope, rng) -> list:
    kind, idx = (scope, None) if isinstance(scope, str) else scope
    if kind == "vertex":
        return [int(rng.integers(n)) if idx is None else int(idx)]
    if kind == "edge":
        e = edges[int(rng.integers(len(edges)))] if idx is None else edges[idx]
        return [int(e[0]), int(e[1])]
    if kind == "face":
        f = faces[int(rng.integers(len(faces)))] if idx is None else faces[idx]
        return [int(i) for i in f]
    raise ValueError(f"unknown scope {kind!r}")


class _Walker:
    """Mutable search state: points, cached hull triangulation, quality."""

    def __init__(self, points: np.ndarray):
        self.pts = np.array(points, dtype=float)
        self.n = len(self.pts)
        mesh = convex_hull(self.pts)
        if mesh.n_vertices != self.n:
            raise ValueError("every point must be a hull vertex")
        self._adopt(mesh)

    def _adopt(self, mesh):
        self.faces = global_faces(mesh)
        self.edges = [tuple(int(mesh.point_ids[i]) for i in e) for e in mesh.edges]
        self.valency = valency_vector(mesh)
        self.q = quality(mesh)

    def config(self, label=None) -> Configuration:
        return Configuration(self.pts.copy(), label)

    def propose(self, new: np.ndarray) -> bool:
        """Accept ``new`` iff Q drops and the valency vector is unchanged."""
        q = faces_quality(new, self.faces)
        if not q < self.q:
            return False
        if faces_are_hull(new, self.faces):
            self.pts, self.q = new, q
            return True
        try:
            mesh = convex_hull(new)
        except DegenerateInput:
            return False
        if mesh.n_vertices != self.n or valency_vector(mesh) != self.valency:
            return False
        qm = quality(mesh)
        if not qm < self.q:
            return False
        self.pts = new
        self._adopt(mesh)
        self.q = qm
        return True

    def local_step(self, scope, rng, step: float) -> bool:
        idx = _scope_indices(self.faces, self.edges, self.n, scope, rng)
        new = self.pts.copy()
        new[idx] += step * rng.standard_normal((len(idx), 3))
        return self.propose(new)

    def squeeze(self, factor: float) -> bool:
        _, (i, j) = diameter(self.pts)
        u = self.pts[i] - self.pts[j]
        u /= np.linalg.norm(u)
        c = self.pts.mean(axis=0)
        rel = self.pts - c
        new = c + rel - (1.0 - factor) * np.outer(rel @ u, u)
        return self.propose(new)

    def renormalize(self):
        p = self.pts - self.pts.mean(axis=0)
        _, vol = faces_area_volume(p, self.faces)
        self.pts = p / vol ** (1.0 / 3.0)


def local_step(config, scope, rng, step: float):
    """One random move of the selected vertex, edge or face.

    ``scope`` is ``"vertex"``, ``"edge"``, ``"face"`` (random element) or a
    ``(kind, index)`` pair; edge and face indices refer to the merged hull.
    Returns the moved configuration, or None when the move is rejected.
    """
    w = _Walker(config.points if isinstance(config, Configuration) else config)
    if w.local_step(scope, rng, step):
        return w.config(getattr(config, "label", None))
    return None


def diameter_squeeze(config, factor: float):
    """Contract along the diameter direction; unchanged unless Q decreases."""
    if not 0 < factor <= 1:
        raise ValueError("factor must lie in (0, 1]")
    pts = config.points if isinstance(config, Configuration) else np.asarray(config, float)
    label = getattr(config, "label", None)
    if factor == 1.0:
        return Configuration(pts, label)
    w = _Walker(pts)
    w.squeeze(factor)
    return Configuration(w.pts, label)


# ---------------------------------------------------------------------------
# polish
# ---------------------------------------------------------------------------


def polish(config, tol: float = 1e-12, max_sweeps: int = 50) -> Configuration:
    """Powell minimisation of Q over all free coordinates.

    Vertex 0 is held fixed during a sweep (translation gauge); between sweeps
    the shape is recentred and scaled to unit volume.  A sweep whose result
    changes the valency vector is discarded and the polish stops.
    """
    pts0 = config.points if isinstance(config, Configuration) else np.asarray(config, float)
    label = getattr(config, "label", None)
    w = _Walker(normalize(pts0))
    n = w.n
    for _ in range(max_sweeps):
        anchor = w.pts[0].copy()
        faces = w.faces

        def f(x):
            p = np.vstack([anchor, x.reshape(n - 1, 3)])
            return faces_quality(p, faces)

        res = minimize(f, w.pts[1:].ravel(), method="Powell",
                       options={"xtol": 1e-10, "ftol": tol, "maxfev": 200 * 3 * n})
        cand = np.vstack([anchor, res.x.reshape(n - 1, 3)])
        before = w.q
        if not (res.fun < before and w.propose(cand)):
            break
        w.renormalize()
        if before - w.q < tol:
            break
    return Configuration(w.pts, label)


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def _restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), restart]))


def min_valency_variance(n: int) -> float:
    """Smallest variance of n vertex degrees summing to 6n - 12."""
    r = (6 * n - 12) % n
    return r * (n - r) / n**2


def _sample_start(params: SearchParams, rng) -> tuple:
    # keep the roundest valency vector seen in retry_cap samples
    floor = min_valency_variance(params.n) + 1e-12
    best = None
    for _ in range(params.retry_cap):
        cfg = random_configuration(params.n, rng)
        var = valency_variance(valency_vector(convex_hull(cfg.points)))
        if best is None or var < best[1]:
            best = (cfg, var)
        if var <= floor:
            break
    if best[1] > params.variance_max:
        log.warning("n=%d: no start below valency variance %.3g (best %.3g)",
                    params.n, params.variance_max, best[1])
    return best


def run_restart(params: SearchParams, restart: int) -> dict:
    rng = _restart_rng(params.seed, restart)
    start, var = _sample_start(params, rng)
    w = _Walker(normalize(start.points))
    trace = [(0, w.q)]
    log_lo, log_hi = math.log(params.step_final), math.log(params.step_initial)
    step = params.step_initial
    iters = params.iterations
    for it in range(1, iters + 1):
        floor = math.exp(log_hi + (log_lo - log_hi) * it / max(iters, 1))
        if it % params.squeeze_every == 0:
            w.squeeze(params.squeeze)
            w.renormalize()
        else:
            scope = SCOPES[int(rng.choice(3, p=SCOPE_WEIGHTS))]
            if w.local_step(scope, rng, step):
                step *= 1.5
            else:
                step *= 0.5
            step = min(max(step, floor), params.step_initial)
        if it % params.trace_every == 0:
            trace.append((it, w.q))
    final = polish(w.config(), params.polish_tol)
    wf = _Walker(final.points)
    if wf.q < w.q:
        w = wf
    trace.append((iters + 1, w.q))
    mesh = convex_hull(w.pts)
    return {
        "restart": restart,
        "points": w.pts,
        "quality": float(quality(mesh)),
        "valency": valency_vector(mesh),
        "start_variance": var,
        "triangles": mesh.all_triangles,
        "n_vertices": mesh.n_vertices,
        "trace": trace,
    }


def _threads(params: SearchParams) -> int:
    if params.threads:
        return params.threads
    env = os.environ.get("POLYMIN_THREADS")
    return max(1, int(env)) if env else 1


def _better(a: dict, b: Optional[dict]) -> bool:
    if b is None:
        return True
    return (a["quality"], a["restart"]) < (b["quality"], b["restart"])


def _assemble(params, best, summaries, t0) -> SearchResult:
    return SearchResult(
        config=Configuration(best["points"], f"search-n{params.n}"),
        quality=best["quality"],
        valency=best["valency"],
        trace=[[int(i), float(q)] for i, q in best["trace"]],
        seed=params.seed,
        restart=best["restart"],
        wall_time=time.perf_counter() - t0,
        restarts=sorted(summaries, key=lambda s: s["restart"]),
    )


def search(params: SearchParams) -> SearchResult:
    """Best of ``params.restarts`` independent restarts."""
    t0 = time.perf_counter()
    best, summaries = None, []

    def consume(res):
        nonlocal best
        summaries.append({k: res[k] for k in ("restart", "quality", "valency", "start_variance")})
        valid = res["n_vertices"] == params.n
        if valid and _better(res, best):
            best = res

    def over_budget():
        return params.time_limit is not None and time.perf_counter() - t0 > params.time_limit

    threads = _threads(params)
    if threads == 1:
        for r in range(params.restarts):
            if over_budget():
                break
            consume(run_restart(params, r))
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for res in pool.map(run_restart, [params] * params.restarts, range(params.restarts)):
                consume(res)
    if best is None or over_budget():
        partial = _assemble(params, best, summaries, t0) if best else None
        raise BudgetExhausted(f"budget exhausted after {len(summaries)} restarts", partial)
    result = _assemble(params, best, summaries, t0)
    assert result.quality > BALL_LIMIT
    log.info("n=%d best Q=%.10f restart %d", params.n, result.quality, result.restart)
    return result
