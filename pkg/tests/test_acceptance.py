"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` or
``python tests/test_acceptance.py``.  The search sweep (n = 4..12, 20
restarts of 5000 iterations) is shared by criteria 3, 5 and 8.
"""

import math
import sys
import time

import numpy as np
import pytest

from polymin.convexitylab import (EXAMPLE_SINGULAR_BASE, SurfaceProbe, convexity_sample, one_sided_gradient,
                                  rigidity_report, singular_candidates)
from polymin.families import FAMILIES, certify_eta, certify_params, optimize_family
from polymin.functionals import (BALL_LIMIT, apex_height_optimum, apex_refine, bipyramid_mesh,
                                 bipyramid_quality)
from polymin.hull3d import convex_hull, diameter, orthogonal_project, quality, surface_area, volume
from polymin.search import SearchParams, search

from conftest import brute_force_area_volume

RESTARTS, ITERATIONS, SEED = 20, 5000, 0
# printed values used by criterion 3
PRINTED = {6: 5.71911, 7: 5.53841, 8: 5.42118, 9: 5.31637, 10: 5.2533, 11: 5.20713, 12: 5.14835}
# the example's printed level 8 is twice the hull area, see the README
EXAMPLE_LEVEL = 8.0 / 2.0


def report(capsys, number, ok, detail, seconds=None):
    tail = f" [{seconds:.1f} s]" if seconds is not None else ""
    with capsys.disabled():
        print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'}: {detail}{tail}")


@pytest.fixture(scope="module")
def sweep():
    out, times = {}, {}
    for n in range(4, 13):
        t0 = time.perf_counter()
        out[n] = search(SearchParams(n=n, restarts=RESTARTS, iterations=ITERATIONS, seed=SEED, threads=1))
        times[n] = time.perf_counter() - t0
    return out, times


def test_criterion_1_closed_form_constants(capsys):
    t0 = time.perf_counter()
    exact = {"tetra": 6 * 3 ** (1 / 6), "bipyramid3": 3 ** (5 / 3),
             "octahedron": 3 ** (7 / 6) * 2 ** (2 / 3),
             "icosahedron": 3 ** (7 / 6) * (70 - 30 * math.sqrt(5)) ** (1 / 3)}
    printed = {"tetra": 7.20562, "bipyramid3": 6.24025, "octahedron": 5.71911, "icosahedron": 5.14835}
    errs = {}
    for name in exact:
        q = quality(convex_hull(FAMILIES[name].points()))
        errs[name] = (abs(q - printed[name]), abs(q - exact[name]))
    ok = all(p <= 1e-5 and e <= 1e-12 for p, e in errs.values())
    dt = time.perf_counter() - t0
    worst = max(e for _, e in errs.values())
    report(capsys, 1, ok and dt < 1, f"max |Q - closed form| = {worst:.2e}", dt)
    assert ok and dt < 1


def test_criterion_2_bipyramid_law(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(3, 11):
        for h in (0.5, 1.0, 2.0):
            q = quality(convex_hull(bipyramid_mesh(k, h)))
            worst = max(worst, abs(q - bipyramid_quality(k)) / bipyramid_quality(k))
    h_err = max(abs(apex_height_optimum(k, h) - math.sqrt(2) * h) for k in (3, 4, 5, 7, 10) for h in (0.5, 1.0, 2.0))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and h_err <= 1e-9 and dt < 5
    report(capsys, 2, ok, f"max rel err {worst:.2e}, max |H - sqrt2 h| {h_err:.2e}", dt)
    assert ok


def test_criterion_3_search_reproduction(sweep, capsys):
    results, times = sweep
    diffs = {n: abs(results[n].quality - PRINTED[n]) for n in PRINTED}
    dt = sum(times[n] for n in PRINTED)
    ok = all(d <= 1e-3 for d in diffs.values()) and dt < 600
    detail = ", ".join(f"n={n}: {results[n].quality:.6f}" for n in PRINTED)
    report(capsys, 3, ok, f"{detail}; max diff {max(diffs.values()):.2e}", dt)
    assert ok


def test_criterion_4_certification(capsys):
    t0 = time.perf_counter()
    certs = [certify_eta(n) for n in (8, 9, 10)]
    params = certify_params("n8", optimize_family("n8"), tol=1e-3)
    dt = time.perf_counter() - t0
    ok = (all(c.sign_lo * c.sign_hi < 0 for c in certs) and set(params) == {"n8_w", "n8_x2", "n8_z2"}
          and dt < 30)
    report(capsys, 4, ok, "eta8, eta9, eta10 and n8 (w, x^2, z^2) certified", dt)
    assert ok


def test_criterion_5_structural(sweep, capsys):
    results, _ = sweep
    t0 = time.perf_counter()
    non_tri = [n for n, r in results.items() if not convex_hull(r.config).all_triangles]
    qs = [results[n].quality for n in range(4, 13)]
    monotone = all(a > b for a, b in zip(qs, qs[1:]))
    above = all(q > BALL_LIMIT for q in qs)
    rng = np.random.default_rng(5)
    violations = 0
    for _ in range(1000):
        pts = rng.standard_normal((int(rng.integers(4, 13)), 3))
        m = convex_hull(pts)
        R, (i, j) = diameter(pts)
        g = orthogonal_project(pts, pts[i] - pts[j])
        violations += volume(m) > g.area * R * (1 + 1e-12)
        violations += surface_area(m) < 0.5 * g.perimeter * R * (1 - 1e-12)
    ok = not non_tri and monotone and above and violations == 0
    report(capsys, 5, ok, f"non-triangular outputs {non_tri}, strictly decreasing {monotone}, "
                          f"all > 4.83598 {above}, projection violations {violations}",
           time.perf_counter() - t0)
    assert ok


def test_criterion_6_singularity(capsys):
    t0 = time.perf_counter()
    probe = SurfaceProbe(EXAMPLE_SINGULAR_BASE)
    reps = singular_candidates(probe, EXAMPLE_LEVEL)
    dist = min(np.linalg.norm(r.point - [0, 2, 0]) for r in reps)
    g1 = one_sided_gradient(probe, [0, 2, 0], [1, 1, 1])
    g2 = one_sided_gradient(probe, [0, 2, 0], [-1, 1, -1])

    def ang(a, b):
        return math.acos(min(1.0, a @ b / np.linalg.norm(a) / np.linalg.norm(b)))

    a1, a2 = ang(g1, np.array([1, 5, 1.0])), ang(g2, np.array([-1, 10, -1.0]))
    dt = time.perf_counter() - t0
    ok = dist <= 1e-6 and a1 <= 1e-4 and a2 <= 1e-4 and dt < 10
    report(capsys, 6, ok, f"|candidate - (0,2,0)| {dist:.1e}, angles {a1:.1e}, {a2:.1e} rad", dt)
    assert ok


def test_criterion_7_convexity(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    bases = [rng.standard_normal((int(k), 3)) for k in (5, 7, 9)] + [EXAMPLE_SINGULAR_BASE]
    total = strict = 0
    for base in bases:
        probe = SurfaceProbe(base)
        rep = convexity_sample(probe, 1.5 * probe.area0, 10_000, rng)
        total += rep.violations
        strict += rep.strict_failures
    dt = time.perf_counter() - t0
    ok = total == 0 and dt < 30
    report(capsys, 7, ok, f"{len(bases)} bases x 10^4 samples, violations {total}, strictness misses {strict}", dt)
    assert ok


def test_criterion_8_rigidity(sweep, capsys):
    results, _ = sweep
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    failures = []
    worst = 0.0
    for n in (8, 4):
        cfg = results[n].config
        for v in range(n):
            rep = rigidity_report(cfg, v, 0.05, 50, rng)
            worst = max(worst, rep.max_return_distance / rep.tolerance)
            if not rep.rigid:
                failures.append((n, v))
    dt = time.perf_counter() - t0
    ok = not failures and dt < 120
    report(capsys, 8, ok, f"failing (n, vertex) {failures}, worst return / tolerance {worst:.2f}", dt)
    assert ok


def test_criterion_9_oracles(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(200):
        pts = rng.standard_normal((int(rng.integers(4, 11)), 3)) * rng.uniform(0.1, 5, 3)
        m = convex_hull(pts)
        a, v = brute_force_area_volume(pts)
        worst = max(worst, abs(surface_area(m) - a) / a, abs(volume(m) - v) / v)
    worst_ref = 0.0
    for _ in range(20):
        m = convex_hull(rng.standard_normal((8, 3)))
        for g in range(len(m.coplanar_groups)):
            ref = apex_refine(m, g, 1e-3)
            mm = convex_hull(ref.config)
            worst_ref = max(worst_ref, abs(volume(mm) - ref.volume) / ref.volume,
                            abs(surface_area(mm) - ref.area) / ref.area)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and worst_ref <= 1e-10 and dt < 60
    report(capsys, 9, ok, f"brute force rel err {worst:.1e}, apex update rel err {worst_ref:.1e}", dt)
    assert ok


def test_search_agrees_with_families(sweep, capsys):
    """Not a numbered criterion: search and family optimisation agree to 1e-5."""
    results, _ = sweep
    diffs = {}
    for n in (6, 7, 8, 9, 10, 12):
        diffs[n] = abs(results[n].quality - optimize_family(FAMILIES_BY_N[n]).quality)
    with capsys.disabled():
        print(f"\nsearch vs family optimum: {', '.join(f'n={n}: {d:.1e}' for n, d in diffs.items())}")
    assert all(d <= 1e-5 for d in diffs.values())


FAMILIES_BY_N = {f.n: f.name for f in FAMILIES.values()}


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
