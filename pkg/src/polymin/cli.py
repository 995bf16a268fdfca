"""Command-line front end: ``polymin <command> ...``.

Every command prints a JSON report to stdout and, with ``--report``, writes
the same document to a file.  Reports carry a run manifest with the full
parameter set, versions and SHA-256 hashes of any files written.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from . import __version__
from .convexitylab import (EXAMPLE_SINGULAR_BASE, SurfaceProbe, adjacent_directions, convexity_sample,
                           one_sided_gradient, rigidity_probe_free, rigidity_report, singular_candidates)
from .families import (BY_N, FAMILIES, Q6_POLY, certify_params, closed_form_quality, get_family,
                       instantiate, mesh_quality, optimize_family)
from .functionals import BALL_LIMIT, CONSTANTS, REFERENCE_VALUE, constants_table
from .hull3d import (Configuration, DegenerateInput, convex_hull, diameter, quality, read_off,
                     surface_area, valency_vector, volume, write_off)
from .polynomial import IntPolynomial, NoSignChange, verify_minpoly
from .search import BudgetExhausted, SearchParams, search

log = logging.getLogger("polymin")

EXIT_OK, EXIT_USAGE, EXIT_DEGENERATE, EXIT_CERT = 0, 2, 3, 4


class UsageError(Exception):
    pass


class CertificationFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# JSON with 17 significant digits
# ---------------------------------------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return "NaN"
        if math.isinf(obj):
            return "Infinity" if obj > 0 else "-Infinity"
        return format(obj, ".17g")
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [json.dumps(k) + ": " + _encode(v, indent, level + 1) for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level) for v in obj) + "]"
        return "[" + pad + ("," + pad).join(_encode(v, indent, level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every real written at 17 significant digits."""
    return _encode(_plain(obj), indent, 0) + "\n"


def strip_wall_time(obj):
    """Copy of a report without wall-time fields, for reproducibility checks."""
    if isinstance(obj, dict):
        return {k: strip_wall_time(v) for k, v in obj.items() if "wall_time" not in k}
    if isinstance(obj, list):
        return [strip_wall_time(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# manifest and result table
# ---------------------------------------------------------------------------


def _versions() -> dict:
    out = {"polymin": __version__, "python": platform.python_version()}
    for pkg in ("numpy", "scipy"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    command: str
    params: dict
    seed: int | None = None
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    wall_time: float = 0.0
    versions: dict = field(default_factory=_versions)
    hashes: dict = field(default_factory=dict)

    def finish(self, t0: float) -> None:
        self.wall_time = time.perf_counter() - t0
        for p in self.inputs + self.outputs:
            if Path(p).is_file():
                self.hashes[str(p)] = sha256_file(p)

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ResultRow:
    n: int
    best_q: float
    reference_value: float
    abs_diff: float
    valency: list
    certified: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ResultTable:
    rows: list

    @property
    def monotone(self) -> bool:
        q = [r.best_q for r in self.rows]
        return all(a > b for a, b in zip(q, q[1:]))

    @property
    def above_ball(self) -> bool:
        return all(r.best_q > BALL_LIMIT for r in self.rows)

    def as_dict(self) -> dict:
        return {"rows": [r.as_dict() for r in self.rows], "monotone": self.monotone,
                "above_ball_limit": self.above_ball}


def certify_quality(n: int, q: float, tol: float) -> bool:
    """Whether ``q`` is within ``tol`` of the known value for n, exactly where possible.

    n = 8, 9, 10 use an exact sign change of the Q**6 polynomial around q**6;
    closed-form cases compare with the constant; n = 11 is numeric-only.
    """
    if n in Q6_POLY:
        try:
            verify_minpoly(IntPolynomial.load(Q6_POLY[n]), q ** 6, 6 * q ** 5 * tol)
            return True
        except NoSignChange:
            return False
    const = next((c for c in CONSTANTS.values() if c.n == n), None)
    if const is None or not const.exact:
        return False
    return abs(q - const.value) <= tol


# ---------------------------------------------------------------------------
# inputs
# ---------------------------------------------------------------------------


def _cube():
    return np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)


BUILTINS = {name: (lambda name=name: FAMILIES[name].points()) for name in FAMILIES}
BUILTINS["cube"] = _cube
BUILTINS["example-singular"] = lambda: EXAMPLE_SINGULAR_BASE.copy()


def load_points(source: str) -> np.ndarray:
    """Points from ``builtin:<name>``, an OFF file or a JSON point list."""
    if source.startswith("builtin:"):
        name = source.split(":", 1)[1]
        if name not in BUILTINS:
            raise UsageError(f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}")
        return BUILTINS[name]()
    path = Path(source)
    if not path.is_file():
        raise UsageError(f"no such file: {source}")
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text())
        if isinstance(data, dict):
            data = data.get("points", data.get("result", {}).get("points"))
        return np.asarray(data, dtype=float)
    try:
        return read_off(path)[0]
    except (ValueError, IndexError) as exc:
        raise UsageError(f"{source}: {exc}") from None


def quality_report(pts) -> dict:
    mesh = convex_hull(pts)
    d, pair = diameter(mesh.vertices)
    return {
        "n_points": int(len(pts)),
        "n_vertices": mesh.n_vertices,
        "volume": volume(mesh),
        "area": surface_area(mesh),
        "quality": quality(mesh),
        "valency": valency_vector(mesh),
        "diameter": d,
        "triangle_faces": mesh.all_triangles,
        "n_faces": len(mesh.coplanar_groups),
        "n_edges": len(mesh.edges),
    }


def _floats(text: str, count: int | None = None) -> list:
    try:
        vals = [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"not a list of numbers: {text!r}") from None
    if count is not None and len(vals) != count:
        raise UsageError(f"expected {count} numbers, got {len(vals)}")
    return vals


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_search(args, man: RunManifest) -> dict:
    params = SearchParams(n=args.n, restarts=args.restarts, iterations=args.iters, seed=args.seed,
                          variance_max=args.variance_max, squeeze=args.squeeze,
                          time_limit=args.time_limit, threads=args.threads)
    man.params.update(params.__dict__)
    man.seed = args.seed
    try:
        res = search(params)
    except BudgetExhausted as exc:
        log.warning("%s", exc)
        if exc.best is None:
            raise
        res = exc.best
    if args.out:
        write_off(args.out, res.config)
        man.outputs.append(args.out)
    out = res.as_dict()
    out["reference_value"] = REFERENCE_VALUE.get(args.n)
    out["triangle_faces"] = convex_hull(res.config).all_triangles
    return out


def cmd_eval(args, man: RunManifest) -> dict:
    if not args.source.startswith("builtin:"):
        man.inputs.append(args.source)
    return quality_report(load_points(args.source))


def cmd_family(args, man: RunManifest) -> dict:
    try:
        fam = get_family(args.name)
    except KeyError as exc:
        raise UsageError(str(exc)) from None
    params = None
    if args.params:
        params = _floats(args.params, len(fam.param_names))
    out = {"family": fam.name, "n": fam.n, "param_names": list(fam.param_names)}
    if args.optimize:
        opt = optimize_family(fam)
        params = opt.params
        out["grad_norm"] = opt.grad_norm
        if fam.polynomials:
            try:
                out["certificates"] = {k: c.as_dict() for k, c in certify_params(fam, opt, args.tol).items()}
            except NoSignChange as exc:
                raise CertificationFailure(str(exc)) from None
    try:
        config = instantiate(fam, params)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    params = fam.reference_params if params is None else tuple(params)
    out["params"] = list(params)
    out["mesh_quality"] = mesh_quality(fam, params)
    out["closed_form_quality"] = closed_form_quality(fam, params) if fam.has_closed_form else None
    out["reference_value"] = REFERENCE_VALUE.get(fam.n)
    out.update({k: v for k, v in quality_report(config.points).items() if k != "quality"})
    out["points"] = config.points
    if args.out:
        write_off(args.out, config)
        man.outputs.append(args.out)
    return out


def cmd_verify(args, man: RunManifest) -> dict:
    fam = BY_N[args.n]
    opt = optimize_family(fam)
    out = {"n": args.n, "family": fam.name, "params": list(opt.params), "quality": opt.quality,
           "tol": args.tol}
    try:
        out["eta"] = verify_minpoly(IntPolynomial.load(Q6_POLY[args.n]), opt.quality ** 6, args.tol).as_dict()
        out["params_certificates"] = {k: c.as_dict() for k, c in certify_params(fam, opt, args.param_tol).items()}
    except NoSignChange as exc:
        raise CertificationFailure(str(exc)) from None
    return out


def cmd_probe(args, man: RunManifest) -> dict:
    pts = load_points(args.base)
    if not args.base.startswith("builtin:"):
        man.inputs.append(args.base)
    man.seed = args.seed
    rng = np.random.default_rng(args.seed)
    out = {"mode": args.mode, "base": args.base}
    if args.mode in ("singular", "convexity"):
        probe = SurfaceProbe(pts)
        if args.level is None:
            raise UsageError(f"--level is required for mode {args.mode}")
        if args.level <= probe.area0:
            raise UsageError(f"--level must exceed the base area {probe.area0!r}")
        out["level"] = args.level
        out["base_area"] = probe.area0
        if args.mode == "singular":
            reps = singular_candidates(probe, args.level)
            out["candidates"] = [r.as_dict() for r in reps]
            out["bound_2e"] = 2 * len(probe.mesh.edges)
        else:
            out["report"] = convexity_sample(probe, args.level, args.trials, rng).as_dict()
    elif args.mode == "gradient":
        if args.point is None:
            raise UsageError("--point is required for mode gradient")
        probe = SurfaceProbe(pts)
        v = np.array(_floats(args.point, 3))
        if probe.inside(v[None])[0]:
            raise UsageError("--point lies inside the base hull")
        if args.direction:
            dirs = {"given": np.array(_floats(args.direction, 3))}
        else:
            dirs = {",".join(map(str, k)): d for k, d in adjacent_directions(probe, v, seed=args.seed).items()}
        grads = {k: one_sided_gradient(probe, v, d) for k, d in dirs.items()}
        out["point"] = v
        out["gradients"] = {k: {"direction": dirs[k], "gradient": g} for k, g in grads.items()}
    else:
        verts = range(len(pts)) if args.vertex is None else [args.vertex]
        if args.fixed:
            fixed = [int(t) for t in _floats(args.fixed, 3)]
            out["report"] = rigidity_probe_free(pts, fixed, args.radius, args.trials, rng).as_dict()
            out["rigid"] = out["report"]["rigid"]
        else:
            reps = [rigidity_report(pts, v, args.radius, args.trials, rng).as_dict() for v in verts]
            out["reports"] = reps
            out["rigid"] = all(r["rigid"] for r in reps)
    return out


def cmd_export(args, man: RunManifest) -> dict:
    pts = load_points(args.source)
    config = Configuration(pts, args.source)
    if args.format == "off":
        write_off(args.out, config)
    else:
        Path(args.out).write_text(dumps({"points": config.points}))
    man.outputs.append(args.out)
    return {"source": args.source, "format": args.format, "path": args.out, "n_points": int(len(pts))}


def cmd_table(args, man: RunManifest) -> dict:
    man.seed = args.seed
    rows = []
    for n in range(args.n_min, args.n_max + 1):
        params = SearchParams(n=n, restarts=args.restarts, iterations=args.iters, seed=args.seed,
                              threads=args.threads)
        res = search(params)
        ref = REFERENCE_VALUE[n]
        rows.append(ResultRow(n, res.quality, ref, abs(res.quality - ref), res.valency,
                              certify_quality(n, res.quality, args.cert_tol)))
        log.info("n=%d Q=%.10f diff=%.2e", n, res.quality, rows[-1].abs_diff)
    return ResultTable(rows).as_dict()


def cmd_constants(args, man: RunManifest) -> dict:
    return {"constants": constants_table()}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polymin", description="Polyhedra minimising A/V^(2/3).")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def report_arg(sp):
        sp.add_argument("--report", help="write the JSON report here as well")

    s = sub.add_parser("search", help="random-restart search for one n")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--restarts", type=int, default=20)
    s.add_argument("--iters", type=int, default=5000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--variance-max", type=float, default=0.5)
    s.add_argument("--squeeze", type=float, default=0.98)
    s.add_argument("--time-limit", type=float)
    s.add_argument("--threads", type=int)
    s.add_argument("--out", help="OFF file for the best configuration")
    report_arg(s)

    s = sub.add_parser("eval", help="quality report for a mesh or point set")
    s.add_argument("source", help="OFF file, JSON point list or builtin:<name>")
    report_arg(s)

    s = sub.add_parser("family", help="evaluate or optimise a parametric family")
    s.add_argument("name", help=f"one of {', '.join(FAMILIES)} or n")
    s.add_argument("--params", help="comma separated parameter values")
    s.add_argument("--optimize", action="store_true")
    s.add_argument("--tol", type=float, default=1e-3, help="parameter certificate tolerance")
    s.add_argument("--out")
    report_arg(s)

    s = sub.add_parser("verify", help="certify eta_n and the family parameters")
    s.add_argument("--n", type=int, choices=(8, 9, 10), required=True)
    s.add_argument("--tol", type=float, default=1e-6, help="tolerance on Q**6")
    s.add_argument("--param-tol", type=float, default=1e-3)
    report_arg(s)

    s = sub.add_parser("probe", help="singularity, convexity, gradient and rigidity probes")
    s.add_argument("--base", required=True)
    s.add_argument("--mode", choices=("singular", "convexity", "gradient", "rigidity"), required=True)
    s.add_argument("--level", type=float, help="area level h")
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--point", help="x,y,z for gradient mode")
    s.add_argument("--direction", help="x,y,z approach direction for gradient mode")
    s.add_argument("--vertex", type=int, help="rigidity: single vertex (default all)")
    s.add_argument("--radius", type=float, default=0.05)
    s.add_argument("--fixed", help="rigidity: i,j,k held fixed, all others free")
    report_arg(s)

    s = sub.add_parser("export", help="write a configuration as OFF or JSON")
    s.add_argument("source")
    s.add_argument("--format", choices=("off", "json"), default="off")
    s.add_argument("--out", required=True)
    report_arg(s)

    s = sub.add_parser("table", help="search n = 4..12 and compare with the known values")
    s.add_argument("--restarts", type=int, default=20)
    s.add_argument("--iters", type=int, default=5000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=int)
    s.add_argument("--n-min", type=int, default=4)
    s.add_argument("--n-max", type=int, default=12)
    s.add_argument("--cert-tol", type=float, default=1e-6)
    report_arg(s)

    s = sub.add_parser("constants", help="table of the named constants")
    report_arg(s)
    return p


COMMANDS = {"search": cmd_search, "eval": cmd_eval, "family": cmd_family, "verify": cmd_verify,
            "probe": cmd_probe, "export": cmd_export, "table": cmd_table, "constants": cmd_constants}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    params = {k: v for k, v in vars(args).items() if k not in ("verbose",)}
    man = RunManifest(args.command, params)
    t0 = time.perf_counter()
    try:
        result = COMMANDS[args.command](args, man)
    except UsageError as exc:
        print(f"polymin {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateInput as exc:
        print(f"polymin {args.command}: degenerate input: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except CertificationFailure as exc:
        print(f"polymin {args.command}: certification failed: {exc}", file=sys.stderr)
        return EXIT_CERT
    except BudgetExhausted as exc:
        print(f"polymin {args.command}: {exc}", file=sys.stderr)
        return 1
    if getattr(args, "report", None):
        man.outputs.append(args.report)
    man.finish(t0)
    if getattr(args, "report", None):
        # the report cannot hash itself
        man.hashes.pop(str(args.report), None)
    text = dumps({"manifest": man.as_dict(), "result": result})
    if getattr(args, "report", None):
        Path(args.report).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
