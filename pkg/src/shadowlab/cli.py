"""``shadowlab`` command line.

Exit codes: 0 success / covered / witness found, 1 uncovered or failed
expectation, 2 inconclusive / no witness, 3 input error, 4 construction
failure, 5 resource limit.
"""

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import constructions as K
from .coverage import (SearchBudget, Uncovered, cover_certify, cover_circle_exact, falsify,
                       verify_witness)
from .errors import InputError, ShadowLabError
from .geometry import Ball, Ellipsoid, HPolytope
from .render import render_svg
from .scene import emit_scene, load_scene, make_report, report_text, scene_digest
from .search import ConfigSearchParams, search_config

EXIT_VERDICT = {"covered": 0, "uncovered": 1, "inconclusive": 2}


def resolve_seed(flag):
    if flag is not None:
        return int(flag)
    env = os.environ.get("SHADOWLAB_SEED", "").strip()
    if not env:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"SHADOWLAB_SEED must be an integer, got {env!r}") from None


def _floats(text, name):
    try:
        return np.array([float(t) for t in str(text).split(",")])
    except ValueError:
        raise InputError(f"--{name}: expected comma-separated numbers, got {text!r}") from None


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _body_from_args(a):
    kind = a.body
    d = a.dim
    if kind == "disk":
        return Ball(np.zeros(2), 1.0)
    if kind == "ball":
        return Ball(np.zeros(d), 1.0)
    if kind == "ellipsoid":
        axes = _floats(a.semi_axes, "semi-axes") if a.semi_axes else np.ones(d)
        return Ellipsoid(np.zeros(len(axes)), axes, np.eye(len(axes)))
    if kind == "cube":
        return HPolytope.cube(d)
    if kind == "simplex":
        return HPolytope.regular_simplex(d)
    if kind == "file":
        if not a.body_file:
            raise InputError("--body file needs --body-file")
        sc = load_scene(a.body_file)
        if not sc.bodies:
            raise InputError(f"{a.body_file}: scene has no bodies")
        return sc.bodies[0]
    raise InputError(f"unknown body {kind!r}")


def _summary(scene):
    gap, disjoint = K.min_pairwise_gap(scene.bodies) if len(scene.bodies) > 1 else (math.inf, True)
    g = "n/a" if not math.isfinite(gap) else f"{gap:.6g}"
    return f"{scene.metadata.get('name', 'scene')}: bodies={len(scene.bodies)} min_gap={g} " \
           f"disjoint={'yes' if disjoint else 'no'}"


# ---------------------------------------------------------------------------


def cmd_construct(a):
    seed = resolve_seed(a.seed)
    trace = None
    name = a.name
    if name in ("theorem1", "theorem3"):
        body = _body_from_args(a)
        fn = K.construct_theorem1 if name == "theorem1" else K.construct_theorem3
        scene, trace = fn(body, eta=a.eta, shrink=a.shrink, delta_min=a.delta_min, seed=seed)
    elif name == "theorem2":
        scene = K.construct_theorem2(a.eps, a.eps_prime)
    elif name == "theorem4":
        scene = K.construct_theorem4(a.n, a.field, source=a.source)
    elif name == "remark1":
        scene = K.construct_remark1(a.point, open_balls=a.open)
    elif name == "remark3":
        scene = K.construct_remark3(a.n)
    elif name == "search":
        scene, _ = search_config(ConfigSearchParams(a.dim, a.count, a.mode, starts=a.starts, seed=seed,
                                                    workers=a.workers))
    else:  # argparse restricts the choices
        raise InputError(f"unknown construction {name!r}")
    scene.metadata.setdefault("seed", seed)
    _write(a.output, emit_scene(scene))
    if trace is not None and a.trace:
        _write(a.trace, json.dumps(trace.as_dict(), indent=1, sort_keys=True) + "\n")
    print(_summary(scene), file=sys.stderr if a.output in (None, "-") else sys.stdout)
    return 0


def _verify(scene, delta_min, seed):
    prob = scene.problem()
    if scene.real_dim == 2 and scene.mode in ("line", "ray"):
        return cover_circle_exact(prob), 0.0
    return cover_certify(prob, delta_start=0.2, delta_min=delta_min, seed=seed), delta_min


def _with_point(scene, point):
    if point is None:
        return scene
    x = _floats(point, "point")
    if len(x) != len(scene.point):
        raise InputError(f"--point needs {len(scene.point)} coordinates")
    return scene.with_point(x)


def cmd_verify(a):
    seed = resolve_seed(a.seed)
    scene = _with_point(load_scene(a.scene), a.point)
    t = time.perf_counter()
    verdict, delta = _verify(scene, a.delta_min, seed)
    ms = 1000 * (time.perf_counter() - t)
    rep = make_report(verdict, scene, seed, delta, {"verify": ms})
    _write(a.output, report_text(rep))
    print(f"{verdict.kind}", file=sys.stderr)
    return EXIT_VERDICT[verdict.kind]


def cmd_falsify(a):
    seed = resolve_seed(a.seed)
    scene = _with_point(load_scene(a.scene), a.point)
    t = time.perf_counter()
    prob = scene.problem()
    found = falsify(prob, SearchBudget(sample_count=a.samples, seed=seed))
    ms = 1000 * (time.perf_counter() - t)
    if found is None:
        rep = {"verdict": "no-witness", "seed": seed, "scene_digest": scene_digest(scene),
               "samples": a.samples, "timings_ms": {"falsify": ms}}
        _write(a.output, report_text(rep))
        print("no witness found", file=sys.stderr)
        return 2
    w, miss = found
    # re-verify before reporting
    if not verify_witness(prob, w):
        raise ShadowLabError("witness failed re-verification")
    rep = make_report(Uncovered(w, miss), scene, seed, None, {"falsify": ms})
    _write(a.output, report_text(rep))
    print(f"witness found, miss margin {miss:.6g}", file=sys.stderr)
    return 0


def cmd_escape(a):
    seed = resolve_seed(a.seed)
    scene = load_scene(a.scene)
    x = None if a.point is None else _floats(a.point, "point")
    t = time.perf_counter()
    esc = K.construct_remark4_escape(scene, x, SearchBudget(sample_count=a.samples, seed=seed))
    ms = 1000 * (time.perf_counter() - t)
    rep = {"verdict": "escape", "seed": seed, "scene_digest": scene_digest(scene),
           "witness": [float(v) for v in esc.direction], "method": esc.method,
           "ray_margins": [float(v) for v in esc.margins], "timings_ms": {"escape": ms}}
    _write(a.output, report_text(rep))
    for k, m in enumerate(esc.margins):
        print(f"ball {k}: ray margin {m:.6g}", file=sys.stderr)
    return 0


def cmd_search(a):
    seed = resolve_seed(a.seed)
    scene, slack = search_config(ConfigSearchParams(a.dim, a.count, a.mode, starts=a.starts, seed=seed,
                                                    workers=a.workers))
    _write(a.output, emit_scene(scene))
    print(f"certified, slack {slack:.6g}", file=sys.stderr)
    return 0


def cmd_render(a):
    scene = load_scene(a.scene)
    witness = None
    if a.witness:
        try:
            rep = json.loads(Path(a.witness).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise InputError(f"cannot read witness report {a.witness}: {e}") from None
        witness = rep.get("witness")
    _write(a.output, render_svg(scene, witness, a.projection))
    return 0


def cmd_demo(a):
    from .demo import run_demo

    seed = resolve_seed(a.seed)
    only = set(a.only) if a.only else None
    return run_demo(Path(a.out), seed=seed, workers=a.workers, only=only)


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="shadowlab", description="Shadow constructions and coverage checks.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="build a scene")
    c.add_argument("name", choices=["theorem1", "theorem2", "theorem3", "theorem4", "remark1", "remark3",
                                    "search"])
    c.add_argument("-o", "--output", default="-")
    c.add_argument("--trace", help="trace file for theorem1/theorem3")
    c.add_argument("--body", default="ball", choices=["disk", "ball", "ellipsoid", "cube", "simplex", "file"])
    c.add_argument("--body-file")
    c.add_argument("--dim", type=int, default=3)
    c.add_argument("--semi-axes")
    c.add_argument("--eta", type=float)
    c.add_argument("--shrink", type=float, default=0.5)
    c.add_argument("--delta-min", type=float, default=1e-2)
    c.add_argument("--eps", type=float, default=0.05)
    c.add_argument("--eps-prime", type=float, default=1e-3)
    c.add_argument("--n", type=int, default=3)
    c.add_argument("--field", default="complex", choices=["complex", "quaternion"])
    c.add_argument("--source", default="data", choices=["data", "search"])
    c.add_argument("--point", default="edge-midpoint", choices=["edge-midpoint", "center"])
    c.add_argument("--open", action="store_true")
    c.add_argument("--count", type=int, default=4)
    c.add_argument("--mode", default="line", choices=["line", "ray"])
    c.add_argument("--starts", type=int, default=48)
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--seed", type=int)
    c.set_defaults(func=cmd_construct)

    v = sub.add_parser("verify", help="certify coverage for a scene")
    v.add_argument("scene")
    v.add_argument("-o", "--output", default="-")
    v.add_argument("--delta-min", type=float, default=1e-3)
    v.add_argument("--point")
    v.add_argument("--seed", type=int)
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("falsify", help="search for a query that misses every body")
    f.add_argument("scene")
    f.add_argument("-o", "--output", default="-")
    f.add_argument("--samples", type=int, default=100_000)
    f.add_argument("--point")
    f.add_argument("--seed", type=int)
    f.set_defaults(func=cmd_falsify)

    e = sub.add_parser("escape", help="find a ray from the query point missing a ball family")
    e.add_argument("scene")
    e.add_argument("-o", "--output", default="-")
    e.add_argument("--samples", type=int, default=100_000)
    e.add_argument("--point")
    e.add_argument("--seed", type=int)
    e.set_defaults(func=cmd_escape)

    s = sub.add_parser("search", help="search for a certified centre-shadow family")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--mode", default="line", choices=["line", "ray"])
    s.add_argument("--starts", type=int, default=48)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("-o", "--output", default="-")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_search)

    r = sub.add_parser("render", help="draw a scene as SVG")
    r.add_argument("scene")
    r.add_argument("-o", "--output", default="-")
    r.add_argument("--projection", default="0,1")
    r.add_argument("--witness", help="report file whose witness direction is drawn")
    r.set_defaults(func=cmd_render)

    d = sub.add_parser("demo", help="run the reproduction suite")
    d.add_argument("--suite", default="paper", choices=["paper"])
    d.add_argument("--out", default="demo-out")
    d.add_argument("--seed", type=int)
    d.add_argument("--workers", type=int, default=1)
    d.add_argument("--only", nargs="*")
    d.set_defaults(func=cmd_demo)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        # argparse usage errors are input errors
        return 3 if e.code not in (0, None) else 0
    try:
        return a.func(a)
    except ShadowLabError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
