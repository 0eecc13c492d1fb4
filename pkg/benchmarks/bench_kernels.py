#!/usr/bin/env python3
"""Time the margin kernels under both backends.

    python benchmarks/bench_kernels.py [--n 200000] [--runs 5] [--json out.json]

Each kernel is warmed up once per backend (this also triggers numba
compilation) and then timed ``--runs`` times; the best time is reported.
The two backends must agree to 1e-9 or the script exits with status 1.
"""

import argparse
import json
import sys
import time

import numpy as np

from shadowlab import _backend, kernels
from shadowlab.constructions import construct_theorem1
from shadowlab.directions import sample_directions
from shadowlab.geometry import Ellipsoid, HPolytope


def unit_rows(rng, n, d):
    U = rng.standard_normal((n, d))
    return U / np.linalg.norm(U, axis=1, keepdims=True)


def cases(n, rng):
    U3 = unit_rows(rng, n, 3)
    axes = unit_rows(rng, 8, 3)
    half = rng.uniform(0.1, 0.6, 8)
    yield "cap_max (8 caps, S^2)", lambda: kernels.cap_max(U3, axes, half, np.ones(8, bool))[0]
    yield "band_max (8 bands, S^2)", lambda: kernels.band_max(U3, axes, np.sin(half))[0]

    U6 = unit_rows(rng, n, 6)
    A = unit_rows(rng, 6, 6)
    J = np.kron(np.eye(3), np.array([[0.0, -1.0], [1.0, 0.0]]))
    rot = np.stack([A, A @ J.T])  # axis and its image under the complex structure
    yield "fs_max (6 clines, S^5)", lambda: kernels.fs_max(U6, rot, np.cos(half[:6]))[0]

    Z = rng.standard_normal((n, 3)) * 2
    a = np.array([2.0, 1.0, 0.5])
    yield "ellipsoid_sd", lambda: kernels.ellipsoid_sd(Z, a)

    # full margin evaluation through the golden-section line kernels
    m = max(n // 20, 1000)
    for label, body in (("ellipsoid(2,1,1)", Ellipsoid(np.zeros(3), np.array([2.0, 1.0, 1.0]), np.eye(3))),
                        ("cube", HPolytope.cube(3))):
        scene, _ = construct_theorem1(body)
        prob = scene.problem()
        V = sample_directions(prob.space, np.random.default_rng(1), m)
        yield f"line margin {label} ({m} dirs)", lambda prob=prob, V=V: prob.margin(V)


def best_time(fn, runs):
    fn()
    times = []
    for _ in range(runs):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--json")
    args = ap.parse_args()

    backends = ["numpy"] + (["numba"] if _backend.HAVE_NUMBA else [])
    results, bad = [], False
    for name, fn in cases(args.n, np.random.default_rng(0)):
        row = {"kernel": name}
        outs = {}
        for b in backends:
            _backend.set_backend(b)
            row[b] = best_time(fn, args.runs)
            outs[b] = np.asarray(fn())
        if len(outs) == 2:
            err = float(np.max(np.abs(outs["numpy"] - outs["numba"])))
            row["max_abs_diff"] = err
            bad |= err > 1e-9
            row["speedup"] = row["numpy"] / row["numba"]
        results.append(row)
        line = f"{name:<36}" + "".join(f" {b}={row[b] * 1e3:9.2f} ms" for b in backends)
        if "speedup" in row:
            line += f"  x{row['speedup']:.1f}  diff={row['max_abs_diff']:.1e}"
        print(line, flush=True)

    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"n": args.n, "runs": args.runs, "results": results}, fh, indent=2)
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
