"""Acceptance criteria, one test each.

Criteria 1 to 10 read the summary written by a real ``shadowlab demo`` run;
11 checks the coverage engines against independent geometric predicates;
12 reruns the demo with a different worker count and compares reports.
Every test records a PASS/FAIL line that the conftest hook prints at the end
of the session.  ``python tests/test_acceptance.py`` prints the same lines.
"""

import json
import sys

import numpy as np
import pytest

from shadowlab import cli
from shadowlab.coverage import CoverageProblem, cover_certify, cover_circle_exact
from shadowlab.demo import load_reports
from shadowlab.directions import Cap, DirectionSpace, region_for
from shadowlab.geometry import AlgebraStructure, Ball
from shadowlab.scene import strip_timings

RESULTS = {}

CRITERIA = {
    1: ("theorem2", "three disks: centre and 200 interior points covered, gap >= 1e-3, < 1 s"),
    2: ("theorem1", "n copies in R2/R3 (disk, ball, ellipsoid, cube) covered with slack > 0"),
    3: ("necessity", "dropping any copy gives a falsifier witness with miss > 1e-4"),
    4: ("theorem3", "ray shadow: 2n copies (n + 1 for the simplex) covered"),
    5: ("remark1", "edge midpoint of the tetrahedron balls: a line misses by >= 1e-3"),
    6: ("remark3", "simplex balls: gap matches closed form, hyperplanes covered at 51 points"),
    7: ("remark4", "10 random sphere families: an escaping ray found and re-verified"),
    8: ("search2", "m=2: two disks certified, one disk falsified"),
    9: ("search3", "m=3: four balls certified, three balls falsified"),
    10: ("theorem4", "complex n=3 from a certified S^4 family; quaternionic n=3 sampled"),
    11: (None, "exact sweep vs certified engine on S^1; margin signs vs geometry per mode"),
    12: (None, "demo reports identical for workers 1 and 2 (timings excluded)"),
}


def record(n, ok, detail=""):
    RESULTS[n] = (bool(ok), detail)


def result_lines():
    out = []
    for n, (_, title) in CRITERIA.items():
        if n in RESULTS:
            ok, detail = RESULTS[n]
            tag = "PASS" if ok else "FAIL"
        else:
            tag, detail = "NOT RUN", ""
        out.append(f"criterion {n:>2} {tag:<7} {title}" + (f"  [{detail}]" if detail else ""))
    return out


# ---------------------------------------------------------------------------
# the demo run shared by criteria 1 to 10 and 12
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def demo_dirs(tmp_path_factory):
    a = tmp_path_factory.mktemp("demo-w1")
    code = cli.main(["demo", "--suite", "paper", "--seed", "0", "--workers", "1", "--out", str(a)])
    return a, code


def load_checks(out):
    summary = json.loads((out / "summary.json").read_text())
    return {c["key"]: c for c in summary["checks"]}


@pytest.mark.parametrize("n", range(1, 11))
def test_demo_criterion(n, demo_dirs):
    out, _ = demo_dirs
    key = CRITERIA[n][0]
    c = load_checks(out)[key]
    failed = [r["construction"] for r in c["rows"] if not r["met"]]
    record(n, c["passed"], "; ".join(failed + c["notes"]))
    assert c["passed"], f"{key}: rows not met: {failed}; notes: {c['notes']}"


def test_demo_exit_code_reflects_failures(demo_dirs):
    out, code = demo_dirs
    checks = load_checks(out)
    assert code == (0 if all(c["passed"] for c in checks.values()) else 1)


# ---------------------------------------------------------------------------
# criterion 11: oracle equivalence
# ---------------------------------------------------------------------------


def random_circle_family(rng):
    k = int(rng.integers(1, 6))
    th = rng.uniform(0, 2 * np.pi, k)
    axes = np.column_stack([np.cos(th), np.sin(th)])
    halves = rng.uniform(0.05, 1.3, k)
    antipodal = bool(rng.random() < 0.5)
    space = DirectionSpace.for_mode("line" if antipodal else "ray", 2)
    return CoverageProblem(space, [Cap(a, h, antipodal) for a, h in zip(axes, halves)])


def circle_contradictions(families=100, seed=0):
    rng = np.random.default_rng(seed)
    bad, kinds = [], []
    for f in range(families):
        prob = random_circle_family(rng)
        exact = cover_circle_exact(prob)
        cert = cover_certify(prob, delta_start=0.2, delta_min=1e-4, seed=f)
        kinds.append(exact.kind)
        if {exact.kind, cert.kind} == {"covered", "uncovered"}:
            bad.append(f)
    return bad, kinds


def line_meets(w, u, r):
    return np.linalg.norm(w - (w @ u) * u) <= r


def ray_meets(w, u, r):
    t = max(0.0, w @ u)
    return np.linalg.norm(w - t * u) <= r


def hyperplane_meets(w, u, r):
    return abs(w @ u) <= r


def field_line_meets(s, w, u, r):
    # the field line is spanned by u times the real basis of the field
    basis = np.column_stack([s.scalar_multiply(u, e) for e in np.eye(s.block)])
    coef, *_ = np.linalg.lstsq(basis, w, rcond=None)
    return np.linalg.norm(w - basis @ coef) <= r


def geometry_sign_mismatches(mode, trials=1000, seed=0):
    rng = np.random.default_rng(seed)
    kinds = ["complex", "quaternion"] if mode == "cline" else ["real"]
    mismatches, skipped = 0, 0
    for t in range(trials):
        kind = kinds[t % len(kinds)]
        s = AlgebraStructure(kind, int(rng.integers(1, 4)) if kind != "real" else int(rng.integers(2, 6)))
        d = s.real_dim
        x = rng.standard_normal(d)
        ball = Ball(rng.standard_normal(d) * 2, float(rng.uniform(0.1, 1.5)))
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        w = ball.center - x
        region = region_for(x, ball, mode, s)
        m = float(np.atleast_1d(region.margin(u[None, :]))[0])
        if mode == "line":
            truth = line_meets(w, u, ball.radius)
        elif mode == "ray":
            truth = ray_meets(w, u, ball.radius)
        elif mode == "hyperplane":
            truth = hyperplane_meets(w, u, ball.radius)
        else:
            truth = field_line_meets(s, w, u, ball.radius)
        if abs(m) < 1e-9:
            skipped += 1
            continue
        if (m > 0) != truth:
            mismatches += 1
    return mismatches, skipped


def test_criterion_11_oracle_equivalence():
    bad, kinds = circle_contradictions()
    per_mode = {mode: geometry_sign_mismatches(mode, seed=i)
                for i, mode in enumerate(("line", "ray", "hyperplane", "cline"))}
    ok = not bad and all(mm == 0 for mm, _ in per_mode.values())
    detail = (f"S1 contradictions={len(bad)} ({kinds.count('covered')} covered / "
              f"{kinds.count('uncovered')} uncovered); "
              + ", ".join(f"{k}: {mm} mismatches" for k, (mm, _) in per_mode.items()))
    record(11, ok, detail)
    # both verdict kinds must actually occur for the comparison to mean something
    assert kinds.count("covered") >= 5 and kinds.count("uncovered") >= 5
    assert not bad, f"families with contradicting verdicts: {bad}"
    for mode, (mm, skipped) in per_mode.items():
        assert mm == 0, f"{mode}: {mm} sign mismatches"
        assert skipped < 10


# ---------------------------------------------------------------------------
# criterion 12: determinism across worker counts
# ---------------------------------------------------------------------------


def test_criterion_12_demo_is_deterministic(demo_dirs, tmp_path):
    a, code_a = demo_dirs
    b = tmp_path / "demo-w2"
    code_b = cli.main(["demo", "--suite", "paper", "--seed", "0", "--workers", "2", "--out", str(b)])
    ra, rb = load_reports(a), load_reports(b)
    same_files = sorted(ra) == sorted(rb)
    diff = [k for k in ra if k in rb and strip_timings(ra[k]) != strip_timings(rb[k])]
    scenes_same = all((a / "scenes" / p.name).read_bytes() == p.read_bytes() for p in (b / "scenes").glob("*.json"))
    ok = same_files and not diff and scenes_same and code_a == code_b
    record(12, ok, f"{len(ra)} reports compared" + (f"; differing: {diff}" if diff else ""))
    assert same_files
    assert not diff, f"reports differ: {diff}"
    assert scenes_same
    assert code_a == code_b


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
