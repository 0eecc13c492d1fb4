"""Ball and convex-body families that shadow a point, built step by step.

Every builder returns a :class:`~shadowlab.scene.Scene`; the translation /
homothety builders also return a :class:`ConstructionTrace` with the points
and ratios they used.
"""

import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .coverage import CoverageProblem, SearchBudget, cover_certify, cover_circle_exact, falsify
from .directions import DirectionSpace, ball_ray_region
from .errors import ConstructionError, EscapeNotFoundError, InputError
from .geometry import (Ball, Body, HPolytope, Transform, body_distance,
                       circumscribe_polytope, inscribed_ball, ray_margin, resolve, simplex_vertices)
from .scene import Scene, parse_scene

MAX_RETRIES = 20


@dataclass
class ConstructionTrace:
    normals: list = field(default_factory=list)
    facet_points: list = field(default_factory=list)
    boundary_points: list = field(default_factory=list)
    offset_points: list = field(default_factory=list)
    r1: float = math.nan
    r2: float = math.nan
    coefficients: list = field(default_factory=list)
    iterations: int = 0
    eta: float = math.nan
    recentered: bool = False
    log: list = field(default_factory=list)

    def as_dict(self):
        return {
            "normals": [list(map(float, v)) for v in self.normals],
            "facet_points": [list(map(float, v)) for v in self.facet_points],
            "boundary_points": [list(map(float, v)) for v in self.boundary_points],
            "offset_points": [list(map(float, v)) for v in self.offset_points],
            "r1": float(self.r1), "r2": float(self.r2),
            "coefficients": [float(k) for k in self.coefficients],
            "iterations": int(self.iterations), "eta": float(self.eta),
            "recentered": bool(self.recentered), "log": list(self.log),
        }


# ---------------------------------------------------------------------------
# verification helpers
# ---------------------------------------------------------------------------


def min_pairwise_gap(bodies):
    """Smallest pairwise distance and whether every pair is strictly disjoint.

    The contact tolerance is relative to the smaller body of each pair, so
    deeply shrunk homothetic copies are judged at their own scale.
    """
    best, ok = math.inf, True
    scale = [resolve(b).bounding_ball()[1] for b in bodies]
    for i in range(len(bodies)):
        for j in range(i + 1, len(bodies)):
            tol = 1e-9 * min(1.0, scale[i], scale[j])
            d, status = body_distance(bodies[i], bodies[j], tol=tol)
            if status != "disjoint":
                ok = False
                d = 0.0 if status == "touching" else -1.0
            best = min(best, d)
    return best, ok


def verify_scene(scene, delta_min=1e-2, seed=0):
    """Exact sweep in the plane for line/ray modes, certified cells otherwise."""
    prob = scene.problem()
    if scene.real_dim == 2 and scene.mode in ("line", "ray"):
        return cover_circle_exact(prob)
    return cover_certify(prob, delta_start=0.2, delta_min=delta_min, seed=seed)


# ---------------------------------------------------------------------------
# translation + homothety families (convex bodies)
# ---------------------------------------------------------------------------


def _exit_distance(shape, O, u, hi):
    """Largest t in [0, hi] with O + t u in the body (bisection on sd)."""
    lo = 0.0
    if float(shape.sd(O + hi * u)[0]) <= 0:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(shape.sd(O + mid * u)[0]) <= 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return lo


def _farthest(shape, O):
    """Radius about O of the smallest ball centred at O containing the body."""
    if isinstance(shape, Ball):
        return float(np.linalg.norm(shape.center - O)) + shape.radius
    if isinstance(shape, HPolytope):
        return float(np.linalg.norm(shape.vertices - O, axis=1).max())
    # ellipsoid: maximise |c + R diag(a) w - O| over the unit sphere of w
    R, a = shape.orientation, shape.semi_axes
    q = R.T @ (shape.center - O)
    rng = np.random.default_rng(0)
    W = rng.standard_normal((4000, len(a)))
    W = np.vstack([W, np.eye(len(a)), -np.eye(len(a))])
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    vals = np.linalg.norm(q + W * a, axis=1)
    w = W[int(np.argmax(vals))]
    # fixed-point ascent: the maximiser satisfies a*(q + a w) parallel to w
    for _ in range(500):
        g = a * (q + a * w)
        n = np.linalg.norm(g)
        if n == 0:
            break
        w_new = g / n
        if np.linalg.norm(w_new - w) < 1e-15:
            break
        w = w_new
    return float(max(vals.max(), np.linalg.norm(q + a * w)))


def _pick_facets(normals, all_facets):
    if all_facets:
        return list(range(len(normals)))
    d = normals.shape[1]
    chosen = []
    for i, n in enumerate(normals):
        trial = normals[chosen + [i]]
        if np.linalg.matrix_rank(trial, tol=1e-9) == len(chosen) + 1:
            chosen.append(i)
        if len(chosen) == d:
            break
    return chosen


def _translate_family(body, O, eta, shrink, all_facets, mode, name, delta_min, seed):
    base = body if isinstance(body, Body) else Body(body)
    shape = resolve(base)
    d = shape.dim
    O = np.zeros(d) if O is None else np.asarray(O, dtype=float)
    if O.shape != (d,):
        raise InputError(f"O must have {d} coordinates")
    trace = ConstructionTrace()
    if float(shape.sd(O)[0]) >= 0:
        c = inscribed_ball(shape).center
        shape = shape.similarity(1.0, O - c)
        trace.recentered = True
        trace.log.append("body translated so that its inscribed-ball centre is O")
    if eta is None:
        eta = 0.05 * shape.bounding_ball()[1]
    if not eta > 0 or not 0 < shrink < 1:
        raise InputError("need eta > 0 and 0 < shrink < 1")
    P = circumscribe_polytope(shape)
    picks = _pick_facets(P.normals, all_facets)
    N = P.normals[picks]
    h = P.offsets[picks] - N @ O
    X = O + h[:, None] * N
    Y = np.array([O + _exit_distance(shape, O, n, hi) * n for n, hi in zip(N, h)])
    trace.normals = list(N)
    trace.facet_points = list(X)
    trace.boundary_points = list(Y)
    for it in range(1, MAX_RETRIES + 1):
        Z = Y + eta * N
        shifted = [shape.similarity(1.0, O - z) for z in Z]
        r1 = max(_farthest(s, O) for s in shifted)
        r2 = min(float(s.sd(O)[0]) for s in shifted)
        k = r2 / r1
        coeffs = [k ** i for i in range(1, len(Z))]
        bodies = [Body(shape, Transform(O - z, O, k ** i)) for i, z in enumerate(Z)]
        trace.offset_points = list(Z)
        trace.r1, trace.r2, trace.coefficients = r1, r2, coeffs
        trace.iterations, trace.eta = it, eta
        scene = Scene("real", d, O, bodies, mode, {
            "name": name, "seed": int(seed),
            "params": {"eta": float(eta), "shrink": float(shrink), "body_count": len(bodies),
                       "facets": int(len(P.normals))}})
        gap, disjoint = min_pairwise_gap(bodies)
        verdict = verify_scene(scene, delta_min, seed) if disjoint else None
        trace.log.append(f"eta={eta:.6g}: min gap {gap:.3g}, "
                         f"verdict {verdict.kind if verdict else 'skipped (overlap)'}")
        if disjoint and verdict.kind == "covered":
            scene.metadata["params"]["min_gap"] = float(gap)
            scene.metadata["params"]["slack"] = float(min(verdict.slack, math.pi))
            return scene, trace
        eta *= shrink
    raise ConstructionError(f"{name}: no disjoint covering family after {MAX_RETRIES} retries",
                            trace=trace, candidate=scene)


def construct_theorem1(body, O=None, eta=None, shrink=0.5, delta_min=1e-2, seed=0):
    """n translated-and-scaled copies of ``body`` whose union shadows O for lines.

    Rays from O along n linearly independent facet normals of a circumscribed
    polytope meet the boundary at Y_i; the copies are translated by Z_i -> O
    (Z_i = Y_i + eta n_i) and copy i is scaled about O by (r2/r1)^(i-1).
    """
    return _translate_family(body, O, eta, shrink, False, "line", "theorem1", delta_min, seed)


def construct_theorem3(body, O=None, eta=None, shrink=0.5, delta_min=1e-2, seed=0):
    """Ray version: one copy per facet of the circumscribed polytope."""
    return _translate_family(body, O, eta, shrink, True, "ray", "theorem3", delta_min, seed)


# ---------------------------------------------------------------------------
# balls on spheres
# ---------------------------------------------------------------------------

HALF_SIDE = math.sqrt(3.0) / 2.0


def _balls(centers, radii, open_=False):
    return [Body(Ball(c, r), open=open_) for c, r in zip(centers, radii)]


def theorem2_disks(eps, eps_prime):
    """Centres (on the unit circle) and radii of the three-disk family."""
    c = HALF_SIDE
    r = np.array([c + eps, c - eps / 2, c - eps / 4])
    if eps < 0 or eps_prime < 0 or np.any(r <= 0):
        raise InputError("need eps >= 0, eps' >= 0 and positive radii")
    d12, d23, d13 = r[0] + r[1], r[1] + r[2], r[0] + r[2]
    A = np.zeros(2)
    B = np.array([d12, 0.0])
    x = (d13 ** 2 - d23 ** 2 + d12 ** 2) / (2 * d12)
    y2 = d13 ** 2 - x ** 2
    if y2 <= 0:
        raise InputError("eps too large: tangency triangle degenerates")
    C = np.array([x, math.sqrt(y2)])
    P = np.array([A, B, C])
    # circumcentre
    ax, ay = A
    bx, by = B
    cx, cy = C
    den = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    ux = ((ax ** 2 + ay ** 2) * (by - cy) + (bx ** 2 + by ** 2) * (cy - ay) + (cx ** 2 + cy ** 2) * (ay - by)) / den
    uy = ((ax ** 2 + ay ** 2) * (cx - bx) + (bx ** 2 + by ** 2) * (ax - cx) + (cx ** 2 + cy ** 2) * (bx - ax)) / den
    cc = np.array([ux, uy])
    R = float(np.linalg.norm(A - cc))
    if np.any(r >= R):
        raise InputError("eps too large: some radius reaches the circumradius")
    centers = (P - cc) / R
    radii = r / R - eps_prime
    if np.any(radii <= 0):
        raise InputError("eps' too large")
    return centers, radii


def construct_theorem2(eps=0.05, eps_prime=1e-3, point=None):
    """Three disks with centres on the unit circle, pairwise tangent before the
    final eps' shrink; query point defaults to the circle's centre."""
    centers, radii = theorem2_disks(eps, eps_prime)
    x = np.zeros(2) if point is None else np.asarray(point, float)
    return Scene("real", 2, x, _balls(centers, radii), "line", {
        "name": "theorem2", "params": {"eps": float(eps), "eps_prime": float(eps_prime)},
        "sphere": {"center": [0.0, 0.0], "radius": 1.0}})


def tetrahedron():
    """Regular tetrahedron inscribed in the unit sphere."""
    return simplex_vertices(3)


def construct_remark1(point="edge-midpoint", open_balls=False):
    """Balls of radius half the edge at the vertices of a regular tetrahedron
    inscribed in the unit sphere (so they touch pairwise)."""
    V = tetrahedron()
    r = 0.5 * float(np.linalg.norm(V[0] - V[1]))
    if point == "edge-midpoint":
        x = 0.5 * (V[0] + V[1])
    elif point == "center":
        x = np.zeros(3)
    else:
        x = np.asarray(point, float)
    return Scene("real", 3, x, _balls(V, [r] * 4, open_balls), "line", {
        "name": "remark1", "params": {"point": point if isinstance(point, str) else "custom",
                                      "open": bool(open_balls)},
        "sphere": {"center": [0.0, 0.0, 0.0], "radius": 1.0}})


def remark3_radius(n):
    return 0.5 * (1.0 + 1.0 / n)


def construct_remark3(n=3, point=None):
    """n+1 balls at the vertices of a regular simplex inscribed in the unit
    sphere, radius half the vertex-to-facet height; hyperplane queries."""
    if n < 2:
        raise InputError("remark3 needs n >= 2")
    V = simplex_vertices(n)
    x = np.zeros(n) if point is None else np.asarray(point, float)
    return Scene("real", n, x, _balls(V, [remark3_radius(n)] * (n + 1)), "hyperplane", {
        "name": "remark3", "params": {"n": int(n)},
        "sphere": {"center": [0.0] * n, "radius": 1.0}})


def hull_contains_sphere(scene, count=1000, seed=0):
    """Support-function check: max_i (u . c_i + r_i) >= 1 on random directions."""
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((count, scene.real_dim))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    C = np.array([resolve(b).center for b in scene.bodies])
    r = np.array([resolve(b).radius for b in scene.bodies])
    return float(np.min(np.max(U @ C.T + r, axis=1)))


@dataclass
class Escape:
    direction: np.ndarray
    margins: np.ndarray
    method: str
    pair: tuple = None


def construct_remark4_escape(scene, x=None, budget=SearchBudget()):
    """A ray from an interior point that misses every ball of a sphere family.

    Recipe: take the two balls with the closest centres, a point p of the
    segment between the centres outside both balls, and the ray from x
    through p.  If that ray still hits a ball, search the ray-direction
    sphere with the falsifier instead.
    """
    x = scene.point if x is None else np.asarray(x, float)
    balls = [resolve(b) for b in scene.bodies]
    if not all(isinstance(b, Ball) for b in balls):
        raise InputError("escape needs a family of balls")
    d = scene.real_dim
    if any(float(b.sd(x)[0]) <= 0 for b in balls):
        raise InputError("query point lies in a ball: every ray from it meets the family")

    def margins_for(u):
        return np.array([ray_margin(x, u, b) for b in balls])

    if len(balls) == 0:
        u = np.zeros(d)
        u[0] = 1.0
        return Escape(u, np.zeros(0), "trivial")
    if len(balls) == 1:
        w = x - balls[0].center
        u = w / np.linalg.norm(w) if np.linalg.norm(w) > 0 else np.eye(d)[0]
        m = margins_for(u)
        if np.all(m > 0):
            return Escape(u, m, "opposite")
    else:
        C = np.array([b.center for b in balls])
        D = np.linalg.norm(C[:, None] - C[None], axis=2)
        np.fill_diagonal(D, np.inf)
        i, j = np.unravel_index(int(np.argmin(D)), D.shape)
        i, j = int(min(i, j)), int(max(i, j))
        dist = D[i, j]
        gap = dist - balls[i].radius - balls[j].radius
        if gap > 0:
            e = (C[j] - C[i]) / dist
            p = C[i] + (balls[i].radius + 0.5 * gap) * e
            w = p - x
            if np.linalg.norm(w) > 0:
                u = w / np.linalg.norm(w)
                m = margins_for(u)
                if np.all(m > 0):
                    return Escape(u, m, "closest-pair", (i, j))
    space = DirectionSpace("real-sphere", d, False)
    regions = [ball_ray_region(x, b) for b in balls]
    found = falsify(CoverageProblem(space, regions), budget)
    if found is not None:
        u = found[0]
        m = margins_for(u)
        if np.all(m > 0):
            return Escape(u, m, "falsifier")
    raise EscapeNotFoundError("no escaping ray found within the budget")


def random_sphere_family(dim, count, rng, r_range=(0.05, 0.6), max_tries=10000):
    """``count`` pairwise disjoint balls with centres on the unit sphere."""
    centers, radii = [], []
    tries = 0
    while len(centers) < count:
        tries += 1
        if tries > max_tries:
            raise ConstructionError("could not place disjoint balls")
        c = rng.standard_normal(dim)
        c /= np.linalg.norm(c)
        r = float(rng.uniform(*r_range))
        if all(np.linalg.norm(c - c2) > r + r2 + 1e-6 for c2, r2 in zip(centers, radii)):
            centers.append(c)
            radii.append(r)
    return np.array(centers), np.array(radii)


def random_interior_point(dim, rng, scale=0.95, avoid=None, max_tries=10000):
    """Uniform point of the ball of radius ``scale``, outside the balls
    ``avoid = (centers, radii)`` when given."""
    for _ in range(max_tries):
        x = rng.standard_normal(dim)
        x *= scale * rng.random() ** (1.0 / dim) / np.linalg.norm(x)
        if avoid is None or np.all(np.linalg.norm(avoid[0] - x, axis=1) > avoid[1]):
            return x
    raise ConstructionError("no interior point outside the balls")


# ---------------------------------------------------------------------------
# shipped / searched centre-shadow configurations
# ---------------------------------------------------------------------------


def config_path(dim, count):
    return resources.files("shadowlab") / "data" / f"shadow_m{dim}_k{count}.json"


def load_config(dim, count):
    """Shipped configuration scene for ``count`` balls on S^(dim-1), or None."""
    p = config_path(dim, count)
    if not p.is_file():
        return None
    return parse_scene(p.read_text())


def config_arrays(scene):
    C = np.array([resolve(b).center for b in scene.bodies])
    r = np.array([resolve(b).radius for b in scene.bodies])
    return C, r


def config_scene(centers, radii, name="search", meta=None):
    m = centers.shape[1]
    return Scene("real", m, np.zeros(m), _balls(centers, radii), "line", {
        "name": name, **(meta or {}), "sphere": {"center": [0.0] * m, "radius": 1.0}})


def embed_in_field(centers, field_kind):
    """Put R^m vectors into the field space K^n of smallest n with bn > m,
    as the real subspace spanned by the first m real coordinates.

    Complex families live in R^(2n - 1) (a real hyperplane of C^n);
    quaternionic ones in R^(4n - 3), which leaves three zero coordinates.
    """
    b = {"complex": 2, "quaternion": 4}[field_kind]
    m = centers.shape[1]
    n = m // b + 1
    if m != b * n - (b - 1):
        raise InputError(f"a {field_kind} embedding needs real dimension {b}n - {b - 1}")
    out = np.zeros((len(centers), b * n))
    out[:, :m] = centers
    return out, n


def construct_theorem4(n=3, field_kind="complex", source="data", search_params=None, open_balls=None):
    """Embed a real centre-shadow family of 2n (4n - 2) balls on S^(2n-2)
    (S^(4n-4)) into a real hyperplane through the centre of S^(2n-1) in C^n
    (S^(4n-1) in H^n); query complex (quaternionic) lines through the centre."""
    if n < 2:
        raise InputError("theorem4 needs n >= 2")
    if field_kind not in ("complex", "quaternion"):
        raise InputError("field must be complex or quaternion")
    m = 2 * n - 1 if field_kind == "complex" else 4 * n - 3
    K = m + 1
    if isinstance(source, tuple):
        C, r = source
        meta = {"source": "given"}
    elif source == "data":
        got = load_config(m, K)
        if got is None:
            raise ConstructionError(f"no shipped {K}-ball configuration on S^{m - 1}; "
                                    "run the configuration search first")
        C, r = config_arrays(got)
        meta = {"source": "data", "source_certified": bool(got.metadata.get("certified", False)),
                "source_margin": got.metadata.get("margin")}
    elif source == "search":
        from .search import ConfigSearchParams, search_config

        params = search_params or ConfigSearchParams(m, K)
        sc, slack = search_config(params)
        C, r = config_arrays(sc)
        meta = {"source": "search", "source_certified": True, "source_margin": float(slack)}
    else:
        raise InputError(f"unknown source {source!r}")
    if C.shape != (K, m):
        raise InputError(f"expected {K} centres in R^{m}")
    E, nn = embed_in_field(C, field_kind)
    if open_balls is None:
        open_balls = field_kind == "complex"
    return Scene(field_kind, nn, np.zeros(E.shape[1]), _balls(E, r, open_balls), "cline", {
        "name": "theorem4", "params": {"n": int(n), "field": field_kind, **meta},
        "sphere": {"center": [0.0] * E.shape[1], "radius": 1.0}})
