"""Coverage decisions over direction spaces.

Three routes, all returning a :class:`Verdict`:

* :func:`cover_circle_exact` -- arc sweep on S^1, exact up to rounding;
* :func:`cover_certify` -- Lipschitz certification on adaptively refined
  cube-sphere cells (or uniform nets), refuting with descent when a
  negative margin shows up;
* :func:`falsify` -- multistart sampling plus sphere hill-climbing that
  looks for an uncovered witness.

Margins are Lipschitz-normalised (each region's raw margin divided by its
Lipschitz bound) so the combined margin is 1-Lipschitz in the angle.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .directions import (AllDirections, Band, Cap, FSCap, MarginField, Tangent, build_net,
                         cell_radius, charts_for, chord_angle, sample_directions)
from .errors import InputError, ResourceError
from .geometry import inscribed_ball, line_margins, normalize

MAX_CELLS = 4_000_000
CHUNK = 65536


# ---------------------------------------------------------------------------
# verdicts and budgets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Covered:
    slack: float
    delta: float = 0.0
    kind = "covered"


@dataclass(frozen=True, eq=False)
class Uncovered:
    witness: np.ndarray
    miss_margin: float
    kind = "uncovered"


@dataclass(frozen=True)
class Inconclusive:
    finest_delta: float
    min_margin_seen: float = math.nan
    kind = "inconclusive"


@dataclass(frozen=True)
class SearchBudget:
    sample_count: int = 100_000
    descent_steps: int = 400
    step_shrink: float = 0.6
    min_delta: float = 1e-3
    seed: int = 0
    restarts: int = 50

    def __post_init__(self):
        if min(self.sample_count, self.descent_steps, self.restarts) <= 0:
            raise InputError("budget counts must be positive")
        if not (0 < self.step_shrink < 1 and self.min_delta > 0):
            raise InputError("step_shrink must lie in (0, 1) and min_delta be positive")


# ---------------------------------------------------------------------------
# problems
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class CoverageProblem:
    """A direction space plus the hit regions that should cover it.

    ``strict`` selects open-body semantics: a zero margin is a miss.
    """

    space: object
    regions: list
    strict: bool = False
    _packed: dict = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.regions = list(self.regions)
        for r in self.regions:
            if isinstance(r, (Cap, Band, FSCap)):
                axis = r.axis
            elif isinstance(r, Tangent):
                axis = r.normal
            elif isinstance(r, MarginField):
                axis = r.x
            else:
                continue
            if len(axis) != self.space.dim:
                raise InputError("region dimension does not match the direction space")
        self._pack()

    def _pack(self):
        caps = [r for r in self.regions if isinstance(r, Cap)]
        bands = [r for r in self.regions if isinstance(r, Band)]
        fs = [r for r in self.regions if isinstance(r, FSCap)]
        p = {
            "all": any(isinstance(r, AllDirections) for r in self.regions),
            "fields": [r for r in self.regions if isinstance(r, MarginField)],
            "tangent": [r for r in self.regions if isinstance(r, Tangent)],
        }
        if caps:
            p["caps"] = (np.array([c.axis for c in caps]), np.array([c.half_angle for c in caps]),
                         np.array([c.antipodal for c in caps]))
        if bands:
            p["bands"] = (np.array([b.axis for b in bands]), np.array([b.cos_threshold for b in bands]))
        if fs:
            axes = np.array([f.axis for f in fs])
            p["fs"] = (fs[0].structure.rotated_axes(axes), np.array([f.overlap_threshold for f in fs]))
        self._packed = p

    def with_regions(self, regions):
        return CoverageProblem(self.space, regions, self.strict)

    def margin(self, U, skip_tangent=False):
        """Combined Lipschitz-normalised margin at each row of ``U``."""
        U = np.atleast_2d(np.asarray(U, dtype=float))
        p = self._packed
        out = np.full(len(U), -np.inf)
        if p["all"]:
            out[:] = np.inf
            return out
        for start in range(0, len(U), CHUNK):
            V = U[start:start + CHUNK]
            m = out[start:start + CHUNK]
            if "caps" in p:
                m = np.maximum(m, kernels.cap_max(V, *p["caps"])[0])
            if "bands" in p:
                m = np.maximum(m, kernels.band_max(V, *p["bands"])[0])
            if "fs" in p:
                m = np.maximum(m, kernels.fs_max(V, *p["fs"])[0])
            for f in p["fields"]:
                m = np.maximum(m, f.margin(V) / f.lipschitz)
            if not skip_tangent:
                for t in p["tangent"]:
                    m = np.maximum(m, t.margin(V))
            out[start:start + CHUNK] = m
        return out

    def is_miss(self, margins):
        return margins <= 0 if self.strict else margins < 0


def coverage_margin(problem, u):
    """Max over regions of the normalised region margin at ``u``."""
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1) > 1e-9:
        raise InputError("direction must be a unit vector")
    return float(problem.margin(u[None, :])[0])


# ---------------------------------------------------------------------------
# exact sweep on the circle
# ---------------------------------------------------------------------------


def _angle(v):
    return math.atan2(v[1], v[0])


def _field_arc(region):
    """Exact hit arc of a convex body seen from an outside point in the plane."""
    x = region.x
    c = inscribed_ball(region.body).center
    theta0 = _angle(c - x)

    def hits(th):
        u = np.array([math.cos(th), math.sin(th)])
        return line_margins(x, u[None], region.body, ray=True)[0] <= 0

    ends = []
    for sgn in (1.0, -1.0):
        lo, hi = 0.0, math.pi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if hits(theta0 + sgn * mid):
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-15:
                break
        ends.append(lo)
    half = 0.5 * (ends[0] + ends[1])
    center = theta0 + 0.5 * (ends[0] - ends[1])
    return center, half


def _arcs(problem):
    arcs = []
    for r in problem.regions:
        if isinstance(r, AllDirections):
            return None
        if isinstance(r, Cap):
            c = _angle(r.axis)
            arcs.append((c, r.half_angle))
            if r.antipodal:
                arcs.append((c + math.pi, r.half_angle))
        elif isinstance(r, Band):
            c = _angle(r.axis) + math.pi / 2
            w = math.asin(r.cos_threshold)
            arcs += [(c, w), (c + math.pi, w)]
        elif isinstance(r, Tangent):
            c = _angle(r.normal)
            arcs.append((c, math.pi / 2))
            if r.antipodal:
                arcs.append((c + math.pi, math.pi / 2))
        elif isinstance(r, MarginField):
            c, w = _field_arc(r)
            arcs.append((c, w))
            if r.mode == "line":
                arcs.append((c + math.pi, w))
        else:
            raise InputError(f"{type(r).__name__} is not supported by the circle sweep")
    return arcs


def _envelope(theta, centers, halves):
    diff = np.abs((theta[:, None] - centers[None, :] + math.pi) % (2 * math.pi) - math.pi)
    return np.max(halves[None, :] - diff, axis=1)


def circle_min_margin(problem):
    """Exact minimum over S^1 of the arc-margin envelope and its location.

    The envelope of tent functions ``w_i - dist(theta, c_i)`` is minimised
    where a descending edge meets an ascending one, i.e. at
    ``(c_i + w_i + c_j - w_j) / 2`` modulo pi.
    """
    if problem.space.dim != 2 or problem.space.kind != "real-sphere":
        raise InputError("exact sweep needs the real circle S^1")
    arcs = _arcs(problem)
    if arcs is None:
        return math.inf, np.array([1.0, 0.0])
    if not arcs:
        return -math.pi, np.array([1.0, 0.0])
    centers = np.array([a[0] for a in arcs])
    halves = np.array([a[1] for a in arcs])
    ends = centers + halves
    starts = centers - halves
    cand = 0.5 * (ends[:, None] + starts[None, :]).ravel()
    cand = np.concatenate([cand, cand + math.pi]) % (2 * math.pi)
    vals = _envelope(cand, centers, halves)
    i = int(np.argmin(vals))
    th = cand[i]
    return float(vals[i]), np.array([math.cos(th), math.sin(th)])


def cover_circle_exact(problem, tol=1e-12):
    """Exact verdict on S^1 (closed-arc convention at tangency)."""
    val, where = circle_min_margin(problem)
    if val == math.inf:
        return Covered(math.inf, 0.0)
    if problem.strict:
        if val > tol:
            return Covered(val, 0.0)
        return Uncovered(where, max(-val, 0.0))
    if val >= -tol:
        return Covered(max(val, 0.0), 0.0)
    return Uncovered(where, -val)


# ---------------------------------------------------------------------------
# descent on the sphere
# ---------------------------------------------------------------------------


def _project(P, basis):
    if basis is None:
        return P
    return (P @ basis) @ basis.T


def descend(problem, starts, steps, rng, step0=0.2, shrink=0.6, basis=None, min_step=1e-13):
    """Hill-climb every start point towards lower combined margin."""
    P = normalize(_project(np.atleast_2d(starts), basis))
    skip = basis is not None
    f = problem.margin(P, skip_tangent=skip)
    step = np.full(len(P), step0)
    d = P.shape[1]
    for _ in range(steps):
        live = step > min_step
        if not np.any(live):
            break
        G = rng.standard_normal((len(P), d))
        G = _project(G, basis)
        G -= np.sum(G * P, axis=1, keepdims=True) * P
        G /= np.linalg.norm(G, axis=1, keepdims=True) + 1e-300
        Q = normalize(P * np.cos(step)[:, None] + G * np.sin(step)[:, None])
        fq = problem.margin(Q, skip_tangent=skip)
        better = (fq < f) & live
        P[better] = Q[better]
        f[better] = fq[better]
        step = np.where(better, np.minimum(step * 1.5, step0), step * shrink)
    return P, f


def _tangent_basis(problem):
    """Orthonormal basis of the directions missing every tangent line region."""
    normals = [t.normal for t in problem._packed["tangent"] if t.antipodal]
    if not normals:
        return None
    N = np.array(normals)
    _, s, vt = np.linalg.svd(N)
    rank = int(np.sum(s > 1e-12))
    basis = vt[rank:].T
    if basis.shape[1] == 0:
        return np.zeros((N.shape[1], 0))
    return basis


def min_margin_estimate(problem, budget=SearchBudget()):
    """Sampling + descent estimate of ``min_u coverage_margin(u)``."""
    rng = np.random.default_rng(budget.seed)
    if problem._packed["all"]:
        return math.inf, sample_directions(problem.space, rng, 1)[0]
    if not problem.regions:
        return -math.pi, sample_directions(problem.space, rng, 1)[0]
    basis = _tangent_basis(problem)
    if basis is not None and basis.shape[1] == 0:
        return math.inf, sample_directions(problem.space, rng, 1)[0]
    U = sample_directions(problem.space, rng, budget.sample_count)
    U = normalize(_project(U, basis)) if basis is not None else U
    m = problem.margin(U, skip_tangent=basis is not None)
    order = np.argsort(m, kind="stable")[: budget.restarts]
    P, f = descend(problem, U[order], budget.descent_steps, rng,
                   shrink=budget.step_shrink, basis=basis)
    i = int(np.argmin(f))
    val = float(f[i])
    if basis is not None:
        val = max(val, 0.0) if val > 0 else val
    return val, P[i]


FALSIFY_CHUNK = 10_000


def falsify(problem, budget=SearchBudget()):
    """Look for a direction whose line misses every body.

    Returns ``(witness, miss_margin)`` or ``None``.  Samples are drawn in
    chunks and the search stops at the first chunk that already contains a
    miss (after polishing it by descent), so easy refutations are cheap.
    With open bodies touching the query point the search runs inside the
    common tangent subspace, and the reported miss margin is then zero by
    construction.
    """
    rng = np.random.default_rng(budget.seed)
    if not problem.regions:
        return sample_directions(problem.space, rng, 1)[0], math.pi
    if problem._packed["all"]:
        return None
    basis = _tangent_basis(problem)
    if basis is not None:
        val, w = min_margin_estimate(problem, budget)
        if not np.isfinite(val) or val >= 0:
            return None
        return w, 0.0 if problem.strict else None
    left = budget.sample_count
    pool_U, pool_m = None, None
    while left > 0:
        n = min(FALSIFY_CHUNK, left)
        left -= n
        U = sample_directions(problem.space, rng, n)
        m = problem.margin(U)
        if pool_U is None:
            pool_U, pool_m = U, m
        else:
            pool_U, pool_m = np.vstack([pool_U, U]), np.concatenate([pool_m, m])
            keep = np.argsort(pool_m, kind="stable")[: budget.restarts]
            pool_U, pool_m = pool_U[keep], pool_m[keep]
        if problem.is_miss(pool_m).any() or left == 0:
            order = np.argsort(pool_m, kind="stable")[: budget.restarts]
            P, f = descend(problem, pool_U[order], budget.descent_steps, rng, shrink=budget.step_shrink)
            i = int(np.argmin(f))
            mm = float(problem.margin(P[i][None])[0])
            if problem.is_miss(np.array([mm]))[0]:
                return P[i], -mm
            return None
    return None


def verify_witness(problem, w, tol=1e-12):
    """Re-check a falsifier witness from scratch.

    Contact with an open ball through the query point counts as a miss when
    the tangent margin is within ``tol`` of zero (it can only vanish up to
    rounding in floating point).
    """
    w = np.asarray(w, dtype=float)[None, :]
    if problem._packed["all"]:
        return False
    rest = float(problem.margin(w, skip_tangent=True)[0])
    if not problem.is_miss(np.array([rest]))[0]:
        return False
    return all(float(t.margin(w)[0]) <= tol for t in problem._packed["tangent"])


# ---------------------------------------------------------------------------
# certification
# ---------------------------------------------------------------------------


def _refute(problem, witness, budget_seed=0, steps=200):
    rng = np.random.default_rng(budget_seed)
    P, f = descend(problem, witness[None], steps, rng, step0=0.05)
    if f[0] <= problem.margin(witness[None])[0]:
        return Uncovered(P[0], float(-f[0]))
    m = float(problem.margin(witness[None])[0])
    return Uncovered(witness, -m)


def _initial_cells(chart, delta_start):
    k = chart.lift.shape[1]
    g = 1
    while True:
        h = 1.0 / g
        axis = -1 + h * (2 * np.arange(g) + 1)
        C = np.array(np.meshgrid(*[axis] * k, indexing="ij")).reshape(k, -1).T if k else np.zeros((1, 0))
        if cell_radius(chart, C, h).max() <= delta_start or g >= 64:
            return C, h
        g *= 2


def cover_certify(problem, delta_start=0.2, delta_min=1e-3, method="adaptive",
                  max_cells=MAX_CELLS, seed=0):
    """Certified coverage verdict.

    ``adaptive`` refines cube-sphere cells only where the Lipschitz test
    ``margin(center) > radius`` fails; ``net`` halves a uniform net's
    resolution from ``delta_start`` to ``delta_min``.  Zero-slack (tangent)
    covers come back :class:`Inconclusive`.
    """
    if not delta_start >= delta_min > 0:
        raise InputError("need delta_start >= delta_min > 0")
    if problem._packed["all"]:
        return Covered(math.inf, 0.0)
    if not problem.regions:
        u = np.zeros(problem.space.dim)
        u[0] = 1.0
        return Uncovered(u, math.pi)
    if method == "net":
        return _certify_net(problem, delta_start, delta_min, seed)
    if method != "adaptive":
        raise InputError(f"unknown certification method {method!r}")

    charts = charts_for(problem.space)
    levels = [[*_initial_cells(ch, delta_start)] for ch in charts]
    slack = math.inf
    finest = math.inf
    stuck = False
    stuck_margin = math.inf
    while True:
        worst_val, worst_dir = math.inf, None
        next_levels = []
        total_next = 0
        any_active = False
        for ch, (C, h) in zip(charts, levels):
            if len(C) == 0:
                next_levels.append((C, h))
                continue
            any_active = True
            dirs = ch.directions(C)
            rad = cell_radius(ch, C, h) * (1 + 1e-9) + 1e-15
            m = problem.margin(dirs)
            miss = problem.is_miss(m)
            if np.any(miss):
                i = int(np.argmin(m))
                if m[i] < worst_val:
                    worst_val, worst_dir = float(m[i]), dirs[i]
            ok = m - rad > 0
            if np.any(ok):
                slack = min(slack, float(np.min(m[ok] - rad[ok])))
                finest = min(finest, float(rad[ok].min()))
            rest = ~ok
            tiny = rest & (rad <= delta_min)
            if np.any(tiny):
                stuck = True
                stuck_margin = min(stuck_margin, float(m[tiny].min()))
                finest = min(finest, float(rad[tiny].min()))
            grow = rest & ~tiny
            Cg = C[grow]
            # children are built only after the cell budget check below
            total_next += len(Cg) * 2 ** C.shape[1]
            next_levels.append((Cg, h))
        if worst_dir is not None:
            return _refute(problem, worst_dir, seed)
        if not any_active:
            break
        if total_next > max_cells:
            raise ResourceError(
                f"certification needs {total_next} cells (> {max_cells}); "
                f"finest radius so far {finest:.3g}", required_delta=delta_min,
                estimated_size=total_next)
        levels = [_split_cells(Cg, h) for Cg, h in next_levels]
    if stuck:
        return Inconclusive(finest, stuck_margin)
    return Covered(slack, finest)


def _split_cells(C, h):
    """The 2^k half-size children of each cube cell centre in ``C``."""
    k = C.shape[1]
    if not len(C):
        return np.zeros((0, k)), h / 2
    offs = np.array(np.meshgrid(*[[-0.5, 0.5]] * k, indexing="ij")).reshape(k, -1).T
    return (C[:, None, :] + h * offs[None, :, :]).reshape(-1, k), h / 2


def _certify_net(problem, delta_start, delta_min, seed):
    space = problem.space
    if space.kind != "real-sphere":
        from .directions import DirectionSpace

        space = DirectionSpace("real-sphere", space.dim, False)
    delta = delta_start
    best = -math.inf
    while True:
        net = build_net(space, delta)
        m = problem.margin(net.points)
        miss = problem.is_miss(m)
        if np.any(miss):
            return _refute(problem, net.points[int(np.argmin(m))], seed)
        lo = float(m.min())
        best = max(best, lo)
        if lo - net.resolution > 0:
            return Covered(lo - net.resolution, net.resolution)
        if delta <= delta_min:
            return Inconclusive(net.resolution, lo)
        delta = max(delta / 2, delta_min)


def verify_probes(problem, verdict, count=100_000, seed=12345):
    """Audit a verdict with random probes; returns the worst probe margin."""
    rng = np.random.default_rng(seed)
    U = sample_directions(problem.space, rng, count)
    return float(problem.margin(U).min())


__all__ = [
    "Covered", "Uncovered", "Inconclusive", "SearchBudget", "CoverageProblem",
    "coverage_margin", "cover_circle_exact", "circle_min_margin", "cover_certify",
    "falsify", "min_margin_estimate", "descend", "verify_probes", "chord_angle",
]
