"""Direction spaces, hit regions and nets.

A shadow query "does every line (ray, hyperplane, complex line) through x
meet one of the bodies?" becomes "do the hit regions cover the direction
space?".  Each region exposes a vectorised signed margin that is positive on
directions whose line hits the body and is Lipschitz (constant
``lipschitz``) in the geodesic angle.
"""

import math
from dataclasses import dataclass
import numpy as np

from . import kernels
from .errors import InputError, ResourceError
from .geometry import (AlgebraStructure, Ball, as_vec, bounding_ball, is_open, line_margins,
                       normalize, resolve)

NET_POINT_BUDGET = 20_000_000


@dataclass(frozen=True)
class DirectionSpace:
    """Unit sphere of R^dim, optionally quotiented by ``u ~ -u`` or by field
    scalars (complex/quaternion projective spaces)."""

    kind: str
    dim: int
    antipodal_quotient: bool = True

    def __post_init__(self):
        if self.kind not in ("real-sphere", "complex-projective", "quaternion-projective"):
            raise InputError(f"unknown direction space kind {self.kind!r}")
        if self.dim < 2:
            raise InputError("direction spaces need ambient dimension >= 2")
        block = self.block
        if self.dim % block:
            raise InputError(f"{self.kind} needs ambient dimension divisible by {block}")

    @property
    def block(self):
        return {"real-sphere": 1, "complex-projective": 2, "quaternion-projective": 4}[self.kind]

    @property
    def structure(self):
        field = {"real-sphere": "real", "complex-projective": "complex",
                 "quaternion-projective": "quaternion"}[self.kind]
        return AlgebraStructure(field, self.dim // self.block)

    @classmethod
    def for_mode(cls, mode, dim, field="real"):
        if mode == "cline":
            if field == "real":
                raise InputError("complex-line mode needs a complex or quaternion space")
            return cls(f"{field}-projective", dim, True)
        if field != "real":
            raise InputError(f"mode {mode!r} is defined on real spaces only")
        if mode in ("line", "hyperplane"):
            return cls("real-sphere", dim, True)
        if mode == "ray":
            return cls("real-sphere", dim, False)
        raise InputError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------


class AllDirections:
    """Query point inside the body: every direction hits."""

    lipschitz = 1.0

    def margin(self, U):
        return np.full(len(np.atleast_2d(U)), np.inf)

    def __repr__(self):
        return "AllDirections()"


ALL_DIRECTIONS = AllDirections()


@dataclass(frozen=True, eq=False)
class Cap:
    """Geodesic ball ``angle(u, axis) <= half_angle`` (and its antipode)."""

    axis: np.ndarray
    half_angle: float
    antipodal: bool = True
    lipschitz = 1.0

    def __post_init__(self):
        a = as_vec(self.axis, name="cap axis")
        if abs(np.linalg.norm(a) - 1) > 1e-12:
            raise InputError("cap axis must be a unit vector")
        if not 0 < self.half_angle < math.pi:
            raise InputError("cap half-angle must lie in (0, pi)")
        object.__setattr__(self, "axis", a)
        object.__setattr__(self, "half_angle", float(self.half_angle))

    def margin(self, U):
        U = np.atleast_2d(U)
        return kernels.cap_max(U, self.axis[None], np.array([self.half_angle]),
                               np.array([self.antipodal]))[0]


@dataclass(frozen=True, eq=False)
class Band:
    """Normals of hyperplanes meeting a ball: ``|u . axis| <= cos_threshold``."""

    axis: np.ndarray
    cos_threshold: float
    lipschitz = 1.0

    def __post_init__(self):
        a = as_vec(self.axis, name="band axis")
        if not 0 <= self.cos_threshold < 1:
            raise InputError("band threshold must lie in [0, 1)")
        object.__setattr__(self, "axis", a)

    def margin(self, U):
        U = np.atleast_2d(U)
        return kernels.band_max(U, self.axis[None], np.array([self.cos_threshold]))[0]


@dataclass(frozen=True, eq=False)
class FSCap:
    """Fubini-Study cap ``|<axis, v>| >= overlap_threshold``."""

    axis: np.ndarray
    overlap_threshold: float
    structure: AlgebraStructure
    lipschitz = 1.0

    def __post_init__(self):
        if not 0 < self.overlap_threshold < 1:
            raise InputError("overlap threshold must lie in (0, 1)")
        object.__setattr__(self, "axis", as_vec(self.axis, self.structure.real_dim, "FS axis"))

    def margin(self, U):
        U = np.atleast_2d(U)
        rot = self.structure.rotated_axes(self.axis)
        return kernels.fs_max(U, rot, np.array([self.overlap_threshold]))[0]


@dataclass(frozen=True, eq=False)
class MarginField:
    """Hit region of a general convex body: ``margin(u) = -line_margin``."""

    x: np.ndarray
    body: object
    mode: str = "line"
    lipschitz: float = 1.0

    def margin(self, U):
        U = np.atleast_2d(U)
        return -line_margins(self.x, U, self.body, ray=(self.mode == "ray"))


@dataclass(frozen=True, eq=False)
class Tangent:
    """Open ball with the query point on its boundary sphere.

    A line through x enters the open ball unless it lies in the tangent
    hyperplane ``u . normal = 0``; a ray needs ``u . normal > 0``.  The margin
    is zero exactly on the missed directions.
    """

    normal: np.ndarray
    antipodal: bool = True
    lipschitz = 1.0

    def margin(self, U):
        dots = np.atleast_2d(U) @ self.normal
        return np.abs(dots) if self.antipodal else dots


REGION_TYPES = (AllDirections, Cap, Band, FSCap, MarginField, Tangent)
BOUNDARY_TOL = 1e-12


def _offset(x, ball):
    ball = resolve(ball)
    if not isinstance(ball, Ball):
        raise InputError("ball regions need a Ball")
    w = ball.center - np.asarray(x, dtype=float)
    return w, float(np.linalg.norm(w)), ball.radius


def ball_line_region(x, ball, antipodal=True, open_body=False):
    """Cap of directions whose line (ray) through x meets the ball.

    Query points within ``BOUNDARY_TOL`` of the sphere count as on it: every
    line then meets the closed ball, while the open ball yields a
    :class:`Tangent` region.
    """
    w, d, r = _offset(x, ball)
    if abs(d - r) <= BOUNDARY_TOL * max(1.0, r):
        return Tangent(w / d, antipodal) if open_body else ALL_DIRECTIONS
    if d < r:
        return ALL_DIRECTIONS
    return Cap(w / d, math.asin(r / d), antipodal)


def ball_ray_region(x, ball, open_body=False):
    return ball_line_region(x, ball, antipodal=False, open_body=open_body)


def ball_hyperplane_region(x, ball):
    w, d, r = _offset(x, ball)
    if d <= r:
        return ALL_DIRECTIONS
    return Band(w / d, r / d)


def ball_cline_region(x, ball, s):
    if s.kind == "real":
        raise InputError("complex-line regions need a complex or quaternion structure")
    w, d, r = _offset(x, ball)
    if d <= r:
        return ALL_DIRECTIONS
    return FSCap(w / d, math.sqrt(1.0 - (r / d) ** 2), s)


def body_margin_region(x, body, mode="line"):
    if mode not in ("line", "ray"):
        raise InputError("margin fields exist for line and ray modes")
    x = np.asarray(x, dtype=float)
    if float(resolve(body).sd(x)[0]) <= 0:
        raise InputError("query point must lie outside the body")
    chi, rho = bounding_ball(body)
    return MarginField(x, body, mode, float(np.linalg.norm(x - chi)) + rho)


def region_for(x, body, mode, structure=None, prefer_analytic=True):
    """Hit region of ``body`` seen from ``x`` under a query ``mode``."""
    shape = resolve(body)
    if mode == "hyperplane":
        return ball_hyperplane_region(x, shape)
    if mode == "cline":
        return ball_cline_region(x, shape, structure)
    if isinstance(shape, Ball) and prefer_analytic:
        return ball_line_region(x, shape, antipodal=(mode == "line"), open_body=is_open(body))
    if float(shape.sd(np.asarray(x, float))[0]) <= 0:
        return ALL_DIRECTIONS
    return body_margin_region(x, body, mode)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def sample_directions(space, rng, n):
    """``n`` uniform unit vectors on the ambient sphere (Gaussian normalisation)."""
    X = rng.standard_normal((n, space.dim))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def sample_direction(space, rng):
    return sample_directions(space, rng, 1)[0]


# ---------------------------------------------------------------------------
# nets with certified covering radius
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Net:
    points: np.ndarray
    resolution: float


def _circle_net(delta, quotient):
    # grid step <= delta; certified covering radius is half the step
    n = max(2, math.ceil(2 * math.pi / delta))
    n += n % 2
    th = (np.arange(n) + 0.5) * (2 * math.pi / n)
    P = np.column_stack([np.cos(th), np.sin(th)])
    if quotient:
        P = P[: n // 2]
    return Net(P, math.pi / n)


_ICO = None


def _icosahedron():
    global _ICO
    if _ICO is None:
        p = (1 + math.sqrt(5)) / 2
        V = np.array([[-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0],
                      [0, -1, p], [0, 1, p], [0, -1, -p], [0, 1, -p],
                      [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1]], dtype=float)
        F = np.array([[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
                      [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
                      [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
                      [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]])
        _ICO = (normalize(V), F)
    return _ICO


def _spherical_circumradius(A, B, C):
    n = np.cross(B - A, C - A)
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    n *= np.sign(np.sum(n * A, axis=1, keepdims=True))
    return np.arccos(np.clip(np.sum(n * A, axis=1), -1, 1))


def _ico_net(delta, quotient):
    V, F = _icosahedron()
    freq = 1
    while True:
        pts, tris = _subdivide(V, F, freq)
        radius = float(_spherical_circumradius(pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]]).max())
        if radius <= delta:
            break
        freq = max(freq + 1, int(freq * radius / delta))
        if 10 * freq * freq + 2 > NET_POINT_BUDGET:
            raise ResourceError("icosahedral net too large", required_delta=delta,
                                estimated_size=10 * freq * freq + 2)
    if quotient:
        pts = _canonical_half(pts)
    return Net(pts, radius)


def _subdivide(V, F, freq):
    """Geodesic frequency-``freq`` subdivision of an icosahedron."""
    keyed = {}
    points = []

    def vid(p):
        q = p / np.linalg.norm(p)
        key = tuple(np.round(q, 12))
        if key not in keyed:
            keyed[key] = len(points)
            points.append(q)
        return keyed[key]

    tris = []
    for a, b, c in F:
        A, B, C = V[a], V[b], V[c]
        grid = {}
        for i in range(freq + 1):
            for j in range(freq + 1 - i):
                k = freq - i - j
                grid[i, j] = vid((i * A + j * B + k * C) / freq)
        for i in range(freq):
            for j in range(freq - i):
                tris.append((grid[i, j], grid[i + 1, j], grid[i, j + 1]))
                if i + j < freq - 1:
                    tris.append((grid[i + 1, j], grid[i + 1, j + 1], grid[i, j + 1]))
    return np.array(points), np.array(tris)


def _canonical_half(P, tol=1e-12):
    """Keep one point of each antipodal pair of a centrally symmetric set."""
    keep = np.zeros(len(P), dtype=bool)
    for i, p in enumerate(P):
        nz = np.flatnonzero(np.abs(p) > tol)
        keep[i] = p[nz[0]] > 0
    return P[keep]


def _angle_grid_net(dim, delta, quotient):
    """Hyperspherical-coordinate grid.

    The covering bound moves a point to its grid neighbour one angle at a
    time; angle k moves by at most ``per`` times the product of sines of the
    already-snapped earlier angles, so the total is at most ``delta``.
    """
    m = dim
    per = delta / (m - 1)
    est = estimate_net_size(DirectionSpace("real-sphere", m, quotient), delta)
    if est > NET_POINT_BUDGET:
        raise ResourceError(f"angle grid for S^{m - 1} at delta={delta} needs ~{est:.3g} points",
                            required_delta=delta, estimated_size=est)
    angles, scale = np.zeros((1, 0)), np.ones(1)
    for k in range(m - 1):
        last = k == m - 2
        span = 2 * math.pi if last else math.pi
        cnt = np.maximum(1, np.ceil(span * scale / (2 * per))).astype(int)
        if last or (k == 0 and quotient):
            cnt += cnt % 2
        h = span / cnt
        rows = np.repeat(np.arange(len(angles)), cnt)
        offs = np.arange(len(rows)) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        vals = (offs + 0.5) * h[rows]
        angles = np.column_stack([angles[rows], vals])
        scale = scale[rows] * np.sin(vals)
    P = _from_hyperspherical(angles)
    if quotient:
        P = P[angles[:, 0] < math.pi / 2]
    return Net(P, delta)


def _from_hyperspherical(angles):
    n, k = angles.shape
    P = np.ones((n, k + 1))
    s = np.ones(n)
    for i in range(k):
        P[:, i] = s * np.cos(angles[:, i])
        s = s * np.sin(angles[:, i])
    P[:, k] = s
    return P


def estimate_net_size(space, delta):
    """Rough point count of :func:`build_net` (before any quotient)."""
    m = space.dim
    if m == 2:
        return math.ceil(2 * math.pi / delta)
    if m == 3:
        return 4 * math.pi / (delta * delta)
    area = 2 * math.pi ** (m / 2) / math.gamma(m / 2)
    return area * ((m - 1) / (2 * delta)) ** (m - 1)


def build_net(space, delta):
    """Net on ``space`` whose covering radius is certified to be <= delta.

    Projective spaces use the net of the ambient real sphere; the field
    quotient only ever merges points, so the guarantee carries over.
    """
    if not delta > 0:
        raise InputError("delta must be positive")
    quotient = space.antipodal_quotient and space.kind == "real-sphere"
    if space.dim == 2:
        return _circle_net(delta, quotient)
    if space.dim == 3:
        return _ico_net(delta, quotient)
    return _angle_grid_net(space.dim, delta, quotient)


# ---------------------------------------------------------------------------
# cube-sphere charts for adaptive certification
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Chart:
    """``v(y) = base + A y`` for box coordinates ``y`` in ``[-1, 1]^k``.

    The union of the radial projections of all charts of a space contains a
    representative of every point of the (quotient) space.
    """

    base: np.ndarray
    lift: np.ndarray  # (dim, k)

    def directions(self, Y):
        V = self.base[None, :] + np.atleast_2d(Y) @ self.lift.T
        return V / np.linalg.norm(V, axis=1, keepdims=True)


def charts_for(space):
    d = space.dim
    b = space.block
    charts = []
    if space.kind == "real-sphere":
        signs = (1.0,) if space.antipodal_quotient else (1.0, -1.0)
        for k in range(d):
            for sg in signs:
                base = np.zeros(d)
                base[k] = sg
                lift = np.delete(np.eye(d), k, axis=1)
                charts.append(Chart(base, lift))
        return charts
    # field projective: the block of largest modulus is scaled to (1, 0, ...)
    n = d // b
    for k in range(n):
        base = np.zeros(d)
        base[k * b] = 1.0
        keep = [i for i in range(d) if not (k * b <= i < (k + 1) * b)]
        lift = np.eye(d)[:, keep]
        charts.append(Chart(base, lift))
    return charts


def cell_radius(chart, centers, half):
    """Certified angular radius of each box cell (max angle to its vertices)."""
    k = chart.lift.shape[1]
    C = chart.directions(centers)
    worst = np.zeros(len(centers))
    signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * k, indexing="ij")).reshape(k, -1).T
    for s in signs:
        Vv = chart.directions(centers + half * s)
        worst = np.maximum(worst, chord_angle(C, Vv))
    return worst


def chord_angle(A, B):
    """Angle between unit rows, accurate for nearly equal vectors."""
    return 2.0 * np.arcsin(np.clip(0.5 * np.linalg.norm(A - B, axis=-1), 0.0, 1.0))
