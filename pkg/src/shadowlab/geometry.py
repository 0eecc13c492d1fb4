"""Convex bodies, similarity transforms and the line/ray/hyperplane/complex-line
intersection margins used everywhere else.

Bodies are closed convex sets of three kinds -- :class:`Ball`,
:class:`Ellipsoid`, :class:`HPolytope` -- optionally wrapped in a
:class:`Body` that carries a pending :class:`Transform`.  All values are
immutable once built.

Sign convention for margins: positive means the line (ray, plane) misses the
body and equals the clearance; zero or negative means it meets the closed
body.
"""

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import linprog, minimize

from . import kernels
from .errors import DegenerateBodyError, InconclusiveDistanceError, InputError

UNIT_TOL = 1e-9


def as_vec(v, dim=None, name="vector"):
    a = np.asarray(v, dtype=float)
    if a.ndim != 1:
        raise InputError(f"{name} must be one-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name} has non-finite entries")
    if dim is not None and len(a) != dim:
        raise InputError(f"{name} has dimension {len(a)}, expected {dim}")
    return a


def check_unit(u, name="direction"):
    u = as_vec(u, name=name)
    n = np.linalg.norm(u)
    if abs(n - 1.0) > UNIT_TOL:
        raise InputError(f"{name} must be a unit vector (norm {n!r})")
    return u


def normalize(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Transform:
    """Translate by ``translation`` then scale by ``homothety_ratio`` about
    ``homothety_center``."""

    translation: np.ndarray
    homothety_center: np.ndarray
    homothety_ratio: float = 1.0

    def __post_init__(self):
        t = as_vec(self.translation, name="translation")
        c = as_vec(self.homothety_center, dim=len(t), name="homothety_center")
        k = float(self.homothety_ratio)
        if not k > 0 or not math.isfinite(k):
            raise InputError(f"homothety ratio must be positive, got {k}")
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "homothety_center", c)
        object.__setattr__(self, "homothety_ratio", k)

    @classmethod
    def identity(cls, dim):
        return cls(np.zeros(dim), np.zeros(dim), 1.0)

    @classmethod
    def translate(cls, v):
        v = as_vec(v)
        return cls(v, np.zeros(len(v)), 1.0)

    @classmethod
    def homothety(cls, center, ratio):
        center = as_vec(center)
        return cls(np.zeros(len(center)), center, ratio)

    @property
    def dim(self):
        return len(self.translation)

    @property
    def affine(self):
        """``(k, b)`` with the map written as ``y -> k*y + b``."""
        k = self.homothety_ratio
        return k, k * self.translation + (1.0 - k) * self.homothety_center

    def apply(self, y):
        k, b = self.affine
        return k * np.asarray(y, dtype=float) + b

    def compose(self, inner):
        """``self o inner``: apply ``inner`` first."""
        k1, b1 = inner.affine
        k2, b2 = self.affine
        k = k1 * k2
        b = k2 * b1 + b2
        return Transform(b / k, np.zeros(len(b)), k)

    def is_close(self, other, tol=1e-12):
        k1, b1 = self.affine
        k2, b2 = other.affine
        return abs(k1 - k2) <= tol and np.allclose(b1, b2, atol=tol, rtol=0)


# ---------------------------------------------------------------------------
# shapes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float
    kind = "ball"

    def __post_init__(self):
        c = as_vec(self.center, name="ball center")
        r = float(self.radius)
        if not r > 0 or not math.isfinite(r):
            raise DegenerateBodyError(f"ball radius must be positive, got {r}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", r)

    @property
    def dim(self):
        return len(self.center)

    def support(self, u):
        return self.center + self.radius * u

    def sd(self, Y):
        Y = np.atleast_2d(Y)
        return np.linalg.norm(Y - self.center, axis=1) - self.radius

    def bounding_ball(self):
        return self.center, self.radius

    def similarity(self, k, b):
        return Ball(k * self.center + b, k * self.radius)


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """``{center + R diag(semi_axes) w : |w| <= 1}`` with ``R = orientation``."""

    center: np.ndarray
    semi_axes: np.ndarray
    orientation: np.ndarray = None
    kind = "ellipsoid"

    def __post_init__(self):
        c = as_vec(self.center, name="ellipsoid center")
        a = as_vec(self.semi_axes, dim=len(c), name="semi_axes")
        if np.any(a <= 0):
            raise DegenerateBodyError("ellipsoid semi-axes must be positive")
        R = np.eye(len(c)) if self.orientation is None else np.asarray(self.orientation, float)
        if R.shape != (len(c), len(c)):
            raise InputError(f"orientation must be {len(c)}x{len(c)}")
        if not np.allclose(R.T @ R, np.eye(len(c)), atol=1e-10, rtol=0):
            raise InputError("orientation columns must be orthonormal (within 1e-10)")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "semi_axes", a)
        object.__setattr__(self, "orientation", R)

    @property
    def dim(self):
        return len(self.center)

    def support(self, u):
        R, a = self.orientation, self.semi_axes
        w = a * (R.T @ u)
        return self.center + R @ (a * w) / np.linalg.norm(w)

    def sd(self, Y):
        Y = np.atleast_2d(Y)
        return kernels.ellipsoid_sd((Y - self.center) @ self.orientation, self.semi_axes)

    def bounding_ball(self):
        return self.center, float(self.semi_axes.max())

    def similarity(self, k, b):
        return Ellipsoid(k * self.center + b, k * self.semi_axes, self.orientation)


@dataclass(frozen=True, eq=False)
class HPolytope:
    """``{y : normals[i] . y <= offsets[i]}``; normals are rescaled to unit length."""

    normals: np.ndarray
    offsets: np.ndarray
    kind = "hpolytope"

    def __post_init__(self):
        N = np.atleast_2d(np.asarray(self.normals, dtype=float))
        o = np.asarray(self.offsets, dtype=float).reshape(-1)
        if N.shape[0] != len(o):
            raise InputError("normals and offsets disagree in count")
        if not (np.all(np.isfinite(N)) and np.all(np.isfinite(o))):
            raise InputError("polytope data must be finite")
        lens = np.linalg.norm(N, axis=1)
        if np.any(lens == 0):
            raise InputError("zero facet normal")
        # rows already unit to rounding are kept bit-for-bit so that
        # serialised polytopes parse back to the same numbers
        lens = np.where(np.abs(lens - 1.0) <= 4 * np.finfo(float).eps, 1.0, lens)
        N = N / lens[:, None]
        o = o / lens
        object.__setattr__(self, "normals", N)
        object.__setattr__(self, "offsets", o)
        self._certify_bounded()
        if self.chebyshev[1] <= 0:
            raise DegenerateBodyError("polytope has empty interior")

    @property
    def dim(self):
        return self.normals.shape[1]

    def _certify_bounded(self):
        d = self.dim
        for i in range(d):
            for sgn in (1.0, -1.0):
                cost = np.zeros(d)
                cost[i] = -sgn
                res = linprog(cost, A_ub=self.normals, b_ub=self.offsets,
                              bounds=[(None, None)] * d, method="highs")
                if res.status == 3:
                    raise DegenerateBodyError("polytope is unbounded")
                if res.status == 2:
                    raise DegenerateBodyError("polytope is empty")
                if res.status != 0:
                    raise DegenerateBodyError(f"boundedness LP failed: {res.message}")

    @cached_property
    def chebyshev(self):
        """(center, radius) of the largest inscribed ball."""
        d = self.dim
        cost = np.zeros(d + 1)
        cost[-1] = -1.0
        A = np.hstack([self.normals, np.ones((len(self.offsets), 1))])
        res = linprog(cost, A_ub=A, b_ub=self.offsets,
                      bounds=[(None, None)] * d + [(0, None)], method="highs")
        if res.status != 0:
            raise DegenerateBodyError(f"Chebyshev LP failed: {res.message}")
        return res.x[:d], float(res.x[-1])

    @cached_property
    def vertices(self):
        d = self.dim
        scale = max(1.0, float(np.abs(self.offsets).max()))
        pts = []
        for idx in itertools.combinations(range(len(self.offsets)), d):
            A = self.normals[list(idx)]
            if abs(np.linalg.det(A)) < 1e-12:
                continue
            p = np.linalg.solve(A, self.offsets[list(idx)])
            if np.all(self.normals @ p - self.offsets <= 1e-9 * scale):
                if not any(np.allclose(p, q, atol=1e-9 * scale, rtol=0) for q in pts):
                    pts.append(p)
        return np.array(pts)

    @cached_property
    def _projection_data(self):
        d = self.dim
        Ms, Ns, bs = [], [], []
        F = len(self.offsets)
        for k in range(1, d + 1):
            for idx in itertools.combinations(range(F), k):
                A = self.normals[list(idx)]
                G = A @ A.T
                if np.linalg.cond(G) > 1e10:
                    continue
                M = np.zeros((d, d))
                Nn = np.zeros((d, d))
                b = np.zeros(d)
                M[:, :k] = A.T @ np.linalg.inv(G)
                Nn[:k] = A
                b[:k] = self.offsets[list(idx)]
                Ms.append(M)
                Ns.append(Nn)
                bs.append(b)
        return np.array(Ms), np.array(Ns), np.array(bs)

    @cached_property
    def _feas_tol(self):
        return 1e-10 * max(self.bounding_ball()[1], 1e-300)

    def support(self, u):
        V = self.vertices
        return V[int(np.argmax(V @ u))].copy()

    def sd(self, Y):
        return kernels.polytope_sd(Y, self.normals, self.offsets, self._projection_data, self._feas_tol)

    def bounding_ball(self):
        V = self.vertices
        c = 0.5 * (V.min(axis=0) + V.max(axis=0))
        return c, float(np.linalg.norm(V - c, axis=1).max())

    def similarity(self, k, b):
        return HPolytope(self.normals, k * self.offsets + self.normals @ b)

    @classmethod
    def box(cls, lo, hi):
        lo, hi = as_vec(lo), as_vec(hi)
        d = len(lo)
        eye = np.eye(d)
        return cls(np.vstack([eye, -eye]), np.concatenate([hi, -lo]))

    @classmethod
    def cube(cls, dim, half=1.0, center=None):
        c = np.zeros(dim) if center is None else as_vec(center, dim)
        return cls.box(c - half, c + half)

    @classmethod
    def regular_simplex(cls, dim, inradius=1.0, center=None):
        """Regular simplex whose facet normals point at the vertices of a
        regular simplex inscribed in the unit sphere."""
        verts = simplex_vertices(dim)
        c = np.zeros(dim) if center is None else as_vec(center, dim)
        return cls(-verts, np.full(dim + 1, inradius) + (-verts) @ c)


SHAPES = (Ball, Ellipsoid, HPolytope)


def simplex_vertices(n):
    """Vertices of a regular n-simplex inscribed in the unit sphere of R^n."""
    E = np.eye(n + 1) - 1.0 / (n + 1)
    # orthonormal basis of the hyperplane sum(x) = 0
    Q, _ = np.linalg.qr(E[:, :n])
    V = E @ Q
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    return V


# ---------------------------------------------------------------------------
# Body wrapper
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Body:
    shape: object
    transform: Transform = None
    open: bool = False

    def __post_init__(self):
        if not isinstance(self.shape, SHAPES):
            raise InputError(f"unsupported shape {type(self.shape).__name__}")
        t = self.transform if self.transform is not None else Transform.identity(self.shape.dim)
        if t.dim != self.shape.dim:
            raise InputError("transform dimension does not match shape")
        object.__setattr__(self, "transform", t)

    @property
    def dim(self):
        return self.shape.dim

    @cached_property
    def resolved(self):
        """The shape with the pending transform baked in."""
        k, b = self.transform.affine
        if k == 1.0 and not np.any(b):
            return self.shape
        return self.shape.similarity(k, b)


def resolve(body):
    if isinstance(body, Body):
        return body.resolved
    if isinstance(body, SHAPES):
        return body
    raise InputError(f"not a body: {type(body).__name__}")


def is_open(body):
    return isinstance(body, Body) and body.open


def apply_transform(body, t):
    """Translate then scale ``body``; returns a :class:`Body` with the map baked in."""
    shape = resolve(body)
    k, b = t.affine
    return Body(shape.similarity(k, b), open=is_open(body))


def support(body, u):
    u = check_unit(u)
    shape = resolve(body)
    if len(u) != shape.dim:
        raise InputError("direction dimension mismatch")
    return shape.support(u)


def bounding_ball(body):
    return resolve(body).bounding_ball()


def signed_distance(body, Y):
    return resolve(body).sd(np.atleast_2d(np.asarray(Y, dtype=float)))


def inscribed_ball(body):
    shape = resolve(body)
    if isinstance(shape, Ball):
        return shape
    if isinstance(shape, Ellipsoid):
        return Ball(shape.center, float(shape.semi_axes.min()))
    c, r = shape.chebyshev
    if r <= 0:
        raise DegenerateBodyError("polytope has empty interior")
    return Ball(c, r)


def circumscribe_polytope(body):
    """Polytope whose facets are tangent to ``body``.

    Balls and ellipsoids get the 2n-facet parallelepiped aligned with their
    axes; polytopes are returned unchanged.
    """
    shape = resolve(body)
    if isinstance(shape, HPolytope):
        return shape
    d = shape.dim
    if isinstance(shape, Ball):
        R, a = np.eye(d), np.full(d, shape.radius)
    else:
        R, a = shape.orientation, shape.semi_axes
    normals = np.vstack([R.T, -R.T])
    offsets = np.concatenate([R.T @ shape.center + a, -(R.T @ shape.center) + a])
    return HPolytope(normals, offsets)


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------

MAX_SUPPORT_EVALS = 1000


def _closest_in_hull(W):
    """Min-norm point of conv(W) (rows), by enumeration of affine sub-hulls."""
    best, best_set, best_norm = None, None, np.inf
    m = len(W)
    for k in range(1, m + 1):
        for idx in itertools.combinations(range(m), k):
            P = W[list(idx)]
            if k == 1:
                lam = np.ones(1)
            else:
                A = np.zeros((k + 1, k + 1))
                A[:k, :k] = P @ P.T
                A[:k, k] = 1.0
                A[k, :k] = 1.0
                rhs = np.zeros(k + 1)
                rhs[k] = 1.0
                try:
                    lam = np.linalg.solve(A, rhs)[:k]
                except np.linalg.LinAlgError:
                    continue
                if np.any(lam < -1e-12):
                    continue
            v = lam @ P
            nv = float(np.linalg.norm(v))
            if nv < best_norm - 1e-15:
                best, best_set, best_norm = v, list(idx), nv
    return best, W[best_set]


def _gjk(A, B, tol):
    """Distance between shapes via support oracles (GJK on A - B)."""

    def sup(w):
        return A.support(w) - B.support(-w)

    ca, _ = A.bounding_ball()
    cb, _ = B.bounding_ball()
    d0 = ca - cb
    if not np.any(d0):
        d0 = np.zeros(A.dim)
        d0[0] = 1.0
    v = sup(-d0 / np.linalg.norm(d0))
    W = v[None, :]
    evals = 2
    lower = 0.0
    while True:
        nv = float(np.linalg.norm(v))
        if nv <= 1e-15:
            return 0.0, 0.0, evals
        w = sup(-v / nv)
        evals += 2
        lower = max(lower, float(v @ w) / nv)
        if nv - lower <= tol or nv - lower <= 1e-12 * nv:
            return nv, max(lower, 0.0), evals
        if np.any(np.all(np.abs(W - w) <= 1e-14 * max(1.0, nv), axis=1)):
            # no new support point: v is already the exact minimiser
            return nv, max(lower, 0.0), evals
        if evals >= MAX_SUPPORT_EVALS:
            raise InconclusiveDistanceError(
                f"body distance did not converge in {MAX_SUPPORT_EVALS} support evaluations",
                max(lower, 0.0), nv)
        W = np.vstack([W, w])
        v, W = _closest_in_hull(W)
        if float(np.linalg.norm(v)) >= nv * (1 - 1e-13):
            # stalled at round-off level: v is as close as floats allow
            return nv, max(lower, 0.0), evals


def _depth_overlap(A, B, start):
    """min_y max(sd_A(y), sd_B(y)); negative iff the interiors intersect."""

    def f(y):
        return max(float(A.sd(y)[0]), float(B.sd(y)[0]))

    res = minimize(f, start, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
    return float(res.fun)


def body_distance(a, b, tol=1e-9):
    """Euclidean distance between two bodies and a status string.

    Returns ``(distance, status)`` with status ``"disjoint"`` (distance > tol),
    ``"touching"`` or ``"overlapping"``.
    """
    if not tol > 0:
        raise InputError("tol must be positive")
    A, B = resolve(a), resolve(b)
    if A.dim != B.dim:
        raise InputError("bodies live in different dimensions")
    if isinstance(A, Ball) and isinstance(B, Ball):
        gap = float(np.linalg.norm(A.center - B.center)) - A.radius - B.radius
    elif isinstance(A, Ball) or isinstance(B, Ball):
        ball, other = (A, B) if isinstance(A, Ball) else (B, A)
        gap = float(other.sd(ball.center)[0]) - ball.radius
    else:
        dist, lower, _ = _gjk(A, B, tol)
        if dist > tol:
            return dist, "disjoint"
        start = 0.5 * (A.bounding_ball()[0] + B.bounding_ball()[0])
        gap = _depth_overlap(A, B, start)
        return 0.0, ("overlapping" if gap < -tol else "touching")
    if gap > tol:
        return gap, "disjoint"
    return 0.0, ("overlapping" if gap < -tol else "touching")


# ---------------------------------------------------------------------------
# intersection margins
# ---------------------------------------------------------------------------


def _search_span(x, shape):
    chi, rho = shape.bounding_ball()
    return float(np.linalg.norm(x - chi)) + rho


def line_margins(x, U, body, ray=False):
    """Vectorised :func:`line_margin` / :func:`ray_margin` over the rows of U.

    The value is ``min_t sd(x + t u)`` over ``t`` in ``[-T, T]`` (``[0, T]``
    for rays), ``T = |x - chi| + rho`` for a bounding ball ``(chi, rho)``.
    Positive values are exact Euclidean clearances.
    """
    shape = resolve(body)
    x = np.asarray(x, dtype=float)
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if isinstance(shape, Ball):
        w = shape.center - x
        s = U @ w
        if ray:
            s = np.maximum(s, 0.0)
        return np.linalg.norm(w[None, :] - s[:, None] * U, axis=1) - shape.radius
    T = _search_span(x, shape)
    lo = 0.0 if ray else -T
    if isinstance(shape, Ellipsoid):
        return kernels.min_sd_ellipsoid(x, U, shape.center, shape.orientation, shape.semi_axes, lo, T)
    return kernels.min_sd_polytope(x, U, shape.normals, shape.offsets, shape._projection_data,
                                   shape._feas_tol, lo, T)


def line_margin(x, u, body):
    """Signed clearance between the line ``x + t u`` and ``body``."""
    u = check_unit(u)
    return float(line_margins(as_vec(x, len(u), "x"), u[None, :], body)[0])


def ray_margin(x, u, body):
    u = check_unit(u)
    return float(line_margins(as_vec(x, len(u), "x"), u[None, :], body, ray=True)[0])


def hyperplane_margin(x, u, ball):
    """``|u . (c - x)| - r`` for the hyperplane through x with normal u."""
    u = check_unit(u)
    ball = resolve(ball)
    if not isinstance(ball, Ball):
        raise InputError("hyperplane margins are defined for balls only")
    return float(abs(u @ (ball.center - as_vec(x, len(u), "x"))) - ball.radius)


def line_hits(margin, open_body=False):
    """Tangency counts as a hit for closed bodies and as a miss for open ones."""
    return margin < 0 if open_body else margin <= 0


# ---------------------------------------------------------------------------
# complex / quaternionic structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AlgebraStructure:
    """Real coordinates for R^n, C^n or H^n with the right scalar actions.

    Complex coordinates are stored as ``(re, im)`` pairs and quaternions as
    ``(1, i, j, k)`` blocks of four; ``maps`` are the real matrices of right
    multiplication by i (and j, plus ``L = J K`` for quaternions).
    """

    kind: str
    n: int
    maps: tuple = field(init=False)

    def __post_init__(self):
        if self.kind not in ("real", "complex", "quaternion"):
            raise InputError(f"unknown field kind {self.kind!r}")
        if self.n < 1:
            raise InputError("field dimension must be positive")
        object.__setattr__(self, "maps", self._build_maps())

    @property
    def block(self):
        return {"real": 1, "complex": 2, "quaternion": 4}[self.kind]

    @property
    def real_dim(self):
        return self.block * self.n

    def _build_maps(self):
        if self.kind == "real":
            return ()
        if self.kind == "complex":
            j = np.array([[0.0, -1.0], [1.0, 0.0]])
            return (np.kron(np.eye(self.n), j),)
        # q -> q*i, q -> q*j in the basis (1, i, j, k)
        ri = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]], dtype=float)
        rj = np.array([[0, 0, -1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0]], dtype=float)
        J = np.kron(np.eye(self.n), ri)
        K = np.kron(np.eye(self.n), rj)
        return (J, K, J @ K)

    def line_basis(self, v):
        """Orthonormal real basis (columns) of the field line through 0 along v."""
        v = np.asarray(v, dtype=float)
        cols = [v] + [M @ v for M in self.maps]
        Q, _ = np.linalg.qr(np.column_stack(cols))
        return Q

    def scalar_multiply(self, v, q):
        """Right-multiply every coordinate of ``v`` by the field scalar ``q``."""
        q = np.asarray(q, dtype=float)
        out = q[0] * np.asarray(v, dtype=float)
        for coeff, M in zip(q[1:], self.maps if self.kind == "complex" else self.maps[:2] + (-self.maps[2],)):
            out = out + coeff * (M @ v)
        return out

    def overlap(self, a, V):
        """``|<a, v>|`` (field Hermitian product) for each row of ``V``."""
        V = np.atleast_2d(V)
        comps = [V @ a] + [V @ (M.T @ a) for M in self.maps]
        return np.sqrt(np.sum(np.square(comps), axis=0))

    def rotated_axes(self, axes):
        """Stack ``[a, J^T a, ...]`` for :func:`kernels.fs_max`."""
        axes = np.atleast_2d(axes)
        return np.stack([axes] + [axes @ M for M in self.maps])


def cline_margin(x, v, ball, s):
    """Clearance between a ball and the complex (quaternionic) line ``x + v q``."""
    v = check_unit(v)
    if s.kind == "real":
        raise InputError("complex-line margins need a complex or quaternion structure")
    ball = resolve(ball)
    if not isinstance(ball, Ball):
        raise InputError("complex-line margins are defined for balls only")
    if len(v) != s.real_dim:
        raise InputError("direction dimension mismatch")
    w = ball.center - as_vec(x, len(v), "x")
    P = s.line_basis(v)
    along = P.T @ w
    dist2 = max(float(w @ w - along @ along), 0.0)
    return math.sqrt(dist2) - ball.radius
