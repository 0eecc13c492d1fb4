"""Hot numeric kernels.

Every public kernel has two implementations with identical signatures: a
numba ``@njit`` loop version and a vectorised numpy version.  The dispatch
functions at the bottom pick one according to :mod:`shadowlab._backend`.

Conventions: ``U`` is an ``(N, d)`` array of unit directions; margins are
"covered-positive" (larger means deeper inside a hit region).
"""

import math

import numpy as np

from . import _backend

GOLDEN_ITERS = 60  # 0.618**60 ~ 3e-13: interval width 1e-12 * T
ELLIPSOID_BISECT = 90
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

if _backend.HAVE_NUMBA:
    from numba import njit
else:  # pragma: no cover

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


# ---------------------------------------------------------------------------
# region margins: numpy
# ---------------------------------------------------------------------------


def _cap_max_np(U, axes, half_angles, antipodal):
    dots = U @ axes.T
    dots = np.where(antipodal[None, :], np.abs(dots), dots)
    m = half_angles[None, :] - np.arccos(np.clip(dots, -1.0, 1.0))
    idx = np.argmax(m, axis=1)
    return m[np.arange(len(U)), idx], idx


def _band_max_np(U, axes, thresholds):
    m = thresholds[None, :] - np.abs(U @ axes.T)
    idx = np.argmax(m, axis=1)
    return m[np.arange(len(U)), idx], idx


def _fs_max_np(U, rotated_axes, thresholds):
    # rotated_axes: (q, K, d) -- axis pulled back through each structure map
    comps = np.einsum("nd,qkd->nkq", U, rotated_axes)
    overlap = np.sqrt(np.sum(comps * comps, axis=2))
    m = overlap - thresholds[None, :]
    idx = np.argmax(m, axis=1)
    return m[np.arange(len(U)), idx], idx


# ---------------------------------------------------------------------------
# region margins: numba
# ---------------------------------------------------------------------------


@njit(cache=True)
def _cap_max_nb(U, axes, half_angles, antipodal):
    n, d = U.shape
    k = axes.shape[0]
    out = np.empty(n)
    arg = np.zeros(n, dtype=np.int64)
    for i in range(n):
        best = -np.inf
        bi = 0
        for j in range(k):
            s = 0.0
            for c in range(d):
                s += U[i, c] * axes[j, c]
            if antipodal[j] and s < 0.0:
                s = -s
            if s > 1.0:
                s = 1.0
            elif s < -1.0:
                s = -1.0
            m = half_angles[j] - math.acos(s)
            if m > best:
                best = m
                bi = j
        out[i] = best
        arg[i] = bi
    return out, arg


@njit(cache=True)
def _band_max_nb(U, axes, thresholds):
    n, d = U.shape
    k = axes.shape[0]
    out = np.empty(n)
    arg = np.zeros(n, dtype=np.int64)
    for i in range(n):
        best = -np.inf
        bi = 0
        for j in range(k):
            s = 0.0
            for c in range(d):
                s += U[i, c] * axes[j, c]
            m = thresholds[j] - abs(s)
            if m > best:
                best = m
                bi = j
        out[i] = best
        arg[i] = bi
    return out, arg


@njit(cache=True)
def _fs_max_nb(U, rotated_axes, thresholds):
    n, d = U.shape
    q, k, _ = rotated_axes.shape
    out = np.empty(n)
    arg = np.zeros(n, dtype=np.int64)
    for i in range(n):
        best = -np.inf
        bi = 0
        for j in range(k):
            tot = 0.0
            for e in range(q):
                s = 0.0
                for c in range(d):
                    s += U[i, c] * rotated_axes[e, j, c]
                tot += s * s
            m = math.sqrt(tot) - thresholds[j]
            if m > best:
                best = m
                bi = j
        out[i] = best
        arg[i] = bi
    return out, arg


# ---------------------------------------------------------------------------
# signed distance to an ellipsoid (local frame, semi-axes a)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _ellipsoid_sd_scalar(z, a):
    d = z.shape[0]
    amin = a[0]
    for i in range(1, d):
        if a[i] < amin:
            amin = a[i]
    amin2 = amin * amin
    q = 0.0
    zmin = 0.0
    for i in range(d):
        q += (z[i] / a[i]) ** 2
        if a[i] == amin:
            zmin += z[i] * z[i]
    if q == 1.0:
        return 0.0
    p = np.empty(d)
    if q > 1.0:
        hi = 0.0
        for i in range(d):
            hi += (a[i] * z[i]) ** 2
        lo_s = amin2
        hi_s = math.sqrt(hi) + amin2
        for _ in range(ELLIPSOID_BISECT):
            mid = 0.5 * (lo_s + hi_s)
            f = -1.0
            for i in range(d):
                f += (a[i] * z[i] / (a[i] * a[i] - amin2 + mid)) ** 2
            if f > 0.0:
                lo_s = mid
            else:
                hi_s = mid
        s = 0.5 * (lo_s + hi_s)
        for i in range(d):
            p[i] = a[i] * a[i] * z[i] / (a[i] * a[i] - amin2 + s)
        dist = 0.0
        for i in range(d):
            dist += (z[i] - p[i]) ** 2
        return math.sqrt(dist)
    # inside
    if zmin == 0.0:
        f0 = -1.0
        for i in range(d):
            if a[i] != amin:
                f0 += (a[i] * z[i] / (a[i] * a[i] - amin2)) ** 2
        if f0 <= 0.0:
            first = True
            for i in range(d):
                if a[i] != amin:
                    p[i] = a[i] * a[i] * z[i] / (a[i] * a[i] - amin2)
                elif first:
                    p[i] = amin * math.sqrt(-f0)
                    first = False
                else:
                    p[i] = 0.0
            dist = 0.0
            for i in range(d):
                dist += (z[i] - p[i]) ** 2
            return -math.sqrt(dist)
        lo_s = 0.0
        hi_s = amin2
        for _ in range(ELLIPSOID_BISECT):
            mid = 0.5 * (lo_s + hi_s)
            f = -1.0
            for i in range(d):
                f += (a[i] * z[i] / (a[i] * a[i] - amin2 + mid)) ** 2
            if f > 0.0:
                lo_s = mid
            else:
                hi_s = mid
    else:
        # geometric bisection: the root can sit extremely close to s = 0
        lo_s = amin * math.sqrt(zmin)
        hi_s = amin2
        if lo_s > hi_s:
            lo_s = hi_s
        for _ in range(ELLIPSOID_BISECT):
            mid = math.sqrt(lo_s * hi_s)
            f = -1.0
            for i in range(d):
                f += (a[i] * z[i] / (a[i] * a[i] - amin2 + mid)) ** 2
            if f > 0.0:
                lo_s = mid
            else:
                hi_s = mid
    s = 0.5 * (lo_s + hi_s)
    for i in range(d):
        p[i] = a[i] * a[i] * z[i] / (a[i] * a[i] - amin2 + s)
    dist = 0.0
    for i in range(d):
        dist += (z[i] - p[i]) ** 2
    return -math.sqrt(dist)


def _ellipsoid_sd_np(Z, a):
    """Vectorised signed distance; ``Z`` is ``(N, d)`` in the ellipsoid frame."""
    Z = np.atleast_2d(Z)
    amin = a.min()
    amin2 = amin * amin
    a2 = a * a
    is_min = a == amin
    q = np.sum((Z / a) ** 2, axis=1)
    zmin = np.sum(Z[:, is_min] ** 2, axis=1)
    az = a * Z

    def F(s):
        return np.sum((az / (a2 - amin2 + s[:, None])) ** 2, axis=1) - 1.0

    out = np.zeros(len(Z))
    outside = q > 1.0
    inside = q < 1.0
    lo = np.where(outside, amin2, 0.0)
    hi = np.where(outside, np.sqrt(np.sum(az * az, axis=1)) + amin2, amin2)
    geo = inside & (zmin > 0.0)
    lo = np.where(geo, np.minimum(amin * np.sqrt(zmin), amin2), lo)

    f0 = np.full(len(Z), -1.0)
    if np.any(~is_min):
        f0 = f0 + np.sum((az[:, ~is_min] / (a2[~is_min] - amin2)) ** 2, axis=1)
    special = inside & (zmin == 0.0) & (f0 <= 0.0)

    for _ in range(ELLIPSOID_BISECT):
        mid = np.where(geo, np.sqrt(lo * hi), 0.5 * (lo + hi))
        pos = F(mid) > 0.0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    s = 0.5 * (lo + hi)
    P = a2 * Z / (a2 - amin2 + s[:, None])
    if np.any(special):
        Ps = np.zeros((int(special.sum()), len(a)))
        if np.any(~is_min):
            Ps[:, ~is_min] = a2[~is_min] * Z[special][:, ~is_min] / (a2[~is_min] - amin2)
        first = int(np.flatnonzero(is_min)[0])
        Ps[:, first] = amin * np.sqrt(-f0[special])
        P[special] = Ps
    dist = np.sqrt(np.sum((Z - P) ** 2, axis=1))
    out = np.where(outside, dist, np.where(inside, -dist, 0.0))
    return out


# ---------------------------------------------------------------------------
# signed distance to an H-polytope
# ---------------------------------------------------------------------------


@njit(cache=True)
def _polytope_sd_scalar(y, normals, offsets, proj_M, proj_N, proj_b, tol):
    F, d = normals.shape
    worst = -np.inf
    for i in range(F):
        s = -offsets[i]
        for c in range(d):
            s += normals[i, c] * y[c]
        if s > worst:
            worst = s
    if worst <= 0.0:
        return worst
    best = np.inf
    S = proj_M.shape[0]
    p = np.empty(d)
    r = np.empty(d)
    for k in range(S):
        for j in range(d):
            acc = -proj_b[k, j]
            for c in range(d):
                acc += proj_N[k, j, c] * y[c]
            r[j] = acc
        for c in range(d):
            acc = 0.0
            for j in range(d):
                acc += proj_M[k, c, j] * r[j]
            p[c] = y[c] - acc
        feasible = True
        for i in range(F):
            s = -offsets[i]
            for c in range(d):
                s += normals[i, c] * p[c]
            if s > tol:
                feasible = False
                break
        if feasible:
            dist = 0.0
            for c in range(d):
                dist += (y[c] - p[c]) ** 2
            if dist < best:
                best = dist
    return math.sqrt(best)


def _polytope_sd_np(Y, normals, offsets, proj_M, proj_N, proj_b, tol):
    Y = np.atleast_2d(Y)
    viol = Y @ normals.T - offsets
    worst = viol.max(axis=1)
    out = worst.copy()
    outside = worst > 0.0
    if np.any(outside):
        Yo = Y[outside]
        R = np.einsum("kjc,nc->nkj", proj_N, Yo) - proj_b[None]
        P = Yo[:, None, :] - np.einsum("kcj,nkj->nkc", proj_M, R)
        feas = np.all(np.einsum("nkc,fc->nkf", P, normals) - offsets <= tol, axis=2)
        dist2 = np.sum((Yo[:, None, :] - P) ** 2, axis=2)
        dist2 = np.where(feas, dist2, np.inf)
        out[outside] = np.sqrt(dist2.min(axis=1))
    return out


# ---------------------------------------------------------------------------
# 1-D convex minimisation of the signed distance along lines / rays
# ---------------------------------------------------------------------------


@njit(cache=True)
def _golden_ellipsoid_nb(x, U, center, rot, axes_len, lo, hi):
    n, d = U.shape
    out = np.empty(n)
    # work in the ellipsoid frame: z(t) = R^T (x - c) + t R^T u
    z0 = np.zeros(d)
    for c in range(d):
        acc = 0.0
        for r in range(d):
            acc += rot[r, c] * (x[r] - center[r])
        z0[c] = acc
    zu = np.empty(d)
    z = np.empty(d)
    for i in range(n):
        for c in range(d):
            acc = 0.0
            for r in range(d):
                acc += rot[r, c] * U[i, r]
            zu[c] = acc
        a_ = lo
        b_ = hi
        t1 = b_ - INV_PHI * (b_ - a_)
        t2 = a_ + INV_PHI * (b_ - a_)
        for c in range(d):
            z[c] = z0[c] + t1 * zu[c]
        f1 = _ellipsoid_sd_scalar(z, axes_len)
        for c in range(d):
            z[c] = z0[c] + t2 * zu[c]
        f2 = _ellipsoid_sd_scalar(z, axes_len)
        for _ in range(GOLDEN_ITERS):
            if f1 <= f2:
                b_ = t2
                t2 = t1
                f2 = f1
                t1 = b_ - INV_PHI * (b_ - a_)
                for c in range(d):
                    z[c] = z0[c] + t1 * zu[c]
                f1 = _ellipsoid_sd_scalar(z, axes_len)
            else:
                a_ = t1
                t1 = t2
                f1 = f2
                t2 = a_ + INV_PHI * (b_ - a_)
                for c in range(d):
                    z[c] = z0[c] + t2 * zu[c]
                f2 = _ellipsoid_sd_scalar(z, axes_len)
        best = min(f1, f2)
        for c in range(d):
            z[c] = z0[c] + lo * zu[c]
        best = min(best, _ellipsoid_sd_scalar(z, axes_len))
        for c in range(d):
            z[c] = z0[c] + hi * zu[c]
        best = min(best, _ellipsoid_sd_scalar(z, axes_len))
        out[i] = best
    return out


@njit(cache=True)
def _golden_polytope_nb(x, U, normals, offsets, proj_M, proj_N, proj_b, tol, lo, hi):
    n, d = U.shape
    out = np.empty(n)
    y = np.empty(d)
    for i in range(n):
        a_ = lo
        b_ = hi
        t1 = b_ - INV_PHI * (b_ - a_)
        t2 = a_ + INV_PHI * (b_ - a_)
        for c in range(d):
            y[c] = x[c] + t1 * U[i, c]
        f1 = _polytope_sd_scalar(y, normals, offsets, proj_M, proj_N, proj_b, tol)
        for c in range(d):
            y[c] = x[c] + t2 * U[i, c]
        f2 = _polytope_sd_scalar(y, normals, offsets, proj_M, proj_N, proj_b, tol)
        for _ in range(GOLDEN_ITERS):
            if f1 <= f2:
                b_ = t2
                t2 = t1
                f2 = f1
                t1 = b_ - INV_PHI * (b_ - a_)
                for c in range(d):
                    y[c] = x[c] + t1 * U[i, c]
                f1 = _polytope_sd_scalar(y, normals, offsets, proj_M, proj_N, proj_b, tol)
            else:
                a_ = t1
                t1 = t2
                f1 = f2
                t2 = a_ + INV_PHI * (b_ - a_)
                for c in range(d):
                    y[c] = x[c] + t2 * U[i, c]
                f2 = _polytope_sd_scalar(y, normals, offsets, proj_M, proj_N, proj_b, tol)
        best = min(f1, f2)
        for c in range(d):
            y[c] = x[c] + lo * U[i, c]
        best = min(best, _polytope_sd_scalar(y, normals, offsets, proj_M, proj_N, proj_b, tol))
        for c in range(d):
            y[c] = x[c] + hi * U[i, c]
        best = min(best, _polytope_sd_scalar(y, normals, offsets, proj_M, proj_N, proj_b, tol))
        out[i] = best
    return out


def _golden_np(sd, x, U, lo, hi):
    """Vectorised golden-section minimum of ``t -> sd(x + t u)`` per row of U."""
    n = len(U)
    a = np.full(n, lo, dtype=float)
    b = np.full(n, hi, dtype=float)
    t1 = b - INV_PHI * (b - a)
    t2 = a + INV_PHI * (b - a)
    f1 = sd(x + t1[:, None] * U)
    f2 = sd(x + t2[:, None] * U)
    for _ in range(GOLDEN_ITERS):
        left = f1 <= f2
        # left: keep [a, t2]; right: keep [t1, b]
        nb = np.where(left, t2, b)
        na = np.where(left, a, t1)
        nt1 = np.where(left, nb - INV_PHI * (nb - na), t2)
        nt2 = np.where(left, t1, na + INV_PHI * (nb - na))
        probe = np.where(left, nt1, nt2)
        fp = sd(x + probe[:, None] * U)
        f2, f1 = np.where(left, f1, fp), np.where(left, fp, f2)
        a, b, t1, t2 = na, nb, nt1, nt2
    best = np.minimum(f1, f2)
    best = np.minimum(best, sd(x + lo * U))
    best = np.minimum(best, sd(x + hi * U))
    return best


def _golden_ellipsoid_np(x, U, center, rot, axes_len, lo, hi):
    def sd(Y):
        return _ellipsoid_sd_np((Y - center) @ rot, axes_len)

    return _golden_np(sd, x, U, lo, hi)


def _golden_polytope_np(x, U, normals, offsets, proj_M, proj_N, proj_b, tol, lo, hi):
    def sd(Y):
        return _polytope_sd_np(Y, normals, offsets, proj_M, proj_N, proj_b, tol)

    return _golden_np(sd, x, U, lo, hi)


@njit(cache=True)
def _ellipsoid_sd_many_nb(Z, a):
    out = np.empty(Z.shape[0])
    for i in range(Z.shape[0]):
        out[i] = _ellipsoid_sd_scalar(Z[i], a)
    return out


@njit(cache=True)
def _polytope_sd_many_nb(Y, normals, offsets, proj_M, proj_N, proj_b, tol):
    out = np.empty(Y.shape[0])
    for i in range(Y.shape[0]):
        out[i] = _polytope_sd_scalar(Y[i], normals, offsets, proj_M, proj_N, proj_b, tol)
    return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _f(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def cap_max(U, axes, half_angles, antipodal):
    """Max over caps of ``half_angle - angle``; returns (values, argmax)."""
    U, axes, half_angles = _f(U), _f(axes), _f(half_angles)
    antipodal = np.ascontiguousarray(antipodal, dtype=np.bool_)
    if _backend.get_backend() == "numba":
        return _cap_max_nb(U, axes, half_angles, antipodal)
    return _cap_max_np(U, axes, half_angles, antipodal)


def band_max(U, axes, thresholds):
    U, axes, thresholds = _f(U), _f(axes), _f(thresholds)
    if _backend.get_backend() == "numba":
        return _band_max_nb(U, axes, thresholds)
    return _band_max_np(U, axes, thresholds)


def fs_max(U, rotated_axes, thresholds):
    U, rotated_axes, thresholds = _f(U), _f(rotated_axes), _f(thresholds)
    if _backend.get_backend() == "numba":
        return _fs_max_nb(U, rotated_axes, thresholds)
    return _fs_max_np(U, rotated_axes, thresholds)


def ellipsoid_sd(Z, a):
    Z, a = _f(np.atleast_2d(Z)), _f(a)
    if _backend.get_backend() == "numba":
        return _ellipsoid_sd_many_nb(Z, a)
    return _ellipsoid_sd_np(Z, a)


def polytope_sd(Y, normals, offsets, proj, tol):
    Y = _f(np.atleast_2d(Y))
    M, N, b = proj
    if _backend.get_backend() == "numba":
        return _polytope_sd_many_nb(Y, _f(normals), _f(offsets), _f(M), _f(N), _f(b), tol)
    return _polytope_sd_np(Y, normals, offsets, M, N, b, tol)


def min_sd_ellipsoid(x, U, center, rot, axes_len, lo, hi):
    """``min_{lo<=t<=hi} sd(x + t u)`` for every row ``u`` of ``U``."""
    x, U = _f(x), _f(np.atleast_2d(U))
    if _backend.get_backend() == "numba":
        return _golden_ellipsoid_nb(x, U, _f(center), _f(rot), _f(axes_len), float(lo), float(hi))
    return _golden_ellipsoid_np(x, U, center, rot, axes_len, float(lo), float(hi))


def min_sd_polytope(x, U, normals, offsets, proj, tol, lo, hi):
    x, U = _f(x), _f(np.atleast_2d(U))
    M, N, b = proj
    if _backend.get_backend() == "numba":
        return _golden_polytope_nb(
            x, U, _f(normals), _f(offsets), _f(M), _f(N), _f(b), float(tol), float(lo), float(hi)
        )
    return _golden_polytope_np(x, U, normals, offsets, M, N, b, float(tol), float(lo), float(hi))
