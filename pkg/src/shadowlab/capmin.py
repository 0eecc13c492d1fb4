"""Exact minimum of the cap-family margin ``f(u) = max_i (alpha_i - angle(u, a_i))``.

At a smooth local minimum the active caps share one margin value ``t`` and
``u`` lies in the span of their (sign-adjusted) axes, so ``u = A_S^T w`` with
``G w = b(t)``, ``b_i = cos(alpha_i - t)`` and ``b^T G^{-1} b = 1``.  Solving
that scalar equation for every active set and sign pattern gives a finite
candidate list.

In line mode a cap also bottoms out on a whole great subsphere
``u . a_j = 0`` with value ``alpha_j - pi/2``.  Minima of that kind are
handled by recursing into the subsphere, where the remaining caps become
caps with shortened axes (the formulas above hold for any ``|a_i| <= 1``).

Used as an independent oracle for the net engine and as the search
objective for ball configurations.
"""

import itertools
import math

import numpy as np

T_GRID = 96


def cap_margins(U, axes, halves, antipodal=True):
    """``f`` at every row of ``U``; axes may be shorter than unit."""
    U = np.atleast_2d(U)
    axes = np.atleast_2d(axes)
    d = U @ axes.T
    if antipodal:
        d = np.abs(d)
    return np.max(halves[None, :] - np.arccos(np.clip(d, -1.0, 1.0)), axis=1)


def _batched_candidates(A, alpha, antipodal):
    """Roots of ``b(t)^T G^{-1} b(t) = 1`` for a batch of active sets.

    ``A`` is (N, s, m), ``alpha`` (N, s).  A grid brackets the sign changes,
    then every bracket is bisected at once.
    """
    N, s, m = A.shape
    G = A @ np.swapaxes(A, 1, 2)
    ok = np.linalg.cond(G) < 1e10 if s > 1 else np.ones(N, bool)
    A, alpha, G = A[ok], alpha[ok], G[ok]
    if not len(A):
        return np.zeros((0, m))
    Gi = np.linalg.inv(G)
    norms = np.sqrt(np.einsum("nii->ni", G))
    lo = alpha.max(axis=1) - (math.pi / 2 if antipodal else math.pi)
    hi = np.min(alpha - np.arccos(np.clip(norms, 0.0, 1.0)), axis=1)
    keep = hi >= lo
    A, alpha, Gi, lo, hi = A[keep], alpha[keep], Gi[keep], lo[keep], hi[keep]
    if not len(A):
        return np.zeros((0, m))

    def q(idx, t):
        B = np.cos(alpha[idx] - t[:, None])
        return np.einsum("ni,nij,nj->n", B, Gi[idx], B) - 1.0

    frac = np.linspace(0.0, 1.0, T_GRID)
    T = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
    B = np.cos(alpha[:, None, :] - T[:, :, None])
    Q = np.einsum("nti,nij,ntj->nt", B, Gi, B) - 1.0
    sgn = np.sign(Q)
    ni, ki = np.nonzero(sgn[:, :-1] * sgn[:, 1:] < 0)
    zi, zk = np.nonzero(sgn == 0)
    x0, x1 = T[ni, ki], T[ni, ki + 1]
    f0 = Q[ni, ki]
    for _ in range(60):
        xm = 0.5 * (x0 + x1)
        fm = q(ni, xm)
        left = f0 * fm <= 0
        x1 = np.where(left, xm, x1)
        x0 = np.where(left, x0, xm)
        f0 = np.where(left, f0, fm)
    idx = np.concatenate([ni, zi])
    ts = np.concatenate([0.5 * (x0 + x1), T[zi, zk]])
    W = np.einsum("nij,nj->ni", Gi[idx], np.cos(alpha[idx] - ts[:, None]))
    U = np.einsum("nim,ni->nm", A[idx], W)
    n = np.linalg.norm(U, axis=1)
    return U[n > 0] / n[n > 0, None]


def candidates(axes, halves, antipodal=True):
    """Smooth KKT candidate directions for the cap family."""
    axes = np.asarray(axes, float)
    halves = np.asarray(halves, float)
    K, m = axes.shape
    idx = np.flatnonzero(np.linalg.norm(axes, axis=1) > 1e-12)
    base = normalize_rows(axes[idx])
    out = [base, -base]
    for s in range(2, min(m, len(idx)) + 1):
        subsets = np.array(list(itertools.combinations(idx, s)))
        if antipodal:
            signs = np.array([(1.0,) + sg for sg in itertools.product((1.0, -1.0), repeat=s - 1)])
        else:
            signs = np.ones((1, s))
        A = axes[subsets][:, None, :, :] * signs[None, :, :, None]
        al = np.broadcast_to(halves[subsets][:, None, :], A.shape[:3])
        out.append(_batched_candidates(A.reshape(-1, s, m), al.reshape(-1, s), antipodal))
    return np.vstack(out)


def normalize_rows(A):
    return A / np.linalg.norm(A, axis=1, keepdims=True)


def _min_rec(axes, halves, antipodal):
    K, m = axes.shape
    if m == 1:
        U = np.array([[1.0], [-1.0]])
        v = cap_margins(U, axes, halves, antipodal)
        i = int(np.argmin(v))
        return float(v[i]), U[i]
    C = candidates(axes, halves, antipodal)
    if len(C) == 0:
        C = np.eye(m)[:1]
    vals = cap_margins(C, axes, halves, antipodal)
    i = int(np.argmin(vals))
    best, where = float(vals[i]), C[i]
    if not antipodal:
        return best, where
    norms = np.linalg.norm(axes, axis=1)
    for j in np.argsort(halves - np.arccos(np.clip(norms, 0, 1))):
        if norms[j] < 1e-12:
            continue
        floor = float(halves[j] - math.pi / 2)
        if floor >= best:
            continue
        # orthonormal basis of a_j^perp
        Q = np.linalg.svd(axes[j][None, :])[2][1:]
        rest = [k for k in range(K) if k != j]
        sub = axes[rest] @ Q.T
        if rest:
            v, y = _min_rec(sub, halves[rest], antipodal)
        else:
            v, y = -math.inf, np.eye(m - 1)[0]
        v = max(v, floor)
        if v < best:
            best, where = v, y @ Q
    return best, where


def cap_family_min(axes, halves, antipodal=True, probes=None):
    """Exact ``min_u f(u)`` and a minimiser.

    ``probes`` (extra directions) guard against degenerate active sets whose
    root is a tangential double root of the scalar equation.
    """
    axes = np.asarray(axes, float)
    halves = np.asarray(halves, float)
    best, where = _min_rec(axes, halves, antipodal)
    if probes is not None and len(probes):
        pv = cap_margins(probes, axes, halves, antipodal)
        i = int(np.argmin(pv))
        if pv[i] < best:
            best, where = float(pv[i]), np.asarray(probes[i], float)
    where = where / np.linalg.norm(where)
    return float(cap_margins(where, axes, halves, antipodal)[0]), where
