"""Deterministic SVG drawings of scenes.

Planar scenes are drawn exactly.  Higher-dimensional ones are projected
orthogonally onto two chosen coordinate axes and labelled as projections.
"""

import numpy as np

from .errors import InputError
from .geometry import Ball, Ellipsoid, HPolytope, resolve

SIZE = 480
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _f(x):
    return f"{x:.4f}".rstrip("0").rstrip(".") if abs(x) >= 5e-5 else "0"


def parse_projection(spec, dim):
    """``"i,j"`` -> (i, j): the coordinate plane to project onto."""
    try:
        i, j = (int(p) for p in str(spec).split(","))
    except ValueError:
        raise InputError(f"bad projection {spec!r}: expected two coordinate indices 'i,j'") from None
    if not (0 <= i < dim and 0 <= j < dim) or i == j:
        raise InputError(f"bad projection {spec!r} for a {dim}-dimensional scene")
    return i, j


def _hull(P):
    """Convex hull of 2-D points, counter-clockwise (monotone chain)."""
    pts = sorted(set(map(tuple, np.round(P, 12))))
    if len(pts) < 3:
        return np.array(pts)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lo, hi = [], []
    for p in pts:
        while len(lo) >= 2 and cross(lo[-2], lo[-1], p) <= 0:
            lo.pop()
        lo.append(p)
    for p in reversed(pts):
        while len(hi) >= 2 and cross(hi[-2], hi[-1], p) <= 0:
            hi.pop()
        hi.append(p)
    return np.array(lo[:-1] + hi[:-1])


def _shape_outline(shape, axes):
    """("circle", c, r) / ("ellipse", c, rx, ry, angle) / ("polygon", pts)."""
    i, j = axes
    if isinstance(shape, Ball):
        return ("circle", shape.center[[i, j]], shape.radius)
    if isinstance(shape, Ellipsoid):
        M = shape.orientation * shape.semi_axes
        Q = M[[i, j]] @ M[[i, j]].T
        w, V = np.linalg.eigh(Q)
        w = np.sqrt(np.maximum(w, 0.0))
        ang = float(np.degrees(np.arctan2(V[1, 1], V[0, 1])))
        return ("ellipse", shape.center[[i, j]], w[1], w[0], ang)
    if isinstance(shape, HPolytope):
        return ("polygon", _hull(shape.vertices[:, [i, j]]))
    raise InputError(f"cannot draw {type(shape).__name__}")


def render_svg(scene, witness=None, projection="0,1", title=None):
    """SVG 1.1 text for ``scene``; ``witness`` is an optional query direction."""
    real_dim = scene.real_dim
    axes = parse_projection(projection, real_dim)
    i, j = axes
    outlines = [_shape_outline(resolve(b), axes) for b in scene.bodies]
    x = np.asarray(scene.point, float)[[i, j]]
    sphere = scene.metadata.get("sphere") if isinstance(scene.metadata, dict) else None
    # view box from the drawn extent
    pts = [x]
    for o in outlines:
        if o[0] == "circle":
            pts += [o[1] - o[2], o[1] + o[2]]
        elif o[0] == "ellipse":
            pts += [o[1] - max(o[2], o[3]), o[1] + max(o[2], o[3])]
        else:
            pts += list(o[1])
    if sphere:
        c = np.asarray(sphere["center"], float)[[i, j]]
        pts += [c - sphere["radius"], c + sphere["radius"]]
    pts = np.array(pts)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(max(hi - lo)) * 1.1 or 1.0
    mid = 0.5 * (lo + hi)
    scale = SIZE / span

    def tx(p):
        return (SIZE / 2 + (p[0] - mid[0]) * scale, SIZE / 2 - (p[1] - mid[1]) * scale)

    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE + 40}" '
           f'viewBox="0 0 {SIZE} {SIZE + 40}">',
           f'<rect x="0" y="0" width="{SIZE}" height="{SIZE + 40}" fill="white"/>']
    if sphere:
        c = tx(np.asarray(sphere["center"], float)[[i, j]])
        out.append(f'<circle cx="{_f(c[0])}" cy="{_f(c[1])}" r="{_f(sphere["radius"] * scale)}" '
                   'fill="none" stroke="#888888" stroke-dasharray="4 3"/>')
    for k, o in enumerate(outlines):
        color = PALETTE[k % len(PALETTE)]
        style = f'fill="{color}" fill-opacity="0.25" stroke="{color}"'
        if o[0] == "circle":
            c = tx(o[1])
            out.append(f'<circle cx="{_f(c[0])}" cy="{_f(c[1])}" r="{_f(o[2] * scale)}" {style}/>')
        elif o[0] == "ellipse":
            c = tx(o[1])
            out.append(f'<ellipse cx="{_f(c[0])}" cy="{_f(c[1])}" rx="{_f(o[2] * scale)}" '
                       f'ry="{_f(o[3] * scale)}" transform="rotate({_f(-o[4])} {_f(c[0])} {_f(c[1])})" {style}/>')
        else:
            poly = " ".join(f"{_f(a)},{_f(b)}" for a, b in map(tx, o[1]))
            out.append(f'<polygon points="{poly}" {style}/>')
    if witness is not None:
        u = np.asarray(witness, float)[[i, j]]
        if np.linalg.norm(u) > 1e-12:
            u = u / np.linalg.norm(u)
            t0 = 0.0 if scene.mode == "ray" else -span
            a, b = tx(x + t0 * u), tx(x + span * u)
            out.append(f'<line x1="{_f(a[0])}" y1="{_f(a[1])}" x2="{_f(b[0])}" y2="{_f(b[1])}" '
                       'stroke="black" stroke-width="1.5"/>')
    p = tx(x)
    out.append(f'<circle cx="{_f(p[0])}" cy="{_f(p[1])}" r="3" fill="black"/>')
    label = title or scene.metadata.get("name", "scene")
    out.append(f'<text x="8" y="{SIZE + 16}" font-family="sans-serif" font-size="12">{label} '
               f'({scene.mode}, {len(scene.bodies)} bodies)</text>')
    if real_dim > 2:
        out.append(f'<text x="8" y="{SIZE + 32}" font-family="sans-serif" font-size="11" fill="#aa0000">'
                   f'orthographic projection onto coordinates ({i}, {j}) of a {real_dim}-dimensional '
                   'scene: overlaps in the picture are not overlaps in space</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
