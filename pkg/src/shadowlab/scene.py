"""Scenes (query point + bodies + mode) and their JSON form.

Scene file::

    {"schema_version": "1",
     "space": {"kind": "real" | "complex" | "quaternion", "dim": n},
     "point": [...], "mode": "line" | "ray" | "hyperplane" | "cline",
     "bodies": [{"type": "ball", "center": [...], "radius": r,
                 "open": false, "transform": {...}}, ...],
     "metadata": {"name": ..., "seed": ..., "params": {...}}}

``dim`` counts field dimensions, so complex and quaternionic points carry
2n and 4n real coordinates (pairs ``(re, im)`` and blocks ``(1, i, j, k)``).
Floats are written with the shortest repr that round-trips (at most 17
significant digits); unknown fields are rejected with their JSON path.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .coverage import CoverageProblem
from .directions import DirectionSpace, region_for
from .errors import InputError
from .geometry import AlgebraStructure, Ball, Body, Ellipsoid, HPolytope, Transform, is_open, resolve

SCHEMA_VERSION = "1"
TOOL_VERSION = "0.1.0"
MODES = ("line", "ray", "hyperplane", "cline")
FIELDS = ("real", "complex", "quaternion")


@dataclass(eq=False)
class Scene:
    field: str
    dim: int
    point: np.ndarray
    bodies: list
    mode: str = "line"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.field not in FIELDS:
            raise InputError(f"space.kind must be one of {FIELDS}, got {self.field!r}")
        if self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "cline" and self.field == "real":
            raise InputError("mode 'cline' needs a complex or quaternion space (mode/space mismatch)")
        if self.mode != "cline" and self.field != "real":
            raise InputError(f"mode {self.mode!r} needs a real space (mode/space mismatch)")
        self.point = np.asarray(self.point, dtype=float)
        if self.point.shape != (self.real_dim,):
            raise InputError(f"point must have {self.real_dim} real coordinates")
        for k, b in enumerate(self.bodies):
            if resolve(b).dim != self.real_dim:
                raise InputError(f"bodies[{k}] has dimension {resolve(b).dim}, expected {self.real_dim}")
            if self.mode in ("hyperplane", "cline") and not isinstance(resolve(b), Ball):
                raise InputError(f"bodies[{k}]: mode {self.mode!r} supports balls only")

    @property
    def structure(self):
        return AlgebraStructure(self.field, self.dim)

    @property
    def real_dim(self):
        return self.structure.real_dim

    @property
    def space(self):
        return DirectionSpace.for_mode(self.mode, self.real_dim, self.field)

    def regions(self, point=None):
        x = self.point if point is None else np.asarray(point, float)
        return [region_for(x, b, self.mode, self.structure) for b in self.bodies]

    def problem(self, point=None):
        strict = any(is_open(b) for b in self.bodies)
        return CoverageProblem(self.space, self.regions(point), strict)

    def with_point(self, point):
        return Scene(self.field, self.dim, point, list(self.bodies), self.mode, dict(self.metadata))

    def with_mode(self, mode):
        return Scene(self.field, self.dim, self.point, list(self.bodies), mode, dict(self.metadata))

    def with_bodies(self, bodies):
        return Scene(self.field, self.dim, self.point, list(bodies), self.mode, dict(self.metadata))

    @property
    def name(self):
        return self.metadata.get("name", "scene")


# ---------------------------------------------------------------------------
# emit
# ---------------------------------------------------------------------------


def _num(x):
    x = float(x)
    if not math.isfinite(x):
        raise InputError("scene values must be finite")
    return x


def _vec(v):
    return [_num(x) for x in np.asarray(v, float).ravel()]


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        return float(v) if math.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def body_to_dict(body):
    b = body if isinstance(body, Body) else Body(body)
    s = b.shape
    if isinstance(s, Ball):
        out = {"type": "ball", "center": _vec(s.center), "radius": _num(s.radius)}
    elif isinstance(s, Ellipsoid):
        out = {"type": "ellipsoid", "center": _vec(s.center), "semi_axes": _vec(s.semi_axes),
               "orientation": [_vec(row) for row in s.orientation]}
    else:
        out = {"type": "hpolytope", "normals": [_vec(row) for row in s.normals],
               "offsets": _vec(s.offsets)}
    t = b.transform
    if not t.is_close(Transform.identity(t.dim), tol=0.0):
        out["transform"] = {"translation": _vec(t.translation),
                            "homothety_center": _vec(t.homothety_center),
                            "homothety_ratio": _num(t.homothety_ratio)}
    if b.open:
        out["open"] = True
    return out


def scene_to_dict(scene):
    return {
        "schema_version": SCHEMA_VERSION,
        "space": {"kind": scene.field, "dim": int(scene.dim)},
        "point": _vec(scene.point),
        "mode": scene.mode,
        "bodies": [body_to_dict(b) for b in scene.bodies],
        "metadata": _jsonable(scene.metadata),
    }


def dumps(obj):
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n"


def emit_scene(scene):
    return dumps(scene_to_dict(scene))


def scene_digest(scene):
    canon = json.dumps(scene_to_dict(scene), sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canon.encode()).hexdigest()


# ---------------------------------------------------------------------------
# parse
# ---------------------------------------------------------------------------


def _check_keys(obj, path, required, optional=()):
    if not isinstance(obj, dict):
        raise InputError(f"{path}: expected an object")
    for k in obj:
        if k not in required and k not in optional:
            raise InputError(f"{path}.{k}: unknown field")
    for k in required:
        if k not in obj:
            raise InputError(f"{path}: missing field {k!r}")


def _float(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InputError(f"{path}: expected a number")
    if not math.isfinite(v):
        raise InputError(f"{path}: must be finite")
    return float(v)


def _floats(v, path, n=None):
    if not isinstance(v, list):
        raise InputError(f"{path}: expected an array of numbers")
    out = np.array([_float(x, f"{path}[{i}]") for i, x in enumerate(v)])
    if n is not None and len(out) != n:
        raise InputError(f"{path}: expected {n} entries, got {len(out)}")
    return out


def _matrix(v, path, cols=None):
    if not isinstance(v, list) or not v:
        raise InputError(f"{path}: expected a non-empty array of rows")
    rows = [_floats(r, f"{path}[{i}]", cols) for i, r in enumerate(v)]
    if len({len(r) for r in rows}) != 1:
        raise InputError(f"{path}: rows differ in length")
    return np.array(rows)


def body_from_dict(d, path, dim):
    if not isinstance(d, dict):
        raise InputError(f"{path}: expected an object")
    kind = d.get("type")
    common = ("transform", "open")
    try:
        if kind == "ball":
            _check_keys(d, path, ("type", "center", "radius"), common)
            shape = Ball(_floats(d["center"], f"{path}.center", dim), _float(d["radius"], f"{path}.radius"))
        elif kind == "ellipsoid":
            _check_keys(d, path, ("type", "center", "semi_axes"), common + ("orientation",))
            R = _matrix(d["orientation"], f"{path}.orientation", dim) if "orientation" in d else None
            shape = Ellipsoid(_floats(d["center"], f"{path}.center", dim),
                              _floats(d["semi_axes"], f"{path}.semi_axes", dim), R)
        elif kind == "hpolytope":
            _check_keys(d, path, ("type", "normals", "offsets"), common)
            N = _matrix(d["normals"], f"{path}.normals", dim)
            shape = HPolytope(N, _floats(d["offsets"], f"{path}.offsets", len(N)))
        else:
            raise InputError(f"{path}.type: expected 'ball', 'ellipsoid' or 'hpolytope', got {kind!r}")
        t = None
        if "transform" in d:
            td = d["transform"]
            tp = f"{path}.transform"
            _check_keys(td, tp, (), ("translation", "homothety_center", "homothety_ratio"))
            t = Transform(_floats(td.get("translation", [0.0] * dim), f"{tp}.translation", dim),
                          _floats(td.get("homothety_center", [0.0] * dim), f"{tp}.homothety_center", dim),
                          _float(td.get("homothety_ratio", 1.0), f"{tp}.homothety_ratio"))
        op = d.get("open", False)
        if not isinstance(op, bool):
            raise InputError(f"{path}.open: expected true or false")
        return Body(shape, t, op)
    except InputError as e:
        msg = str(e)
        if msg.startswith(path):
            raise
        raise InputError(f"{path}: {msg}") from None


def scene_from_dict(d):
    _check_keys(d, "$", ("schema_version", "space", "point", "mode", "bodies"), ("metadata",))
    if d["schema_version"] != SCHEMA_VERSION:
        raise InputError(f"$.schema_version: unsupported version {d['schema_version']!r}")
    sp = d["space"]
    _check_keys(sp, "$.space", ("kind", "dim"))
    kind = sp["kind"]
    if kind not in FIELDS:
        raise InputError(f"$.space.kind: expected one of {FIELDS}, got {kind!r}")
    n = sp["dim"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InputError("$.space.dim: expected a positive integer")
    real_dim = n * {"real": 1, "complex": 2, "quaternion": 4}[kind]
    mode = d["mode"]
    if mode not in MODES:
        raise InputError(f"$.mode: expected one of {MODES}, got {mode!r}")
    point = _floats(d["point"], "$.point", real_dim)
    if not isinstance(d["bodies"], list):
        raise InputError("$.bodies: expected an array")
    bodies = [body_from_dict(b, f"$.bodies[{i}]", real_dim) for i, b in enumerate(d["bodies"])]
    meta = d.get("metadata", {})
    if not isinstance(meta, dict):
        raise InputError("$.metadata: expected an object")
    for k in meta:
        if k not in ("name", "seed", "params", "sphere", "notes", "margin", "certified"):
            raise InputError(f"$.metadata.{k}: unknown field")
    return Scene(kind, n, point, bodies, mode, meta)


def parse_scene(text):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"line {e.lineno} column {e.colno}: {e.msg}") from None
    return scene_from_dict(d)


def load_scene(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise InputError(f"cannot read scene {path}: {e.strerror}") from None
    try:
        return parse_scene(text)
    except InputError as e:
        raise InputError(f"{path}: {e}") from None


def save_scene(scene, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit_scene(scene))


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def make_report(verdict, scene, seed, delta_used=None, timings_ms=None, extra=None):
    """ReportFile dict; ``witness`` is present iff the verdict is uncovered."""
    rep = {"verdict": verdict.kind, "seed": int(seed), "tool_version": TOOL_VERSION,
           "scene_digest": scene_digest(scene), "delta_used": delta_used,
           "timings_ms": timings_ms or {}}
    if verdict.kind == "covered":
        rep["slack"] = min(float(verdict.slack), math.pi)
    elif verdict.kind == "uncovered":
        rep["miss_margin"] = min(float(verdict.miss_margin), math.pi)
        rep["witness"] = _vec(verdict.witness)
    else:
        rep["finest_delta"] = float(verdict.finest_delta)
    if extra:
        rep.update(_jsonable(extra))
    return rep


def report_text(rep):
    return dumps(_jsonable(rep))


def strip_timings(rep):
    return {k: v for k, v in rep.items() if k != "timings_ms"}


def parse_angle(text):
    """Radians from ``"0.1"`` or ``"5deg"``."""
    s = str(text).strip()
    try:
        if s.endswith("deg"):
            return math.radians(float(s[:-3]))
        return float(s)
    except ValueError:
        raise InputError(f"bad angle {text!r}: use radians or a 'deg' suffix") from None
