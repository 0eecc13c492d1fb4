import os
import subprocess
import sys

import numpy as np
import pytest

from shadowlab import _backend, get_backend, set_backend
from shadowlab.constructions import (config_scene, construct_remark3, construct_theorem1, construct_theorem3,
                                     construct_theorem4, random_sphere_family)
from shadowlab.coverage import cover_certify
from shadowlab.geometry import Ellipsoid, HPolytope, line_margins

pytestmark = pytest.mark.skipif(not _backend.HAVE_NUMBA, reason="numba not importable")


@pytest.fixture
def restore_backend():
    before = get_backend()
    yield
    set_backend(before)


def both(fn):
    out = {}
    for b in ("numpy", "numba"):
        set_backend(b)
        out[b] = fn()
    return out["numpy"], out["numba"]


def unit_rows(rng, n, d):
    U = rng.standard_normal((n, d))
    return U / np.linalg.norm(U, axis=1, keepdims=True)


@pytest.mark.parametrize("make", [
    lambda: config_scene(*random_sphere_family(3, 6, np.random.default_rng(0)), "fam"),
    lambda: construct_remark3(3),
    lambda: construct_theorem4(2, "complex"),
    lambda: construct_theorem3(HPolytope.cube(3))[0],
], ids=["caps", "bands", "fs-caps", "ray-caps"])
def test_region_margins_agree(make, restore_backend):
    sc = make()
    prob = sc.problem()
    U = unit_rows(np.random.default_rng(1), 4000, prob.space.dim)
    a, b = both(lambda: prob.margin(U))
    assert np.max(np.abs(a - b)) < 1e-12


@pytest.mark.parametrize("body", [
    Ellipsoid(np.array([3.0, 0.5, 0.0]), np.array([2.0, 1.0, 0.5]),
              np.linalg.qr(np.random.default_rng(2).standard_normal((3, 3)))[0]),
    HPolytope.cube(3),
    HPolytope.regular_simplex(3),
])
@pytest.mark.parametrize("ray", [False, True])
def test_line_margins_agree(body, ray, restore_backend):
    rng = np.random.default_rng(3)
    x = np.array([0.3, -2.5, 1.0])
    U = unit_rows(rng, 2000, 3)
    a, b = both(lambda: line_margins(x, U, body, ray=ray))
    assert np.max(np.abs(a - b)) < 1e-9


def test_certified_verdicts_agree(restore_backend):
    sc, _ = construct_theorem1(Ellipsoid(np.zeros(3), np.array([2.0, 1.0, 1.0]), np.eye(3)))
    a, b = both(lambda: cover_certify(sc.problem(), delta_start=0.2, delta_min=1e-2))
    assert a.kind == b.kind == "covered"
    assert a.slack == pytest.approx(b.slack, abs=1e-9)


def test_set_backend_validates(restore_backend):
    with pytest.raises(ValueError):
        set_backend("cuda")
    assert set_backend("numpy") in ("numpy", "numba")
    assert get_backend() == "numpy"


@pytest.mark.parametrize("env,expected", [("numpy", "numpy"), ("numba", "numba"), ("NUMPY", "numpy"),
                                          ("bogus", "numba")])
def test_environment_selects_backend(env, expected):
    code = "import shadowlab; print(shadowlab.get_backend())"
    out = subprocess.run([sys.executable, "-c", code], env={**os.environ, "SHADOWLAB_BACKEND": env},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected
