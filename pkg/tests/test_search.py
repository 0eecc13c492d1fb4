import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import check_grad

from shadowlab.capmin import cap_family_min
from shadowlab.constructions import config_arrays, load_config, min_pairwise_gap
from shadowlab.errors import InputError, SearchFailedError
from shadowlab.search import (ConfigSearchParams, VertexSet, pair_gaps, run_search, search_config,
                              smooth_objective, vertex_margin)


def unit_rows(rng, n, d):
    U = rng.standard_normal((n, d))
    return U / np.linalg.norm(U, axis=1, keepdims=True)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000), st.integers(2, 3), st.integers(2, 6), st.booleans())
def test_vertex_margin_sign_agrees_with_exact_cap_minimum(seed, m, K, antipodal):
    rng = np.random.default_rng(seed)
    C = unit_rows(rng, K, m)
    r = rng.uniform(0.3, 0.99, K)
    vm, _ = vertex_margin(C, r, antipodal)
    exact, _ = cap_family_min(C, np.arcsin(r), antipodal)
    if abs(exact) > 1e-7:
        assert (vm > 0) == (exact > 0)


def test_vertex_margin_of_axis_family():
    # caps of angle a around the m axes: P is the cube of half-side 1/cos a
    m, a = 3, 1.0
    vm, v = vertex_margin(np.eye(m), np.full(m, math.sin(a)))
    assert vm == pytest.approx(1 - m * math.cos(a) ** 2)
    assert np.allclose(np.abs(v), math.cos(a))


def test_vertex_margin_unbounded_cases():
    assert vertex_margin(np.eye(3)[:2], [0.9, 0.9])[0] == -1.0
    # rays: all axes in one half-space leave the opposite side uncovered
    C = np.array([[1.0, 0.0], [0.6, 0.8], [0.6, -0.8]])
    assert vertex_margin(C, [0.99, 0.99, 0.99], antipodal=False)[0] == -1.0


def test_vertex_set_counts():
    assert len(VertexSet(4, 3, True)) == 4 * 4
    assert len(VertexSet(4, 3, False)) == 4
    assert len(VertexSet(2, 3, True)) == 0


@pytest.mark.parametrize("m,K", [(2, 3), (3, 4), (3, 5)])
def test_smooth_objective_gradient(m, K):
    rng = np.random.default_rng(m * 10 + K)
    vs = VertexSet(K, m, True)
    z = np.concatenate([rng.standard_normal(K * m), rng.uniform(0.3, 1.2, K)])

    def f(z):
        return smooth_objective(z, K, m, vs, 30.0, 1e-3)[0]

    def g(z):
        return smooth_objective(z, K, m, vs, 30.0, 1e-3)[1]

    scale = np.linalg.norm(g(z)) + 1.0
    assert check_grad(f, g, z, epsilon=1e-7) / scale < 1e-4


def test_pair_gaps():
    C = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert pair_gaps(C, np.array([0.2, 0.3]))[0] == pytest.approx(math.sqrt(2) - 0.5)


def test_params_validation():
    with pytest.raises(InputError):
        ConfigSearchParams(1, 2)
    with pytest.raises(InputError):
        ConfigSearchParams(3, 4, mode="hyperplane")
    with pytest.raises(InputError):
        ConfigSearchParams(3, 4, starts=0)


def test_two_disks_found_and_one_fails():
    sc, slack = search_config(ConfigSearchParams(2, 2, starts=8))
    assert slack > 0
    assert min_pairwise_gap(sc.bodies)[1]
    assert sc.metadata["certified"]
    with pytest.raises(SearchFailedError) as err:
        search_config(ConfigSearchParams(2, 1, starts=4))
    assert err.value.witness is not None
    assert err.value.candidate is not None


def test_search_is_independent_of_worker_count():
    p1 = ConfigSearchParams(2, 3, starts=4, seed=3)
    p2 = ConfigSearchParams(2, 3, starts=4, seed=3, workers=2)
    a, b = run_search(p1), run_search(p2)
    assert np.array_equal(a.centers, b.centers)
    assert np.array_equal(a.radii, b.radii)


@pytest.mark.parametrize("m", [2, 3])
def test_shipped_configs_are_certified(m):
    sc = load_config(m, m + 1)
    assert sc.metadata["certified"]
    C, r = config_arrays(sc)
    assert C.shape == (m + 1, m)
    assert np.all(r < 1)
    assert min_pairwise_gap(sc.bodies)[1]
    assert vertex_margin(C, r)[0] > 0
    exact, _ = cap_family_min(C, np.arcsin(r))
    assert exact > 0


@pytest.mark.parametrize("m", [4, 5, 9])
def test_shipped_higher_configs_are_flagged_uncertified(m):
    sc = load_config(m, m + 1)
    assert sc is not None
    assert sc.metadata["certified"] is False
