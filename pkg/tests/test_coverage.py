import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowlab.capmin import cap_family_min, cap_margins
from shadowlab.coverage import (Cap, CoverageProblem, SearchBudget, circle_min_margin, cover_certify,
                                cover_circle_exact, falsify, verify_witness)
from shadowlab.directions import (DirectionSpace, ball_cline_region, ball_hyperplane_region, ball_line_region,
                                  build_net, chord_angle, estimate_net_size, region_for, sample_directions)
from shadowlab.errors import InputError, ResourceError
from shadowlab.geometry import AlgebraStructure, Ball, HPolytope, cline_margin, hyperplane_margin, line_margin


def unit_rows(rng, n, d):
    U = rng.standard_normal((n, d))
    return U / np.linalg.norm(U, axis=1, keepdims=True)


def circle_problem(rng, count, antipodal=True):
    th = rng.uniform(0, 2 * np.pi, count)
    half = rng.uniform(0.05, 1.2, count)
    caps = [Cap(np.array([math.cos(t), math.sin(t)]), h, antipodal) for t, h in zip(th, half)]
    return CoverageProblem(DirectionSpace("real-sphere", 2, antipodal), caps)


# --- direction spaces and nets ------------------------------------------------


def test_space_dimension_checks():
    with pytest.raises(InputError):
        DirectionSpace("complex-projective", 5)
    with pytest.raises(InputError):
        DirectionSpace("real-sphere", 1)
    with pytest.raises(InputError):
        DirectionSpace.for_mode("cline", 4, "real")


@pytest.mark.parametrize("dim,quotient,delta", [(2, True, 0.05), (3, True, 0.2), (3, False, 0.15), (4, True, 0.5)])
def test_net_covering_radius_holds_on_samples(dim, quotient, delta):
    space = DirectionSpace("real-sphere", dim, quotient)
    net = build_net(space, delta)
    assert net.resolution <= delta + 1e-12
    U = unit_rows(np.random.default_rng(1), 5000, dim)
    ang = np.arccos(np.clip(np.abs(U @ net.points.T) if quotient else U @ net.points.T, -1, 1))
    assert np.max(np.min(ang, axis=1)) <= net.resolution + 1e-9


def test_net_size_estimate_refuses_huge_nets():
    space = DirectionSpace("real-sphere", 8, True)
    assert estimate_net_size(space, 1e-3) > 1e12
    with pytest.raises(ResourceError):
        build_net(space, 1e-3)


def test_chord_angle_quotient():
    a = np.array([[1.0, 0.0]])
    b = np.array([[0.0, 1.0]])
    assert chord_angle(a, b)[0] == pytest.approx(math.pi / 2)


# --- region margins sign-match geometric predicates ---------------------------


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_line_and_ray_caps_match_ball_predicate(seed):
    rng = np.random.default_rng(seed)
    ball = Ball(rng.standard_normal(3) * 2, rng.uniform(0.1, 1.0))
    x = rng.standard_normal(3)
    if np.linalg.norm(x - ball.center) <= ball.radius + 1e-6:
        return
    U = unit_rows(rng, 400, 3)
    line = ball_line_region(x, ball)
    ray = ball_line_region(x, ball, antipodal=False)
    for u in U:
        ml = line_margin(x, u, ball)
        if abs(ml) > 1e-9:
            assert (line.margin(u[None])[0] > 0) == (ml < 0)
        s = max(u @ (ball.center - x), 0.0)
        mr = np.linalg.norm(ball.center - x - s * u) - ball.radius
        if abs(mr) > 1e-9:
            assert (ray.margin(u[None])[0] > 0) == (mr < 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_band_matches_hyperplane_predicate(seed):
    rng = np.random.default_rng(seed)
    ball = Ball(rng.standard_normal(3) * 2, rng.uniform(0.1, 1.0))
    x = rng.standard_normal(3)
    if np.linalg.norm(x - ball.center) <= ball.radius:
        return
    band = ball_hyperplane_region(x, ball)
    for u in unit_rows(rng, 400, 3):
        m = hyperplane_margin(x, u, ball)
        if abs(m) > 1e-9:
            assert (band.margin(u[None])[0] >= 0) == (m <= 0)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["complex", "quaternion"]))
def test_fs_cap_matches_cline_predicate(seed, kind):
    rng = np.random.default_rng(seed)
    s = AlgebraStructure(kind, 2)
    ball = Ball(rng.standard_normal(s.real_dim) * 2, rng.uniform(0.1, 1.5))
    x = rng.standard_normal(s.real_dim) * 0.3
    if np.linalg.norm(x - ball.center) <= ball.radius:
        return
    fs = ball_cline_region(x, ball, s)
    for v in unit_rows(rng, 300, s.real_dim):
        m = cline_margin(x, v, ball, s)
        if abs(m) > 1e-9:
            assert (fs.margin(v[None])[0] >= 0) == (m <= 0)


def test_fs_margin_is_invariant_under_scalars():
    s = AlgebraStructure("quaternion", 2)
    rng = np.random.default_rng(5)
    fs = ball_cline_region(np.zeros(8), Ball(rng.standard_normal(8) * 3, 0.7), s)
    v = unit_rows(rng, 1, 8)[0]
    base = fs.margin(v[None])[0]
    for M in s.maps:
        assert fs.margin((M @ v)[None])[0] == pytest.approx(base)


def test_margin_field_is_lipschitz():
    rng = np.random.default_rng(2)
    cube = HPolytope.cube(3, half=0.5, center=np.array([2.0, 0.3, 0.0]))
    reg = region_for(np.zeros(3), cube, "line")
    U = unit_rows(rng, 300, 3)
    V = U + 1e-3 * rng.standard_normal(U.shape)
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    dm = np.abs(reg.margin(U) - reg.margin(V)) / reg.lipschitz
    ang = np.arccos(np.clip(np.sum(U * V, axis=1), -1, 1))
    assert np.all(dm <= ang + 1e-9)


def test_query_point_inside_body_covers_everything():
    prob = CoverageProblem(DirectionSpace("real-sphere", 3), [region_for(np.zeros(3), Ball(np.zeros(3), 1), "line")])
    assert cover_certify(prob).kind == "covered"
    assert falsify(prob) is None


# --- exact sweep vs certified engine -----------------------------------------


def test_exact_sweep_two_perpendicular_caps():
    caps = [Cap(np.array([1.0, 0.0]), math.pi / 4 + 0.1), Cap(np.array([0.0, 1.0]), math.pi / 4 + 0.1)]
    prob = CoverageProblem(DirectionSpace("real-sphere", 2), caps)
    v = cover_circle_exact(prob)
    assert v.kind == "covered"
    assert v.slack == pytest.approx(0.1)


def test_exact_sweep_gap_witness():
    caps = [Cap(np.array([1.0, 0.0]), math.pi / 4 - 0.1), Cap(np.array([0.0, 1.0]), math.pi / 4 - 0.1)]
    prob = CoverageProblem(DirectionSpace("real-sphere", 2), caps)
    v = cover_circle_exact(prob)
    assert v.kind == "uncovered"
    assert v.miss_margin == pytest.approx(0.1)
    assert prob.margin(v.witness[None])[0] == pytest.approx(-0.1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.integers(1, 6), st.booleans())
def test_exact_sweep_min_margin_matches_dense_grid(seed, count, antipodal):
    prob = circle_problem(np.random.default_rng(seed), count, antipodal)
    th = np.linspace(0, 2 * np.pi, 200_001)
    dense = prob.margin(np.c_[np.cos(th), np.sin(th)]).min()
    assert circle_min_margin(prob)[0] == pytest.approx(dense, abs=1e-4)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000), st.integers(1, 6))
def test_certified_engine_never_contradicts_exact_sweep(seed, count):
    prob = circle_problem(np.random.default_rng(seed), count)
    exact = cover_circle_exact(prob)
    cert = cover_certify(prob, delta_min=1e-3, seed=seed)
    if cert.kind != "inconclusive":
        assert cert.kind == exact.kind
    if cert.kind == "covered":
        assert cert.slack <= exact.slack + 1e-9


def test_certified_cover_on_s2():
    # six caps of angle > arctan(2) around the icosahedron axes cover RP^2
    phi = (1 + 5 ** 0.5) / 2
    A = np.array([[0, 1, phi], [0, -1, phi], [1, phi, 0], [-1, phi, 0], [phi, 0, 1], [-phi, 0, 1]], float)
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    caps = [Cap(a, 0.66) for a in A]
    prob = CoverageProblem(DirectionSpace("real-sphere", 3), caps)
    v = cover_certify(prob, delta_min=1e-3)
    assert v.kind == "covered" and v.slack > 0
    exact, _ = cap_family_min(A, np.full(6, 0.66))
    assert v.slack <= exact + 1e-9


def test_resource_limit_raises():
    # axis caps just past arccos(1/sqrt(6)) cover RP^5 with slack ~0.01
    half = math.acos(1 / math.sqrt(6)) + 0.01
    prob = CoverageProblem(DirectionSpace("real-sphere", 6), [Cap(a, half) for a in np.eye(6)])
    with pytest.raises(ResourceError):
        cover_certify(prob, delta_start=1.0, delta_min=1e-4, max_cells=1000)


def test_bad_delta_is_input_error():
    prob = circle_problem(np.random.default_rng(0), 2)
    with pytest.raises(InputError):
        cover_certify(prob, delta_start=0.01, delta_min=0.1)


# --- falsifier ----------------------------------------------------------------


def test_falsifier_finds_certified_gap():
    caps = [Cap(np.eye(3)[0], 0.5), Cap(np.eye(3)[1], 0.5)]
    prob = CoverageProblem(DirectionSpace("real-sphere", 3), caps)
    w, miss = falsify(prob, SearchBudget(seed=1))
    assert miss > 0.5
    assert verify_witness(prob, w)
    # the best miss is the z axis: pi/2 - 0.5
    assert miss == pytest.approx(math.pi / 2 - 0.5, abs=1e-6)


def test_falsifier_gives_up_on_covered_family():
    phi = (1 + 5 ** 0.5) / 2
    A = np.array([[0, 1, phi], [0, -1, phi], [1, phi, 0], [-1, phi, 0], [phi, 0, 1], [-phi, 0, 1]], float)
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    prob = CoverageProblem(DirectionSpace("real-sphere", 3), [Cap(a, 0.66) for a in A])
    assert falsify(prob, SearchBudget(sample_count=20_000)) is None


def test_falsifier_is_seeded():
    prob = CoverageProblem(DirectionSpace("real-sphere", 4), [Cap(np.eye(4)[0], 0.3)])
    a = falsify(prob, SearchBudget(seed=7, sample_count=5000))
    b = falsify(prob, SearchBudget(seed=7, sample_count=5000))
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]


# --- exact cap minimum --------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000), st.integers(1, 5), st.booleans())
def test_cap_family_min_is_a_lower_bound_of_samples(seed, count, antipodal):
    rng = np.random.default_rng(seed)
    A = unit_rows(rng, count, 3)
    h = rng.uniform(0.1, 1.2, count)
    best, where = cap_family_min(A, h, antipodal)
    U = unit_rows(rng, 50_000, 3)
    sampled = cap_margins(U, A, h, antipodal).min()
    assert best <= sampled + 1e-9
    assert best == pytest.approx(sampled, abs=0.03)
    assert cap_margins(where, A, h, antipodal)[0] == pytest.approx(best)


def test_sample_directions_are_unit():
    U = sample_directions(DirectionSpace("real-sphere", 5), np.random.default_rng(0), 100)
    assert np.allclose(np.linalg.norm(U, axis=1), 1)
