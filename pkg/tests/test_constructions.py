import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowlab.constructions import (config_scene, construct_remark1, construct_remark3, construct_remark4_escape,
                                     construct_theorem1, construct_theorem2, construct_theorem3, construct_theorem4,
                                     embed_in_field, hull_contains_sphere, min_pairwise_gap, random_interior_point,
                                     random_sphere_family, remark3_radius, theorem2_disks, verify_scene)
from shadowlab.coverage import SearchBudget, cover_circle_exact, coverage_margin, falsify
from shadowlab.errors import ConstructionError, InputError
from shadowlab.geometry import Ball, Ellipsoid, HPolytope, ray_margin, resolve


# --- three disks in the plane ------------------------------------------------


def test_theorem2_centres_on_unit_circle_and_touching_before_shrink():
    C, r = theorem2_disks(0.05, 0.0)
    assert np.allclose(np.linalg.norm(C, axis=1), 1)
    for i, j in [(0, 1), (1, 2), (0, 2)]:
        assert np.linalg.norm(C[i] - C[j]) == pytest.approx(r[i] + r[j])
    assert np.all(r < 1)


def test_theorem2_shrink_gives_gap():
    sc = construct_theorem2(0.05, 1e-3)
    gap, disjoint = min_pairwise_gap(sc.bodies)
    assert disjoint and gap == pytest.approx(2e-3)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 0.15), st.floats(1e-4, 5e-3))
def test_theorem2_family_covers_centre(eps, eps_prime):
    sc = construct_theorem2(eps, eps_prime)
    assert cover_circle_exact(sc.problem()).kind == "covered"


def test_theorem2_rejects_radius_past_circumradius():
    with pytest.raises(InputError):
        theorem2_disks(0.19, 1e-3)


def test_theorem2_rejects_bad_eps():
    with pytest.raises(InputError):
        theorem2_disks(-0.1, 0.0)
    with pytest.raises(InputError):
        theorem2_disks(0.05, 2.0)


# --- translated copies -------------------------------------------------------


@pytest.mark.parametrize("body,n", [
    (Ball(np.zeros(2), 1.0), 2),
    (Ball(np.zeros(3), 1.0), 3),
    (HPolytope.cube(3), 3),
    (Ellipsoid(np.zeros(3), np.array([2.0, 1.0, 1.0]), np.eye(3)), 3),
])
def test_theorem1_families(body, n):
    sc, trace = construct_theorem1(body)
    assert len(sc.bodies) == n
    gap, disjoint = min_pairwise_gap(sc.bodies)
    assert disjoint and gap > 0
    v = verify_scene(sc, delta_min=1e-2)
    assert v.kind == "covered" and v.slack > 0
    assert len(trace.normals) == n
    assert 0 < trace.r2 < trace.r1
    assert trace.coefficients == pytest.approx([(trace.r2 / trace.r1) ** i for i in range(1, n)])
    # every copy is a homothetic copy of the input shape
    for b in sc.bodies:
        assert type(resolve(b)) is type(body)


def test_theorem1_recentres_when_o_outside():
    sc, trace = construct_theorem1(Ball(np.array([5.0, 0.0]), 1.0))
    assert trace.recentered
    assert verify_scene(sc).kind == "covered"


def test_theorem1_rejects_bad_parameters():
    with pytest.raises(InputError):
        construct_theorem1(Ball(np.zeros(2), 1.0), eta=-1.0)
    with pytest.raises(InputError):
        construct_theorem1(Ball(np.zeros(2), 1.0), shrink=1.5)


def test_theorem1_removing_one_body_uncovers():
    sc, _ = construct_theorem1(HPolytope.cube(3))
    for k in range(3):
        sub = sc.with_bodies([b for i, b in enumerate(sc.bodies) if i != k])
        found = falsify(sub.problem(), SearchBudget(seed=k))
        assert found is not None and found[1] > 1e-4


def test_trace_serialises():
    _, trace = construct_theorem1(Ball(np.zeros(2), 1.0))
    d = trace.as_dict()
    assert set(d) >= {"normals", "r1", "r2", "coefficients", "eta", "iterations"}
    assert d["iterations"] >= 1


@pytest.mark.parametrize("body,count", [
    (Ball(np.zeros(2), 1.0), 4),
    (HPolytope.cube(3), 6),
    (HPolytope.regular_simplex(3), 4),
    (HPolytope.regular_simplex(2), 3),
])
def test_theorem3_counts(body, count):
    sc, _ = construct_theorem3(body)
    assert sc.mode == "ray"
    assert len(sc.bodies) == count
    assert min_pairwise_gap(sc.bodies)[1]
    assert verify_scene(sc).kind == "covered"


# --- tetrahedron balls ---------------------------------------------------------


def test_remark1_balls_touch_pairwise():
    sc = construct_remark1()
    gap, disjoint = min_pairwise_gap(sc.bodies)
    assert gap == 0.0 and not disjoint


def test_remark1_centre_is_only_tangentially_covered():
    # the line to an edge midpoint grazes the two balls on that edge and the
    # two on the opposite edge, so the best margin is exactly zero
    sc = construct_remark1("center")
    pts = [resolve(b).center for b in sc.bodies]
    w = (pts[0] + pts[1]) / 2 - sc.point
    w /= np.linalg.norm(w)
    assert coverage_margin(sc.problem(), w) == pytest.approx(0.0, abs=1e-12)
    assert verify_scene(sc, delta_min=1e-3).kind == "inconclusive"
    assert falsify(sc.problem(), SearchBudget(seed=0)) is None


def test_remark1_open_balls_let_a_tangent_line_through():
    sc = construct_remark1(open_balls=True)
    w, miss = falsify(sc.problem())
    assert miss == 0.0
    # the line is tangent to the two balls touching at the query point
    for b in sc.bodies:
        c, r = resolve(b).center, resolve(b).radius
        d = np.linalg.norm(np.cross(c - sc.point, w))
        assert d >= r - 1e-9


# --- simplex balls and hyperplanes ---------------------------------------------


def test_remark3_gap_closed_form():
    sc = construct_remark3(3)
    gap, disjoint = min_pairwise_gap(sc.bodies)
    assert disjoint
    assert gap == pytest.approx(math.sqrt(8 / 3) - 4 / 3, abs=1e-9)
    assert remark3_radius(3) == pytest.approx(2 / 3)


def test_remark3_centre_and_hull():
    sc = construct_remark3(3)
    v = verify_scene(sc, delta_min=1e-2)
    assert v.kind == "covered"
    assert hull_contains_sphere(sc) >= 1.0


def test_remark3_needs_n_at_least_two():
    with pytest.raises(InputError):
        construct_remark3(1)


# --- escaping rays -------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 8))
def test_escape_ray_misses_every_ball(seed, count):
    rng = np.random.default_rng(seed)
    C, r = random_sphere_family(3, count, rng)
    x = random_interior_point(3, rng, avoid=(C, r))
    esc = construct_remark4_escape(config_scene(C, r, "fam"), x)
    for b, m in zip(C, esc.margins):
        pass
    for c, rad, m in zip(C, r, esc.margins):
        assert m > 0
        assert ray_margin(x, esc.direction, Ball(c, rad)) == pytest.approx(m)


def test_escape_rejects_point_inside_a_ball():
    C = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    sc = config_scene(C, np.array([0.5, 0.5]), "fam")
    with pytest.raises(InputError):
        construct_remark4_escape(sc, np.array([0.8, 0.0, 0.0]))


def test_random_family_is_disjoint_on_sphere():
    C, r = random_sphere_family(4, 6, np.random.default_rng(0))
    assert np.allclose(np.linalg.norm(C, axis=1), 1)
    assert min_pairwise_gap([Ball(c, q) for c, q in zip(C, r)])[1]


# --- field embeddings ----------------------------------------------------------


@pytest.mark.parametrize("kind,block", [("complex", 2), ("quaternion", 4)])
def test_embedding_sits_in_a_real_hyperplane(kind, block):
    m = 5 if kind == "complex" else 9
    C = np.random.default_rng(0).standard_normal((m + 1, m))
    E, n = embed_in_field(C, kind)
    assert n == 3
    assert E.shape == (m + 1, n * block)
    assert np.allclose(E[:, m:], 0)
    assert np.allclose(E[:, :m], C)


def test_theorem4_complex_two_from_certified_data():
    sc = construct_theorem4(2, "complex")
    assert sc.mode == "cline" and sc.field == "complex"
    assert len(sc.bodies) == 4
    assert sc.metadata["params"]["source_certified"]
    assert verify_scene(sc, delta_min=0.02).kind == "covered"


def test_theorem4_rejects_bad_input():
    with pytest.raises(InputError):
        construct_theorem4(1)
    with pytest.raises(InputError):
        construct_theorem4(3, "octonion")


def test_theorem4_missing_data_is_a_construction_error():
    with pytest.raises(ConstructionError):
        construct_theorem4(4, "quaternion")
