import math

import numpy as np
import pytest

from onesided.errors import GeometryError
from onesided.simplex import (
    binomial_count,
    convex_envelope,
    fenchel_conjugate,
    make_grid,
    min_second_differences,
    simplex_point,
    splitting_at,
    tangent_second_difference,
    vertex,
)
from oracles import brute_conjugate, chord_envelope_1d, lattice, lp_envelope

# ex1 band at t = 1, where alpha = 3: 1/2 - 1/sqrt(14)
H1_AT_ONE = 0.2327387580875756


def test_simplex_point_rejects_bad_input():
    with pytest.raises(GeometryError):
        simplex_point([0.5, 0.6])
    with pytest.raises(GeometryError):
        simplex_point([1.2, -0.2])
    with pytest.raises(GeometryError):
        simplex_point([1.0])
    np.testing.assert_array_equal(vertex(1, 3), [0.0, 1.0, 0.0])


def test_grid_m2_dim2():
    g = make_grid(2, 2)
    np.testing.assert_allclose(g.points, [[0, 1], [0.5, 0.5], [1, 0]])


def test_grid_dim3_count_matches_enumeration():
    g = make_grid(3, 60)
    assert g.size == 1891 == binomial_count(3, 60)
    np.testing.assert_allclose(g.points, lattice(3, 60))


@pytest.mark.parametrize("dim, m", [(4, 10), (1, 10), (2, 1), (3, 1)])
def test_grid_rejects(dim, m):
    with pytest.raises(GeometryError):
        make_grid(dim, m)


def test_grid_vertices_and_ids():
    g = make_grid(3, 7)
    for i, nid in enumerate(g.vertex_ids):
        np.testing.assert_array_equal(g.points[nid], vertex(i, 3))
    for nid in range(g.size):
        assert g.node_id(g.ints[nid]) == nid
        assert g.node_of_point(g.points[nid]) == nid
    assert g.node_of_point([0.1, 0.2, 0.7]) == -1


def test_affine_is_its_own_envelope():
    g = make_grid(2, 100)
    f = 2 * g.points[:, 0] - 1
    env = convex_envelope(g, f)
    np.testing.assert_allclose(env.values, f, atol=1e-12)
    assert env.active.all()


def test_bump_envelope_is_zero():
    g = make_grid(2, 200)
    p = g.points[:, 0]
    env = convex_envelope(g, p * (1 - p))
    np.testing.assert_allclose(env.values, 0.0, atol=1e-12)
    assert len(env.facets) == 1


def test_concave_on_dim3_gives_p3():
    g = make_grid(3, 30)
    f = 1 - np.abs(g.points[:, 0] - g.points[:, 1])
    env = convex_envelope(g, f)
    np.testing.assert_allclose(env.values, g.points[:, 2], atol=1e-9)
    # LP oracle at a handful of nodes
    for nid in (0, 17, 200, 333, g.size - 1):
        assert abs(lp_envelope(g.points, f, g.points[nid]) - env.values[nid]) < 1e-9


def test_dim2_envelope_matches_chord_oracle():
    rng = np.random.default_rng(4)
    g = make_grid(2, 60)
    f = rng.normal(size=g.size)
    env = convex_envelope(g, f)
    np.testing.assert_allclose(env.values, chord_envelope_1d(g.points[:, 0], f), atol=1e-12)


def test_dim3_envelope_matches_lp_and_tiles():
    rng = np.random.default_rng(5)
    g = make_grid(3, 8)
    f = rng.normal(size=g.size)
    env = convex_envelope(g, f)
    oracle = np.array([lp_envelope(g.points, f, p) for p in g.points])
    np.testing.assert_allclose(env.values, oracle, atol=1e-9)
    # facets tile the simplex: areas in (p1, p2) sum to 1/2
    P = g.points[env.facets][:, :, :2]
    a, b = P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]
    area = 0.5 * np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
    assert area.min() > 0
    assert math.isclose(area.sum(), 0.5, abs_tol=1e-12)


def test_envelope_rejects_nonfinite():
    g = make_grid(2, 4)
    with pytest.raises(GeometryError):
        convex_envelope(g, [0, 1, np.nan, 0, 1])


def test_split_active_node_is_trivial():
    g = make_grid(2, 10)
    env = convex_envelope(g, g.points[:, 0] ** 2)
    rule = splitting_at(env, g.points[3])
    assert rule.size == 1
    np.testing.assert_allclose(rule.targets[0], g.points[3])


def test_split_reveal_envelope():
    g = make_grid(2, 400)
    p = g.points[:, 0]
    H = -np.abs(2 * p - 1) + (2 - p)
    rule = splitting_at(convex_envelope(g, H), [0.3, 0.7])
    # oracle: solve lam1 e1 + lam2 e2 = p
    lam = np.linalg.solve(np.eye(2), [0.3, 0.7])
    order = np.argsort(-rule.targets[:, 0])
    np.testing.assert_allclose(rule.targets[order], np.eye(2), atol=1e-12)
    np.testing.assert_allclose(rule.weights[order], lam, atol=1e-12)


def test_split_ex1_band_at_t1():
    g = make_grid(2, 4000)
    p = g.points[:, 0]
    H = -np.abs(2 * p - 1) + 3 * np.sqrt(p**2 + (1 - p) ** 2)
    rule = splitting_at(convex_envelope(g, H), [0.5, 0.5])
    lo, hi = sorted(rule.targets[:, 0])
    assert abs(lo - H1_AT_ONE) <= 1 / g.m
    assert abs(hi - (1 - H1_AT_ONE)) <= 1 / g.m
    np.testing.assert_allclose(rule.weights, [0.5, 0.5], atol=1e-12)


def test_split_outside_simplex():
    g = make_grid(2, 10)
    env = convex_envelope(g, g.points[:, 0] ** 2)
    with pytest.raises(GeometryError):
        splitting_at(env, [1.1, -0.1])


def test_conjugate_of_zero_and_affine():
    g = make_grid(2, 50)
    dual = fenchel_conjugate(g, np.zeros(g.size), 2.0, 8)
    Q = dual.points()
    np.testing.assert_allclose(dual.values.ravel(), Q.max(axis=1), atol=1e-15)
    c = np.array([0.3, -0.4])
    dual = fenchel_conjugate(g, g.points @ c, 2.0, 8)
    np.testing.assert_allclose(dual.values.ravel(), (Q - c).max(axis=1), atol=1e-12)


def test_conjugate_matches_brute_force():
    g = make_grid(2, 400)
    f = g.points[:, 0] * (1 - g.points[:, 0])
    dual = fenchel_conjugate(g, f, 2.0, 4)  # lattice step 1, so (1, 0) is a dual node
    i1, i0 = 3, 2
    assert dual.values[i1, i0] == pytest.approx(1.0, abs=1e-15)
    assert dual.values[i1, i0] == pytest.approx(brute_conjugate(g.points, f, np.array([1.0, 0.0])), abs=1e-15)
    # the concave bump attains 1/4 at (1/2, 1/2) when flipped
    flipped = fenchel_conjugate(g, -f, 2.0, 4)
    assert flipped.values[i0, i0] == pytest.approx(0.25, abs=1e-15)


def test_second_differences():
    g = make_grid(2, 37)
    p = g.points[:, 0]
    d = np.array([1, -1])
    assert tangent_second_difference(g, 3 * p - 1, 5, d) == pytest.approx(0.0, abs=1e-10)
    assert tangent_second_difference(g, p**2, 5, d) == pytest.approx(2.0, rel=1e-9)
    with pytest.raises(GeometryError):
        tangent_second_difference(g, p**2, 0, d)
    msd = min_second_differences(g, p**2)
    assert np.isnan(msd[0]) and np.isnan(msd[-1])
    np.testing.assert_allclose(msd[1:-1], 2.0, rtol=1e-8)


def test_envelope_flat_on_ex1_band():
    g = make_grid(2, 400)
    p = g.points[:, 0]
    H = -np.abs(2 * p - 1) + 3 * np.sqrt(p**2 + (1 - p) ** 2)
    env = convex_envelope(g, H)
    inside = np.flatnonzero((p > H1_AT_ONE + 2 / g.m) & (p < 1 - H1_AT_ONE - 2 / g.m))
    for node in inside[::10]:
        assert abs(tangent_second_difference(g, env.values, node, [1, -1])) <= 1e-8


def test_interpolation_dim3_exact_on_affine():
    g = make_grid(3, 9)
    c = np.array([0.2, -1.0, 0.5])
    rng = np.random.default_rng(0)
    P = rng.dirichlet(np.ones(3), size=50)
    np.testing.assert_allclose(g.interpolate(g.points @ c, P), P @ c, atol=1e-12)
