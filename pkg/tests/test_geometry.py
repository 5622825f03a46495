import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hocl.geometry import (BALL_EPS, conformal_factor, embed_input, exp_map, exp_map_origin, exp_map_rows,
                           hyperbolic_distance, mobius_add, pairwise_distances, project_to_ball, riemannian_grad)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def ball_points(d=3, radius=0.95):
    def to_ball(v):
        n = np.linalg.norm(v)
        return v if n < radius else v * (radius / n)
    return arrays(np.float64, d, elements=st.floats(-1.0, 1.0)).map(to_ball)


def test_distance_origin_to_self():
    assert hyperbolic_distance([0.0, 0.0], [0.0, 0.0]) == 0.0


def test_distance_from_origin_is_log3():
    assert hyperbolic_distance([0.0, 0.0], [0.5, 0.0]) == pytest.approx(math.log(3.0), abs=1e-12)


@pytest.mark.parametrize("radius", [1e-8, 0.1, 0.5, 0.9, 0.999])
def test_distance_from_origin_matches_artanh(radius):
    x = np.array([radius, 0.0, 0.0])
    assert hyperbolic_distance(np.zeros(3), x) == pytest.approx(2.0 * math.atanh(radius), rel=1e-12, abs=1e-12)


@given(ball_points(), ball_points())
def test_distance_symmetric(x, y):
    assert hyperbolic_distance(x, y) == hyperbolic_distance(y, x)


@given(ball_points(), ball_points(), ball_points())
def test_triangle_inequality(x, y, z):
    assert hyperbolic_distance(x, z) <= hyperbolic_distance(x, y) + hyperbolic_distance(y, z) + 1e-9


@given(ball_points(), ball_points())
def test_hyperbolic_dominates_euclidean(x, y):
    assert hyperbolic_distance(x, y) >= np.linalg.norm(x - y) - 1e-12


def test_pairwise_matches_scalar():
    rng = np.random.default_rng(3)
    pts = project_to_ball(rng.normal(scale=0.4, size=(12, 3)))
    D = pairwise_distances(pts)
    ref = np.array([[hyperbolic_distance(a, b) for b in pts] for a in pts])
    np.testing.assert_allclose(D, ref, rtol=1e-9, atol=1e-12)
    assert np.all(np.diag(D) == 0.0)
    np.testing.assert_array_equal(D, D.T)


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        hyperbolic_distance([0.0, 0.0], [0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        exp_map([0.0, 0.0], [1.0, 0.0, 0.0])


def test_exp_origin_zero():
    np.testing.assert_array_equal(exp_map(np.zeros(3), np.zeros(3)), np.zeros(3))


def test_exp_origin_unit_axis():
    out = exp_map(np.zeros(3), np.array([1.0, 0.0, 0.0]))
    np.testing.assert_allclose(out, [math.tanh(1.0), 0.0, 0.0], atol=1e-15)
    assert out[0] == pytest.approx(0.7615941559557649)


def test_exp_at_origin_agrees_with_closed_form():
    rng = np.random.default_rng(0)
    for v in rng.normal(size=(20, 4)):
        np.testing.assert_allclose(exp_map(np.zeros(4), v), exp_map_origin(v), atol=1e-15)


@settings(max_examples=200)
@given(ball_points(), arrays(np.float64, 3, elements=st.floats(-10.0, 10.0)))
def test_exp_map_stays_in_ball(x, v):
    assert np.linalg.norm(exp_map(x, v)) < 1.0


@given(ball_points(), arrays(np.float64, 3, elements=finite))
def test_exp_map_fuzz_large_tangents(x, v):
    assert np.linalg.norm(exp_map(x, v)) <= 1.0 - BALL_EPS + 1e-15


def test_exp_map_geodesic_length():
    # |v|_x = lambda_x |v| is the geodesic length travelled
    x = np.array([0.3, -0.2])
    v = np.array([0.1, 0.25])
    y = exp_map(x, v)
    assert hyperbolic_distance(x, y) == pytest.approx(conformal_factor(x) * np.linalg.norm(v), rel=1e-10)


def test_exp_map_rows_matches_rowwise():
    rng = np.random.default_rng(1)
    Z = project_to_ball(rng.normal(scale=0.3, size=(10, 3)))
    V = rng.normal(scale=2.0, size=(10, 3))
    V[3] = 0.0
    ref = np.stack([exp_map(z, v) for z, v in zip(Z, V)])
    np.testing.assert_allclose(exp_map_rows(Z, V), ref, atol=1e-14)


def test_mobius_add_identity():
    x = np.array([0.2, 0.4])
    np.testing.assert_allclose(mobius_add(x, np.zeros(2)), x)
    np.testing.assert_allclose(mobius_add(np.zeros(2), x), x)
    np.testing.assert_allclose(mobius_add(x, -x), np.zeros(2), atol=1e-15)


def test_riemannian_grad_origin_quarter():
    g = np.array([1.0, -2.0, 4.0])
    np.testing.assert_allclose(riemannian_grad(np.zeros(3), g), g / 4.0)


def test_riemannian_grad_zero():
    np.testing.assert_array_equal(riemannian_grad(np.array([0.5, 0.1]), np.zeros(2)), np.zeros(2))


def test_riemannian_grad_vanishes_near_boundary():
    scales = [np.linalg.norm(riemannian_grad(np.array([r, 0.0]), np.array([1.0, 0.0]))) for r in (0.9, 0.99, 0.9999)]
    assert scales[0] > scales[1] > scales[2]
    assert scales[2] < 1e-7


@given(ball_points(), arrays(np.float64, 3, elements=st.floats(-1.0, 1.0)))
def test_small_riemannian_step_moves_little(x, g):
    y = exp_map(x, -1e-8 * riemannian_grad(x, g))
    assert np.linalg.norm(y - x) <= 1e-6


def test_project_interior_unchanged():
    np.testing.assert_array_equal(project_to_ball(np.array([0.1, 0.1])), [0.1, 0.1])


def test_project_outside_rescaled():
    np.testing.assert_allclose(project_to_ball(np.array([3.0, 4.0])), np.array([0.6, 0.8]) * (1.0 - 1e-5), rtol=1e-15)


def test_project_zero():
    np.testing.assert_array_equal(project_to_ball(np.zeros(2)), np.zeros(2))


def test_project_rejects_nan():
    with pytest.raises(ValueError):
        project_to_ball(np.array([np.nan, 0.0]))


def test_embed_zero_features():
    np.testing.assert_array_equal(embed_input(np.zeros(3), np.eye(3)), np.zeros(3))


def test_embed_identity_unit_norm():
    f = np.array([0.6, 0.0, 0.8])
    assert np.linalg.norm(embed_input(f, np.eye(3))) == pytest.approx(math.tanh(1.0), rel=1e-14)


@given(arrays(np.float64, (2, 4), elements=finite), arrays(np.float64, 4, elements=finite))
def test_embed_inside_ball(P, f):
    assert np.linalg.norm(embed_input(f, P)) < 1.0


def test_embed_shape_mismatch():
    with pytest.raises(ValueError):
        embed_input(np.zeros(3), np.eye(4))
