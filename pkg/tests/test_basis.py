import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from siacdg.basis import (
    NodalBasis,
    RuleKind,
    barycentric_weights,
    diff_matrix,
    gl_rule,
    lagrange_matrix,
    lgl_rule,
)


def test_lgl_p1_endpoints():
    rule = lgl_rule(1)
    assert rule.kind is RuleKind.LGL
    np.testing.assert_allclose(rule.nodes, [-1, 1], atol=1e-15)
    np.testing.assert_allclose(rule.weights, [1, 1], atol=1e-15)


def test_lgl_p2_nodes_weights():
    rule = lgl_rule(2)
    np.testing.assert_allclose(rule.nodes, [-1, 0, 1], atol=1e-15)
    np.testing.assert_allclose(rule.weights, [1 / 3, 4 / 3, 1 / 3], atol=1e-15)
    # cross-check by integrating even monomials
    assert rule.integrate(rule.nodes**2) == pytest.approx(2 / 3, abs=1e-15)


def test_lgl_p5_weight_sum():
    assert abs(lgl_rule(5).weights.sum() - 2) < 1e-14


@pytest.mark.parametrize("p", range(1, 21))
def test_lgl_exact_degree(p):
    rule = lgl_rule(p)
    assert np.all(np.diff(rule.nodes) > 0)
    assert np.all(rule.weights > 0)
    assert rule.nodes[0] == -1.0 and rule.nodes[-1] == 1.0
    for k in range(2 * p):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert rule.integrate(rule.nodes**k) == pytest.approx(exact, abs=1e-13)


def test_lgl_not_exact_beyond_2p_minus_1():
    rule = lgl_rule(3)
    assert abs(rule.integrate(rule.nodes**6) - 2 / 7) > 1e-3


@pytest.mark.parametrize("p", [0, 21])
def test_lgl_range(p):
    with pytest.raises(ValueError):
        lgl_rule(p)


def test_gl_small_rules():
    one = gl_rule(1)
    assert one.kind is RuleKind.GL
    np.testing.assert_allclose(one.nodes, [0.0])
    np.testing.assert_allclose(one.weights, [2.0])
    two = gl_rule(2)
    np.testing.assert_allclose(two.nodes, [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-15)
    np.testing.assert_allclose(two.weights, [1, 1], atol=1e-15)
    assert two.integrate(two.nodes**2) == pytest.approx(2 / 3, abs=1e-15)


@pytest.mark.parametrize("n", [0, 41])
def test_gl_range(n):
    with pytest.raises(ValueError):
        gl_rule(n)


@pytest.mark.parametrize("n", [3, 17, 40])
def test_gl_exact_degree(n):
    rule = gl_rule(n)
    assert rule.weights.sum() == pytest.approx(2.0, abs=1e-13)
    k = 2 * n - 2
    assert rule.integrate(rule.nodes**k) == pytest.approx(2.0 / (k + 1), rel=1e-12)


def test_diff_matrix_p1():
    np.testing.assert_allclose(diff_matrix(lgl_rule(1)), [[-0.5, 0.5], [-0.5, 0.5]], atol=1e-15)


def test_diff_matrix_duplicate_nodes():
    with pytest.raises(ValueError):
        diff_matrix(np.array([0.0, 0.5, 0.5]))


@pytest.mark.parametrize("p", range(1, 9))
def test_sbp_and_constants(p):
    b = NodalBasis(p)
    np.testing.assert_allclose(b.D @ np.ones(b.n), 0.0, atol=1e-13)
    np.testing.assert_allclose(b.M @ b.D + b.D.T @ b.M, b.B, atol=1e-13)


def test_boundary_matrix():
    B = NodalBasis(3).B
    np.testing.assert_array_equal(np.diag(B), [-1, 0, 0, 1])


@pytest.mark.parametrize("p", [2, 5, 8])
def test_diff_of_monomials(p):
    b = NodalBasis(p)
    x = b.nodes
    for k in range(1, p + 1):
        np.testing.assert_allclose(b.D @ x**k, k * x ** (k - 1), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 10), st.floats(-1, 1))
def test_lagrange_reproduces_polynomials(p, x):
    b = NodalBasis(p)
    coef = np.arange(1, p + 2, dtype=float)
    poly = np.polynomial.Polynomial(coef)
    L = lagrange_matrix(b.nodes, np.array([x]))
    assert L.shape == (1, p + 1)
    assert float((L @ poly(b.nodes))[0]) == pytest.approx(poly(x), abs=1e-11)


def test_lagrange_at_nodes_is_identity():
    nodes = lgl_rule(4).nodes
    np.testing.assert_allclose(lagrange_matrix(nodes, nodes), np.eye(5), atol=1e-15)


def test_barycentric_two_points():
    np.testing.assert_allclose(barycentric_weights(np.array([-1.0, 1.0])), [-0.5, 0.5])


def test_min_spacing():
    assert NodalBasis(2).min_spacing == pytest.approx(1.0)


@pytest.mark.parametrize("offset", [0.0, 5e-324, 2.2250738585072014e-308, 1e-17, -1e-16])
def test_lagrange_points_within_roundoff_of_a_node(offset):
    nodes = lgl_rule(6).nodes
    L = lagrange_matrix(nodes, np.array([nodes[3] + offset]))
    assert np.all(np.isfinite(L))
    np.testing.assert_allclose(L[0], np.eye(7)[3], atol=1e-15)
