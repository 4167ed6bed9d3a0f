import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from mfspin.errors import ConfigError, NonOrthogonal, UnknownModel
from mfspin.model import (
    NcPolynomial, builtin, curie_weiss, eval_classical, field, grad, hessian, lmg, pspin, rotate, rotation_to_z,
)
from oracles import finite_difference_grad, random_rotation

terms_st = st.lists(
    st.tuples(st.floats(-3, 3, allow_nan=False),
              st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3))),
    min_size=1, max_size=6,
)
ball_point = arrays(float, 3, elements=st.floats(-0.57, 0.57))


def test_eval_examples():
    assert eval_classical(curie_weiss(3), [0, 0, 1]) == -3
    assert eval_classical(NcPolynomial([(1, (1, 1, 0))]), [1, 1, 0]) == 1
    assert eval_classical(pspin(3, 1, 0), [0, 0, -1]) == 1


def test_normalization_merges_and_drops():
    P = NcPolynomial([(1.0, (1, 0, 0)), (2.0, (1, 0, 0)), (0.0, (0, 1, 0)), (1.0, (0, 0, 2)), (-1.0, (0, 0, 2))])
    assert P.terms == ((3.0, (1, 0, 0)),)
    assert P.degree == 1


def test_cw_gradient_and_hessian():
    m = np.array([0.3, -0.2, 0.5])
    np.testing.assert_allclose(grad(curie_weiss(2.5), m), [-0.6, 0.0, -2.5])
    np.testing.assert_allclose(hessian(curie_weiss(2.5), m), np.diag([-2.0, 0, 0]))
    Pz2 = NcPolynomial([(1, (0, 0, 2))])
    np.testing.assert_allclose(grad(Pz2, [0, 0, 1]), [0, 0, 2])
    np.testing.assert_allclose(hessian(Pz2, [0, 0, 1]), np.diag([0, 0, 2.0]))


@given(terms_st, ball_point)
def test_derivatives_match_finite_differences(terms, m):
    P = NcPolynomial(terms)
    f = lambda x: eval_classical(P, x)  # noqa: E731
    g_fd = finite_difference_grad(f, m)
    scale = 1 + np.max(np.abs(g_fd))
    assert np.max(np.abs(grad(P, m) - g_fd)) <= 1e-6 * scale
    H = hessian(P, m)
    assert np.array_equal(H, H.T)
    H_fd = np.array([finite_difference_grad(lambda x: grad(P, x)[i], m) for i in range(3)])
    assert np.max(np.abs(H - H_fd)) <= 1e-6 * (1 + np.max(np.abs(H_fd)))


def test_derivatives_random_points():
    rng = np.random.default_rng(3)
    P = lmg(0.7, 1.3, 0.4) + NcPolynomial([(0.5, (1, 1, 2)), (-0.2, (0, 3, 1))])
    for _ in range(100):
        v = rng.normal(size=3)
        m = v / np.linalg.norm(v) * rng.uniform() ** (1 / 3)
        g_fd = finite_difference_grad(P, m)
        assert np.linalg.norm(grad(P, m) - g_fd) <= 1e-6 * (1 + np.linalg.norm(g_fd))


@given(terms_st, terms_st, ball_point)
def test_linearity(t1, t2, m):
    P, Q = NcPolynomial(t1), NcPolynomial(t2)
    assert eval_classical(P + Q, m) == pytest.approx(eval_classical(P, m) + eval_classical(Q, m), abs=1e-12)


def test_rotate_identity_and_linear():
    P = curie_weiss(3)
    assert rotate(P, np.eye(3)) == P
    R = np.array([[0, 0, 1], [0, 1, 0], [-1, 0, 0]], dtype=float)  # R z = x
    np.testing.assert_allclose(R @ [0, 0, 1], [1, 0, 0])
    assert rotate(NcPolynomial([(1, (0, 0, 1))]), R) == NcPolynomial([(1, (1, 0, 0))])


@given(terms_st, st.integers(0, 2**31), ball_point)
def test_rotate_covariance(terms, seed, m):
    P = NcPolynomial(terms)
    R = random_rotation(np.random.default_rng(seed))
    assert eval_classical(rotate(P, R), R @ m) == pytest.approx(eval_classical(P, m), abs=1e-10)


def test_rotate_preserves_sphere_range():
    rng = np.random.default_rng(0)
    P = lmg(0.5, 1.0, 0.7)
    Pr = rotate(P, random_rotation(rng))
    v = rng.normal(size=(10_000, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    assert abs(eval_classical(P, v).min() - eval_classical(Pr, v).min()) < 5e-3


def test_rotate_rejects_non_orthogonal():
    with pytest.raises(NonOrthogonal):
        rotate(curie_weiss(1), np.diag([1.0, 1.0, 1.0 + 1e-9]))


def test_rotation_to_z():
    rng = np.random.default_rng(1)
    for _ in range(20):
        v = rng.normal(size=3)
        R = rotation_to_z(v)
        np.testing.assert_allclose(R @ (v / np.linalg.norm(v)), [0, 0, 1], atol=1e-14)
        assert np.linalg.det(R) == pytest.approx(1.0)


def test_builtins():
    assert curie_weiss(3).as_dict() == {(2, 0, 0): -1.0, (0, 0, 1): -3.0}
    assert builtin("field", {"lambda": 2.0}) == field(2.0)
    rng = np.random.default_rng(2)
    pts = rng.uniform(-1, 1, size=(50, 3))
    np.testing.assert_allclose(eval_classical(pspin(2, 1, 0.8), pts), eval_classical(lmg(0, 1, 0.8), pts))
    # lmg(0, 1, g) is curie_weiss with the roles of x and z exchanged
    swap = pts[:, ::-1]
    np.testing.assert_allclose(eval_classical(lmg(0, 1, 0.8), pts), eval_classical(curie_weiss(0.8), swap))
    with pytest.raises(UnknownModel):
        builtin("ising", {})
    with pytest.raises(ConfigError):
        builtin("lmg", {"alpha": 1})
    with pytest.raises(ConfigError):
        pspin(2.5, 1, 1)


def test_list_round_trip():
    P = lmg(0.5, 1.0, 0.7)
    assert NcPolynomial.from_list(P.to_list()) == P
    with pytest.raises(ConfigError):
        NcPolynomial.from_list([[1.0, 2]])
