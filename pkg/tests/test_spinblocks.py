import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mfspin.errors import DimensionOverflow, ZeroDirection
from mfspin.model import NcPolynomial, curie_weiss, field, rotate
from mfspin.spinblocks import (
    BandedHermitian, BlockIndex, blocks, build_block, fluctuation_projector, multiplicity, quadratic_block,
    spin_matrices, spin_operators,
)
from oracles import dense_hamiltonian, random_rotation, spin_matrices_dense

poly_st = st.lists(
    st.tuples(st.floats(-2, 2, allow_nan=False),
              st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(0, 2))),
    min_size=1, max_size=5,
).map(NcPolynomial).filter(lambda P: P.degree >= 1)


def test_block_index_validation():
    assert BlockIndex(4, 2).dim == 3 and BlockIndex(5, 3).j == 1.5
    for n, tj in [(4, 3), (4, 6), (0, 0), (3, -1)]:
        with pytest.raises(ValueError):
            BlockIndex(n, tj)


def test_spin_half_is_pauli_over_two():
    Sx, Sy, Sz = (S.to_dense() for S in spin_matrices(1))
    np.testing.assert_allclose(Sx, [[0, 0.5], [0.5, 0]])
    np.testing.assert_allclose(Sy, [[0, -0.5j], [0.5j, 0]])
    np.testing.assert_allclose(Sz, [[0.5, 0], [0, -0.5]])


def test_spin_one_element():
    Sx = spin_operators(2)[0].toarray()
    assert Sx[0, 1] == pytest.approx(1 / math.sqrt(2))


@pytest.mark.parametrize("tj", [1, 2, 3, 8, 15])
def test_spin_matrices_against_ladder_construction(tj):
    for ours, ref in zip(spin_operators(tj), spin_matrices_dense(tj)):
        np.testing.assert_allclose(ours.toarray(), ref, atol=1e-13)
    Sx, Sy, Sz = (S.toarray() for S in spin_operators(tj))
    assert np.max(np.abs(Sx @ Sy - Sy @ Sx - 1j * Sz)) < 1e-12
    J = tj / 2
    casimir = Sx @ Sx + Sy @ Sy + Sz @ Sz
    np.testing.assert_allclose(casimir, J * (J + 1) * np.eye(tj + 1), atol=1e-12)


def test_sx_matrix_element_formula():
    tj = 7
    Sx = spin_operators(tj)[0].toarray()
    for k in range(tj):
        kp = k + 1
        assert Sx[k, kp].real == pytest.approx(math.sqrt((tj * max(k, kp) - k * kp) / 4))


def test_multiplicity_examples():
    assert [multiplicity(4, tj).exact for tj in (4, 2, 0)] == [1, 3, 2]
    assert multiplicity(2, 2).exact == 1
    m = multiplicity(64, 20)
    assert math.exp(m.log_value) == pytest.approx(m.exact, rel=1e-12)


def test_multiplicity_log_for_large_n():
    m = multiplicity(1000, 998)
    assert m.exact is None
    assert m.log_value == pytest.approx(math.log(999 / 1001 * math.comb(1001, 1000)), rel=1e-12)


@pytest.mark.parametrize("n", range(1, 21))
def test_dimension_sum(n):
    assert sum(m.exact * b.dim for b, m in blocks(n)) == 2**n


def test_blocks_enumeration():
    assert [b.twice_j for b, _ in blocks(3)] == [3, 1]
    assert [b.twice_j for b, _ in blocks(4)] == [4, 2, 0]
    for n in range(1, 12):
        assert len(blocks(n)) == n // 2 + 1


def test_field_block_is_diagonal():
    A = build_block(field(1.5), 10, 6)
    assert A.bandwidth == 1 and A.is_real
    np.testing.assert_allclose(np.diag(A.to_dense()), -3.0 * (3 - np.arange(7)))


def test_cw_two_sites_against_tensor_product():
    gamma = 0.8
    A = build_block(curie_weiss(gamma), 2, 2).to_dense()
    Sx, _, Sz = spin_matrices_dense(2)
    np.testing.assert_allclose(A, -(4 / 2) * Sx @ Sx - 2 * gamma * Sz, atol=1e-14)
    dense = np.linalg.eigvalsh(dense_hamiltonian(curie_weiss(gamma).terms, 2))
    assert set(np.round(np.linalg.eigvalsh(A), 10)) <= set(np.round(dense, 10))


def test_mixed_monomial_symmetrization():
    N, tj = 10, 6
    Sx, Sy, _ = (S.toarray() for S in spin_operators(tj))
    A = build_block(NcPolynomial([(1, (1, 1, 0))]), N, tj).to_dense()
    np.testing.assert_allclose(A, (2 / N) * (Sx @ Sy + Sy @ Sx), atol=1e-14)


def test_single_component_monomial_is_plain_power():
    N, tj = 9, 5
    Sz = spin_operators(tj)[2].toarray()
    A = build_block(NcPolynomial([(1, (0, 0, 3))]), N, tj).to_dense()
    np.testing.assert_allclose(A, N * (2 / N) ** 3 * np.linalg.matrix_power(Sz, 3), atol=1e-13)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 6, 8])
def test_tensor_product_oracle(n):
    P = NcPolynomial([(-1.0, (2, 0, 0)), (0.6, (0, 0, 1)), (0.5, (1, 1, 1)), (-0.3, (0, 2, 1)), (0.2, (1, 0, 0))])
    ref = np.linalg.eigvalsh(dense_hamiltonian(P.terms, n))
    got = []
    for b, m in blocks(n):
        got.extend(np.linalg.eigvalsh(build_block(P, n, b.twice_j).to_dense()).tolist() * m.exact)
    np.testing.assert_allclose(np.sort(got), ref, atol=1e-9)


@given(poly_st, st.integers(0, 6).map(lambda x: 2 * x))
def test_hermitian_and_banded(P, tj):
    A = build_block(P, 12, tj)
    assert A.hermiticity_error() <= 1e-12
    assert A.bandwidth <= P.degree
    D = A.to_dense()
    idx = np.arange(A.dim)
    assert np.all(D[np.abs(idx[:, None] - idx[None, :]) > P.degree] == 0)


def test_hermiticity_random_degree_four():
    rng = np.random.default_rng(4)
    for _ in range(50):
        terms = [(rng.normal(), tuple(int(x) for x in rng.multinomial(int(rng.integers(1, 5)), [1 / 3] * 3)))
                 for _ in range(4)]
        A = build_block(NcPolynomial(terms), 20, 14)
        assert A.hermiticity_error() <= 1e-12


def test_real_probe():
    assert build_block(curie_weiss(1.0), 10, 10).is_real
    assert not build_block(NcPolynomial([(1.0, (0, 1, 0))]), 10, 10).is_real
    assert build_block(NcPolynomial([(1.0, (0, 2, 0))]), 10, 10).is_real


def test_rotation_covariance_of_blocks():
    rng = np.random.default_rng(5)
    P = curie_weiss(3)
    Pr = rotate(P, random_rotation(rng))
    a = np.linalg.eigvalsh(build_block(P, 6, 6).to_dense())
    b = np.linalg.eigvalsh(build_block(Pr, 6, 6).to_dense())
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_dimension_overflow():
    with pytest.raises(DimensionOverflow):
        build_block(field(1), 100, 100, max_dim=50)


def test_csv_round_trip():
    A = build_block(NcPolynomial([(1.0, (1, 1, 0)), (0.3, (0, 1, 0))]), 8, 6)
    text = A.to_csv()
    assert text.startswith("# banded hermitian lower band; dim=7 bandwidth=2")
    B = BandedHermitian.from_csv(text)
    np.testing.assert_array_equal(A.to_dense(), B.to_dense())


def test_quadratic_block_field_is_exact():
    P = field(0.7)
    for tj in (10, 6):
        Q = quadratic_block(P, 10, tj, [0.2, 0.1, 0.9]).to_dense()
        np.testing.assert_allclose(Q, build_block(P, 10, tj).to_dense(), atol=1e-12)


def test_quadratic_block_cw_projected():
    N, gamma = 40, 3.0
    Q = quadratic_block(curie_weiss(gamma), N, N, [0, 0, 1], variant="projected").to_dense()
    Sx, _, Sz = (S.toarray() for S in spin_operators(N))
    ref = -gamma * N * np.eye(N + 1) + gamma * (N * np.eye(N + 1) - 2 * Sz) + (2 / N) * (-2) * Sx @ Sx
    np.testing.assert_allclose(Q, ref, atol=1e-10)


def test_quadratic_block_norm_error():
    N, K = 400, 10
    P = curie_weiss(3)
    Q = quadratic_block(P, N, N, [0, 0, 1]).to_dense()
    H = build_block(P, N, N).to_dense()
    V = fluctuation_projector(N, [0, 0, 1], K)
    assert np.linalg.norm((Q - H) @ V, 2) <= 0.1


def test_quadratic_block_zero_direction():
    with pytest.raises(ZeroDirection):
        quadratic_block(field(1), 4, 4, [0, 0, 0])


def test_fluctuation_power_scaling():
    """||P_K S_x^d P_K|| grows like (N K)^{d/2}; the ratio stays bounded as N grows."""
    K = 6
    for d in range(1, 5):
        ratios = []
        for N in (50, 100, 200, 400):
            Sx = spin_operators(N)[0].toarray()
            V = fluctuation_projector(N, [0, 0, 1], K)
            ratios.append(np.linalg.norm(V.conj().T @ np.linalg.matrix_power(Sx, d) @ V, 2) / (N * K) ** (d / 2))
        assert max(ratios) <= 1.5 * ratios[0] + 1e-12
