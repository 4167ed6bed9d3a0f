import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mfspin.classical_opt import minimize_on_ball, minimize_on_sphere
from mfspin.coherent import SphericalQuadrature, quantize
from mfspin.errors import DimensionOverflow, OutOfRange
from mfspin.model import NcPolynomial, curie_weiss, field, lmg, rotate
from mfspin.spinblocks import blocks, build_block
from mfspin.eigensolve import full_spectrum
from mfspin.thermo import (
    PressureResult, berezin_lieb, binary_entropy, exact_pressure, pressure_csv, pressure_scan, variational_pressure,
)

from oracles import dense_hamiltonian, random_rotation


@pytest.fixture(scope="module")
def cw_beta_one():
    return variational_pressure(curie_weiss(3), 1.0)


def test_entropy_examples():
    assert binary_entropy(0.0) == pytest.approx(math.log(2), abs=1e-15)
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == pytest.approx(-0.75 * math.log(0.75) - 0.25 * math.log(0.25), abs=1e-15)
    for bad in (-1e-9, 1.0 + 1e-9, float("nan")):
        with pytest.raises(OutOfRange):
            binary_entropy(bad)


@given(st.floats(0, 1))
def test_entropy_range(r):
    v = binary_entropy(r)
    assert -1e-15 <= v <= math.log(2) + 1e-15


def test_entropy_continuity_at_one():
    assert binary_entropy(1 - 1e-12) < 1e-10
    np.testing.assert_allclose(binary_entropy(np.array([0.0, 1.0])), [math.log(2), 0.0])


@pytest.mark.parametrize("N", [1, 2, 7, 30, 101])
def test_exact_pressure_field(N):
    lam, beta = 0.7, 1.3
    assert exact_pressure(field(lam), N, beta) == pytest.approx(math.log(2 * math.cosh(beta * lam)), abs=1e-10)


def test_exact_pressure_dense_oracle():
    P = curie_weiss(3)
    w = np.linalg.eigvalsh(dense_hamiltonian(P.terms, 8))
    for beta in (0.3, 1.0, 4.0):
        ref = (math.log(np.sum(np.exp(-beta * (w - w[0])))) - beta * w[0]) / 8
        assert exact_pressure(P, 8, beta) == pytest.approx(ref, abs=1e-10)


def test_exact_pressure_high_temperature():
    assert exact_pressure(curie_weiss(3), 20, 1e-9) == pytest.approx(math.log(2), abs=1e-7)


def test_exact_pressure_errors():
    with pytest.raises(DimensionOverflow):
        exact_pressure(field(1.0), 2001, 1.0)
    with pytest.raises(ValueError):
        exact_pressure(field(1.0), 5, 0.0)


def test_exact_pressure_lipschitz_in_beta():
    P, N = lmg(0.5, 1.0, 0.8), 14
    top = max(np.max(np.abs(full_spectrum(build_block(P, N, b.twice_j)))) for b, _ in blocks(N))
    betas = np.linspace(0.1, 5, 12)
    p = [exact_pressure(P, N, b) for b in betas]
    for i in range(len(betas)):
        for j in range(i + 1, len(betas)):
            assert p[i] >= p[j] - (betas[j] - betas[i]) * top / N - 1e-12


def test_variational_field():
    for lam, beta in ((1.0, 1.0), (0.4, 2.5), (2.0, 0.3)):
        res = variational_pressure(field(lam), beta)
        assert res.variational == pytest.approx(math.log(2 * math.cosh(beta * lam)), abs=1e-8)
        assert res.maximizer_r == pytest.approx(math.tanh(beta * lam), abs=1e-6)


def test_variational_low_temperature_slope():
    P = curie_weiss(3)
    res = variational_pressure(P, 50.0)
    assert res.variational / 50 == pytest.approx(-minimize_on_ball(P).global_value, abs=1e-3)


def test_variational_is_the_maximum(cw_beta_one):
    P = curie_weiss(3)
    assert 0 <= cw_beta_one.maximizer_r <= 1
    for r in np.linspace(0, 1, 33):
        v, _ = minimize_on_sphere(P, float(r))
        assert cw_beta_one.variational >= binary_entropy(float(r)) - v - 1e-9
    assert np.linalg.norm(cw_beta_one.inner_minimizer) == pytest.approx(cw_beta_one.maximizer_r, abs=1e-12)


def test_finite_size_discrepancy_shrinks(cw_beta_one):
    P = curie_weiss(3)
    d12 = abs(exact_pressure(P, 12, 1.0) - cw_beta_one.variational)
    d16 = abs(exact_pressure(P, 16, 1.0) - cw_beta_one.variational)
    assert d12 <= 0.25
    assert d16 < d12


def test_variational_rotation_invariance():
    rng = np.random.default_rng(11)
    P = lmg(0.6, 1.0, 0.9)
    base = variational_pressure(P, 1.5).variational
    for _ in range(2):
        assert variational_pressure(rotate(P, random_rotation(rng)), 1.5).variational == pytest.approx(base, abs=1e-8)


def test_pressure_scan_and_csv():
    res = pressure_scan(field(1.0), [0.5, 1.0], n_sites=6, grid=256)
    for r in res:
        assert r.exact == pytest.approx(math.log(2 * math.cosh(r.beta)), abs=1e-10)
        assert r.variational == pytest.approx(r.exact, abs=1e-8)
    rows = list(csv.reader(io.StringIO(pressure_csv(res))))
    assert rows[0] == ["beta", "variational", "exact", "maximizer_r"]
    assert len(rows) == 3 and float(rows[2][0]) == 1.0
    empty = pressure_csv([PressureResult(1.0, 0.0, 0.0, np.zeros(3))])
    assert empty.splitlines()[1].split(",")[2] == ""


def _random_quadratic(rng):
    terms = [(float(rng.normal()), d) for d in
             [(2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (0, 1, 1), (1, 0, 1), (1, 0, 0), (0, 1, 0), (0, 0, 1)]]
    return NcPolynomial(terms)


def test_berezin_lieb_constant():
    q = SphericalQuadrature.for_degree(20)
    A = quantize(2.0, 5, q)
    lo, tr, up = berezin_lieb(A, lambda u: np.full(len(u), 2.0), 0.7, q)
    expected = 11 * math.exp(-1.4)
    assert lo == pytest.approx(expected, rel=1e-10)
    assert tr == pytest.approx(expected, rel=1e-10)
    assert up == pytest.approx(expected, rel=1e-10)


def test_berezin_lieb_curie_weiss_strict():
    J = 20
    g = NcPolynomial([(-1.0, (2, 0, 0)), (-3.0, (0, 0, 1))])
    A = quantize(g, J, SphericalQuadrature.for_degree(4 * J + 2))
    lo, tr, up = berezin_lieb(A, g, 1.0, SphericalQuadrature.for_degree(120))
    assert lo < tr < up


def test_berezin_lieb_high_temperature():
    J = 5
    g = curie_weiss(3)
    A = quantize(g, J, SphericalQuadrature.for_degree(4 * J + 2))
    for x in berezin_lieb(A, g, 1e-10, SphericalQuadrature.for_degree(40)):
        assert x == pytest.approx(2 * J + 1, rel=1e-8)


def test_berezin_lieb_random_symbols():
    rng = np.random.default_rng(12)
    bad = []
    for _ in range(20):
        g = _random_quadratic(rng)
        for J in (5, 10, 20):
            A = quantize(g, J, SphericalQuadrature.for_degree(4 * J + 2))
            quad = SphericalQuadrature.for_degree(6 * J + 20)
            for beta in (0.1, 1.0, 5.0):
                lo, tr, up = berezin_lieb(A, g, beta, quad)
                if not (lo <= tr * (1 + 1e-10) and tr <= up * (1 + 1e-10)):
                    bad.append((J, beta, lo, tr, up))
    assert not bad
