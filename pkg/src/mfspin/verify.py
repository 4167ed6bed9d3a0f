"""
Self-checks run by ``mfspin verify``.

Each suite compares a library routine against an independent construction
(brute-force tensor products, dense diagonalization, closed forms) on small
inputs and returns a list of :class:`Check` results.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .classical_opt import minimize_on_ball, projected_hessian
from .coherent import SphereAngle, SphericalQuadrature, coherent_coefficients, overlap, quantize, chernoff_tail
from .eigensolve import assemble_spectrum, full_spectrum, lowest_eigenpairs
from .model import NcPolynomial, curie_weiss, field, lmg
from .semiclassic import ground_state_coefficients, oscillator, oscillator_spectrum
from .spinblocks import blocks, build_block, spin_operators
from .thermo import binary_entropy, exact_pressure


@dataclass
class Check:
    suite: str
    name: str
    passed: bool
    detail: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)


_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]]),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def tensor_spin(n_sites: int):
    """Total spin components on (C^2)^{otimes N}, built site by site."""
    eye = np.eye(2)
    out = []
    for s in _PAULI:
        total = np.zeros((2**n_sites, 2**n_sites), dtype=complex)
        for i in range(n_sites):
            factors = [s / 2 if j == i else eye for j in range(n_sites)]
            total += reduce(np.kron, factors)
        out.append(total)
    return out


def tensor_hamiltonian(P: NcPolynomial, n_sites: int) -> np.ndarray:
    """Dense N * Weyl(P)(2S/N) by explicit enumeration of distinct letter orderings."""
    S = tensor_spin(n_sites)
    dim = 2**n_sites
    H = np.zeros((dim, dim), dtype=complex)
    for coeff, (a, b, c) in P.terms:
        letters = [0] * a + [1] * b + [2] * c
        words = set(itertools.permutations(letters))
        acc = np.zeros((dim, dim), dtype=complex)
        for w in words:
            acc += reduce(np.matmul, [S[x] for x in w], np.eye(dim))
        d = a + b + c
        H += coeff * n_sites * (2.0 / n_sites) ** d * acc / len(words)
    return H


def _suite_spinblocks() -> list[Check]:
    checks = []
    for n in range(1, 21):
        total = sum(m.exact * b.dim for b, m in blocks(n))
        checks.append(Check("spinblocks", f"dimension sum N={n}", total == 2**n))
    P = NcPolynomial([(-1.0, (2, 0, 0)), (-0.7, (0, 0, 1)), (0.4, (1, 1, 1)), (0.3, (0, 2, 1))])
    for n in (3, 4, 6):
        ref = np.linalg.eigvalsh(tensor_hamiltonian(P, n))
        got = np.sort(np.concatenate([
            np.repeat(full_spectrum(build_block(P, n, b.twice_j)), m.exact) for b, m in blocks(n)
        ]))
        err = float(np.max(np.abs(ref - got)))
        checks.append(Check("spinblocks", f"tensor oracle N={n}", err < 1e-9, f"max error {err:.2e}"))
    for tj in (1, 4, 7):
        Sx, Sy, Sz = (S.toarray() for S in spin_operators(tj))
        comm = Sx @ Sy - Sy @ Sx - 1j * Sz
        checks.append(Check("spinblocks", f"[Sx,Sy]=iSz 2J={tj}", np.max(np.abs(comm)) < 1e-12))
    return checks


def _suite_eigensolve() -> list[Check]:
    checks = []
    A = build_block(lmg(0.5, 1.0, 0.7), 60, 60)
    dense = np.linalg.eigvalsh(A.to_dense())
    err = float(np.max(np.abs(lowest_eigenpairs(A, 5) - dense[:5])))
    checks.append(Check("eigensolve", "banded vs dense", err < 1e-9, f"max error {err:.2e}"))
    res = assemble_spectrum(field(1.0), 4, 10.0, threads=1)
    expected = np.array([-4.0, -2.0, -2.0, -2.0, -2.0])
    checks.append(Check("eigensolve", "field N=4 levels", np.allclose(res.expanded(5), expected, atol=1e-12)))
    return checks


def _suite_classical() -> list[Check]:
    checks = []
    rep = minimize_on_ball(curie_weiss(3.0))
    m = rep.minima[0].m0
    checks.append(Check("classical_opt", "CW gamma=3 minimum",
                        rep.is_unique and np.allclose(m, [0, 0, 1], atol=1e-8) and abs(rep.global_value + 3) < 1e-10))
    lo, hi, det = projected_hessian(curie_weiss(3.0), [0, 0, 1])
    checks.append(Check("classical_opt", "CW gamma=3 projected Hessian",
                        abs(lo - 1) < 1e-12 and abs(hi - 3) < 1e-12 and abs(det - 3) < 1e-12))
    rep = minimize_on_ball(curie_weiss(1.0))
    checks.append(Check("classical_opt", "CW gamma=1 two minima",
                        len(rep.minima) == 2 and abs(rep.global_value + 1.25) < 1e-10))
    return checks


def _suite_semiclassic() -> list[Check]:
    checks = []
    for w in (1.0, 1.5, 3.0):
        ev = oscillator_spectrum(oscillator(w, 200), 11)
        err = float(np.max(np.abs(ev - (2 * np.arange(11) + 1) * w)))
        checks.append(Check("semiclassic", f"oscillator omega={w}", err < 1e-6, f"max error {err:.2e}"))
    norm = float(np.sum(ground_state_coefficients(2.0, 400) ** 2))
    checks.append(Check("semiclassic", "ground state normalization", abs(norm - 1) < 1e-10))
    return checks


def _suite_coherent() -> list[Check]:
    checks = []
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        J = int(rng.integers(0, 60)) / 2
        a = SphereAngle(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
        b = SphereAngle(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
        ref = np.vdot(coherent_coefficients(J, b), coherent_coefficients(J, a))
        worst = max(worst, abs(ref - overlap(b, a, J)))
    checks.append(Check("coherent", "overlap vs inner product", worst < 1e-10, f"max error {worst:.2e}"))
    q = SphericalQuadrature.for_degree(40)
    err = float(np.max(np.abs(quantize(1.0, 10, q) - np.eye(21))))
    checks.append(Check("coherent", "resolution of unity J=10", err < 1e-10))
    lhs, rhs = chernoff_tail(100, math.pi / 4, 1.0)
    checks.append(Check("coherent", "Chernoff J=100", lhs <= rhs))
    return checks


def _suite_thermo() -> list[Check]:
    checks = [Check("thermo", "entropy endpoints",
                    abs(binary_entropy(0.0) - math.log(2)) < 1e-15 and binary_entropy(1.0) == 0.0)]
    ref = math.log(2 * math.cosh(1.0))
    err = abs(exact_pressure(field(1.0), 9, 1.0) - ref)
    checks.append(Check("thermo", "field exact pressure", err < 1e-10, f"error {err:.2e}"))
    H = tensor_hamiltonian(curie_weiss(3.0), 8)
    w = np.linalg.eigvalsh(H)
    brute = (math.log(np.sum(np.exp(-(w - w[0])))) - w[0]) / 8
    err = abs(exact_pressure(curie_weiss(3.0), 8, 1.0) - brute)
    checks.append(Check("thermo", "CW N=8 trace oracle", err < 1e-10, f"error {err:.2e}"))
    return checks


SUITES = {
    "spinblocks": _suite_spinblocks,
    "eigensolve": _suite_eigensolve,
    "classical_opt": _suite_classical,
    "semiclassic": _suite_semiclassic,
    "coherent": _suite_coherent,
    "thermo": _suite_thermo,
}


def run_all() -> list[Check]:
    out: list[Check] = []
    for suite in SUITES.values():
        out.extend(suite())
    return out
