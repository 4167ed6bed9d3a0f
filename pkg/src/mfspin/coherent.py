"""
Bloch coherent states on C^{2J+1}.

``|Omega, J> = U(Omega)|J>`` with ``U = exp((theta/2)(e^{i phi} S_- - e^{-i phi} S_+))``.
Components are given in the S_z basis |J-k>, k = 0..2J, matching
:mod:`mfspin.spinblocks`.  Spins are passed as ``J`` (integer or half-integer).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.special import gammaln

from .errors import DegenerateDirections, QuadratureTooCoarse
from .model import NcPolynomial, eval_classical
from .spinblocks import BandedHermitian, build_block


def _twice(J) -> int:
    tj = round(2 * J)
    if tj < 0 or abs(2 * J - tj) > 1e-12:
        raise ValueError(f"J = {J!r} is not a non-negative half-integer")
    return int(tj)


def _log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def _log_pow(base: float, expo):
    """log(base**expo) with 0**0 = 1; returns -inf for 0**positive."""
    expo = np.asarray(expo, dtype=float)
    if base == 0.0:
        return np.where(expo == 0, 0.0, -np.inf)
    return expo * math.log(base)


@dataclass(frozen=True)
class SphereAngle:
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError("theta must lie in [0, pi]")
        object.__setattr__(self, "phi", self.phi % (2 * math.pi))

    @property
    def unit(self) -> np.ndarray:
        s = math.sin(self.theta)
        return np.array([s * math.cos(self.phi), s * math.sin(self.phi), math.cos(self.theta)])

    @classmethod
    def from_vector(cls, v) -> SphereAngle:
        v = np.asarray(v, dtype=float)
        v = v / np.linalg.norm(v)
        return cls(math.acos(max(-1.0, min(1.0, v[2]))), math.atan2(v[1], v[0]))


def _half_angles(omega: SphereAngle):
    return math.cos(omega.theta / 2), math.sin(omega.theta / 2)


def coherent_coefficients(J, omega: SphereAngle) -> np.ndarray:
    """Components <J-k|Omega, J>, k = 0..2J."""
    tj = _twice(J)
    c, s = _half_angles(omega)
    k = np.arange(tj + 1)
    logs = 0.5 * _log_binom(tj, k) + _log_pow(abs(c), tj - k) + _log_pow(abs(s), k)
    return np.exp(logs) * np.exp(1j * k * omega.phi)


def overlap(omega_p: SphereAngle, omega: SphereAngle, J) -> complex:
    """<Omega', J|Omega, J>."""
    tj = _twice(J)
    c, s = _half_angles(omega)
    cp, sp_ = _half_angles(omega_p)
    base = c * cp + np.exp(1j * (omega.phi - omega_p.phi)) * s * sp_
    return complex(base**tj) if tj else 1.0 + 0.0j


def spherical_angle(u, v) -> float:
    u = np.asarray(u, dtype=float) / np.linalg.norm(u)
    v = np.asarray(v, dtype=float) / np.linalg.norm(v)
    # atan2 form is accurate for nearly parallel and nearly antipodal pairs
    return math.atan2(np.linalg.norm(np.cross(u, v)), float(u @ v))


def rotated_overlap(J, k: int, k_p: int, omega: SphereAngle) -> complex:
    """<J-k'|U(Omega)|J-k> from the disentangled form of U.

    Each term of the sum carries the sign (-1)^m of the m-fold raising step.
    Index pairs with k + k' > 2J are reflected to (2J - k', 2J - k), which
    leaves the element unchanged and keeps the cosine power non-negative.
    """
    tj = _twice(J)
    if not (0 <= k <= tj and 0 <= k_p <= tj):
        raise ValueError("k and k' must lie in 0..2J")
    if k + k_p > tj:
        k, k_p = tj - k_p, tj - k
    c, s = _half_angles(omega)
    phase = complex(np.exp(1j * (k_p - k) * omega.phi))
    ms = range(max(0, k - k_p), k + 1)
    logs = [
        0.5 * (_log_binom(tj + m - k, m) + _log_binom(tj + m - k, k_p - k + m)
               + _log_binom(k, m) + _log_binom(k_p, k_p - k + m))
        + _log_pow(abs(c), tj - k - k_p) + _log_pow(abs(s), 2 * m + k_p - k)
        for m in ms
    ]
    largest = max(float(v) for v in logs)
    if largest <= 0.0:
        return sum((-1) ** m * math.exp(float(v)) for m, v in zip(ms, logs)) * phase
    # the alternating sum cancels; carry enough digits to absorb the largest term
    with mpmath.workdps(25 + int(largest / math.log(10.0)) + 1):
        half = mpmath.mpf(omega.theta) / 2
        cm, sm = mpmath.cos(half), mpmath.sin(half)
        acc = mpmath.mpf(0)
        for m in ms:
            p = k_p - k + m
            acc += (-1) ** m * mpmath.sqrt(
                mpmath.binomial(tj + m - k, m) * mpmath.binomial(tj + m - k, p)
                * mpmath.binomial(k, m) * mpmath.binomial(k_p, p)
            ) * cm ** (tj - k - k_p) * sm ** (2 * m + k_p - k)
        return float(acc) * phase


def rotated_overlap_bound(J, k: int, k_p: int, omega: SphereAngle) -> float:
    """Upper bound on |<J-k'|U(Omega)|J-k>| for k <= k'."""
    if k > k_p:
        raise ValueError("bound requires k <= k'")
    tj = _twice(J)
    c, s = _half_angles(omega)
    log_b = (0.5 * (_log_binom(tj, k) + _log_binom(tj, k_p)) + _log_pow(float(k_p), k)
             + _log_pow(abs(c), tj - k - k_p) + _log_pow(abs(s), k_p - k) + k * math.log1p(s * s))
    return float(np.exp(log_b))


def rotation_matrix(J, omega: SphereAngle, kmax: int | None = None) -> np.ndarray:
    """Columns k = 0..kmax of U(Omega) in the |J-k> basis."""
    tj = _twice(J)
    kmax = tj if kmax is None else kmax
    U = np.zeros((tj + 1, kmax + 1), dtype=complex)
    for k in range(kmax + 1):
        for kp in range(tj + 1):
            U[kp, k] = rotated_overlap(J, k, kp, omega)
    return U


def gram(J, K: int, directions) -> tuple[np.ndarray, float]:
    """Gram matrix of {|J-k; m_l>}, k <= K, and the Gershgorin radius."""
    tj = _twice(J)
    if not 0 <= K <= tj:
        raise ValueError("K must lie in 0..2J")
    dirs = [np.asarray(d, dtype=float) / np.linalg.norm(d) for d in directions]
    L = len(dirs)
    angles = [spherical_angle(dirs[a], dirs[b]) for a in range(L) for b in range(a + 1, L)]
    if any(a < 1e-10 for a in angles):
        raise DegenerateDirections("two directions coincide")
    cols = [rotation_matrix(J, SphereAngle.from_vector(d), K) for d in dirs]
    B = np.hstack(cols)
    G = B.conj().T @ B
    if L == 1:
        return G, 0.0
    half_cos = max(math.cos(a / 2) for a in angles)
    J_val = tj / 2
    pre = (L - 1) * (K + 1) * (4 * K * J_val) ** K
    if half_cos <= 0.0:
        R = 0.0 if J_val > 2 * K else (pre if J_val == 2 * K else math.inf)
    else:
        gamma = -math.log(half_cos)
        R = pre * math.exp(-(J_val - 2 * K) * gamma)
    return G, R


def chernoff_tail(J, theta: float, delta: float) -> tuple[float, float]:
    """Upper binomial tail of |<J-k|Omega>|^2 and its Chernoff bound."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    tj = _twice(J)
    p = math.sin(theta / 2) ** 2
    w = np.abs(coherent_coefficients(J, SphereAngle(theta))) ** 2
    cut = 2 * (1 + delta) * (tj / 2) * p
    k = np.arange(tj + 1)
    lhs = float(np.sum(w[k >= cut]))
    rhs = math.exp(-(delta**2 / (2 + delta)) * tj * p)
    return lhs, rhs


def lower_symbol(A: BandedHermitian | np.ndarray, omega: SphereAngle) -> float:
    """<Omega, J|A|Omega, J> with J read off the dimension of A."""
    M = A.to_sparse() if isinstance(A, BandedHermitian) else np.asarray(A)
    J = (M.shape[0] - 1) / 2
    v = coherent_coefficients(J, omega)
    return float(np.real(np.vdot(v, M @ v)))


# -- quadrature and quantization ----------------------------------------------

@dataclass
class SphericalQuadrature:
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    exact_degree: int

    @classmethod
    def gauss_product(cls, n_theta: int, n_phi: int) -> SphericalQuadrature:
        """Gauss-Legendre nodes in cos(theta) times an equispaced periodic grid in phi."""
        x, wx = np.polynomial.legendre.leggauss(n_theta)
        phi = 2 * np.pi * np.arange(n_phi) / n_phi
        th = np.arccos(x)
        T, F = np.meshgrid(th, phi, indexing="ij")
        W = np.outer(wx, np.full(n_phi, 2 * np.pi / n_phi))
        return cls(T.ravel(), F.ravel(), W.ravel(), min(2 * n_theta - 1, n_phi - 1))

    @classmethod
    def for_degree(cls, degree: int) -> SphericalQuadrature:
        return cls.gauss_product(degree // 2 + 1, degree + 1)

    @property
    def units(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.column_stack([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def coherent_matrix(J, quad: SphericalQuadrature) -> np.ndarray:
    """Rows are coherent vectors at every quadrature node, shape (nodes, 2J+1)."""
    tj = _twice(J)
    k = np.arange(tj + 1)
    c = np.cos(quad.theta / 2)[:, None]
    s = np.sin(quad.theta / 2)[:, None]
    with np.errstate(divide="ignore"):
        logs = (0.5 * _log_binom(tj, k)[None, :]
                + np.where(tj - k == 0, 0.0, (tj - k) * np.log(np.abs(c)))
                + np.where(k == 0, 0.0, k * np.log(np.abs(s))))
    return np.exp(logs) * np.exp(1j * np.outer(quad.phi, k))


def _symbol_values(f, units, N, J):
    if N is not None:
        pts = (2 * J / N) * units
        vals = N * (eval_classical(f, pts) if isinstance(f, NcPolynomial) else np.asarray(f(pts), dtype=float))
    else:
        vals = eval_classical(f, units) if isinstance(f, NcPolynomial) else f(units)
    return np.broadcast_to(np.asarray(vals, dtype=float), (len(units),))


def quantize(f, J, quad: SphericalQuadrature, N: int | None = None, degree: int | None = None) -> np.ndarray:
    """Dense (2J+1)/(4 pi) sum_nodes w g(Omega) |Omega><Omega|.

    ``f`` is an :class:`NcPolynomial`, a constant or a callable on unit
    vectors of shape ``(n, 3)``.  With ``N`` given the upper symbol is
    ``g(e) = N f((2J/N) e)``; otherwise ``g = f``.
    """
    tj = _twice(J)
    if tj + 1 > 512:
        raise ValueError("quantize is limited to 2J+1 <= 512")
    if degree is None:
        degree = f.degree if isinstance(f, NcPolynomial) else 0
    if quad.exact_degree < 2 * tj + degree:
        raise QuadratureTooCoarse(f"quadrature degree {quad.exact_degree} < {2 * tj + degree}")
    if not callable(f) and not isinstance(f, NcPolynomial):
        const = float(f)
        f = lambda u: np.full(len(u), const)  # noqa: E731
    g = _symbol_values(f, quad.units, N, tj / 2)
    V = coherent_matrix(tj / 2, quad)
    A = (tj + 1) / (4 * np.pi) * (V.T * (quad.weights * g)) @ V.conj()
    return 0.5 * (A + A.conj().T)


def duffield_gap(P: NcPolynomial, N: int, J, quad: SphericalQuadrature) -> float:
    """Operator-norm distance between H_J and the quantized symbol N P((2J/N) e)."""
    tj = _twice(J)
    H = build_block(P, N, tj).to_dense()
    Q = quantize(P, J, quad, N=N)
    return float(np.linalg.norm(H - Q, 2))
