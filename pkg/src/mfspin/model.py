"""
Weyl-ordered polynomials in the three rescaled spin components.

A polynomial is stored as a list of monomials ``coeff * m_x^a m_y^b m_z^c``.
As a quantum operator each monomial stands for the average over all
distinct orderings of its letters; as a classical function (the symbol)
it is simply evaluated commutatively.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
import numpy as np

from .errors import ConfigError, NonOrthogonal, UnknownModel

Degrees = tuple[int, int, int]

_ZERO_TOL = 0.0


def _normalize(terms) -> tuple[tuple[float, Degrees], ...]:
    acc: dict[Degrees, float] = defaultdict(float)
    for coeff, degs in terms:
        degs = tuple(int(d) for d in degs)
        if len(degs) != 3 or min(degs) < 0:
            raise ConfigError(f"invalid multidegree {degs!r}")
        acc[degs] += float(coeff)
    out = [(c, d) for d, c in acc.items() if abs(c) > _ZERO_TOL]
    out.sort(key=lambda t: (sum(t[1]), t[1]))
    return tuple(out)


@dataclass(frozen=True)
class NcPolynomial:
    """Real linear combination of Weyl-symmetrized monomials.

    ``terms`` is a tuple of ``(coefficient, (a, b, c))`` with unique
    multidegrees and non-zero coefficients.
    """

    terms: tuple[tuple[float, Degrees], ...]

    def __init__(self, terms=()):
        object.__setattr__(self, "terms", _normalize(terms))

    @property
    def degree(self) -> int:
        return max((sum(d) for _, d in self.terms), default=0)

    def __call__(self, m):
        return eval_classical(self, m)

    def __add__(self, other: NcPolynomial) -> NcPolynomial:
        return NcPolynomial(self.terms + other.terms)

    def __sub__(self, other: NcPolynomial) -> NcPolynomial:
        return self + other.scale(-1.0)

    def scale(self, factor: float) -> NcPolynomial:
        return NcPolynomial([(factor * c, d) for c, d in self.terms])

    def as_dict(self) -> dict[Degrees, float]:
        return {d: c for c, d in self.terms}

    def to_list(self) -> list[list[float]]:
        """``[[coeff, a, b, c], ...]`` as used in model files."""
        return [[c, *d] for c, d in self.terms]

    @classmethod
    def from_list(cls, rows) -> NcPolynomial:
        try:
            return cls([(r[0], (r[1], r[2], r[3])) for r in rows])
        except (TypeError, IndexError, ValueError) as exc:
            raise ConfigError(f"terms must be [[coeff, a, b, c], ...]: {exc}") from None

    def __repr__(self):
        if not self.terms:
            return "NcPolynomial(0)"
        parts = []
        for c, (a, b, cc) in self.terms:
            mono = "*".join(
                f"m{ax}^{p}" if p > 1 else f"m{ax}"
                for ax, p in zip("xyz", (a, b, cc))
                if p
            )
            parts.append(f"{c:+g}" + (f"*{mono}" if mono else ""))
        return "NcPolynomial(" + " ".join(parts) + ")"


def _as_points(m):
    m = np.asarray(m, dtype=float)
    if m.shape[-1] != 3:
        raise ValueError("points must have a trailing axis of length 3")
    return m


def eval_classical(P: NcPolynomial, m):
    """Commutative evaluation; ``m`` has shape ``(..., 3)``."""
    m = _as_points(m)
    out = np.zeros(m.shape[:-1])
    for c, (a, b, cc) in P.terms:
        out = out + c * m[..., 0] ** a * m[..., 1] ** b * m[..., 2] ** cc
    return out if out.ndim else float(out)


def _dpow(x, p, k):
    """k-th derivative of x**p."""
    if k > p:
        return np.zeros_like(x)
    f = 1.0
    for i in range(k):
        f *= p - i
    return f * x ** (p - k)


def grad(P: NcPolynomial, m):
    """Analytic gradient, shape ``(..., 3)``."""
    m = _as_points(m)
    x, y, z = m[..., 0], m[..., 1], m[..., 2]
    g = np.zeros(m.shape)
    for c, (a, b, cc) in P.terms:
        g[..., 0] += c * _dpow(x, a, 1) * y**b * z**cc
        g[..., 1] += c * x**a * _dpow(y, b, 1) * z**cc
        g[..., 2] += c * x**a * y**b * _dpow(z, cc, 1)
    return g


def hessian(P: NcPolynomial, m):
    """Analytic Hessian, shape ``(..., 3, 3)``, exactly symmetric."""
    m = _as_points(m)
    cols = (m[..., 0], m[..., 1], m[..., 2])
    H = np.zeros(m.shape + (3,))
    for c, degs in P.terms:
        for i in range(3):
            for j in range(i, 3):
                orders = [0, 0, 0]
                orders[i] += 1
                orders[j] += 1
                val = c * np.ones(m.shape[:-1])
                for ax in range(3):
                    val = val * _dpow(cols[ax], degs[ax], orders[ax])
                H[..., i, j] += val
                if i != j:
                    H[..., j, i] += val
    return H


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict[Degrees, float] = defaultdict(float)
    for dp, cp in p.items():
        for dq, cq in q.items():
            out[(dp[0] + dq[0], dp[1] + dq[1], dp[2] + dq[2])] += cp * cq
    return out


def _poly_pow(p: dict, n: int) -> dict:
    out = {(0, 0, 0): 1.0}
    for _ in range(n):
        out = _poly_mul(out, p)
    return out


def rotate(P: NcPolynomial, R) -> NcPolynomial:
    """Return the polynomial ``m -> P(R^T m)``.

    Symmetrization commutes with linear substitution, so expanding the
    commutative product of linear forms yields the rotated Weyl polynomial.
    """
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or np.max(np.abs(R.T @ R - np.eye(3))) > 1e-12:
        raise NonOrthogonal("rotation matrix must satisfy R^T R = 1 within 1e-12")
    unit = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    # (R^T m)_i = sum_j R[j, i] m_j
    lin = [{unit[j]: R[j, i] for j in range(3) if R[j, i] != 0.0} for i in range(3)]
    acc: dict[Degrees, float] = defaultdict(float)
    for c, (a, b, cc) in P.terms:
        prod = _poly_mul(_poly_mul(_poly_pow(lin[0], a), _poly_pow(lin[1], b)), _poly_pow(lin[2], cc))
        for d, v in prod.items():
            acc[d] += c * v
    scale = max((abs(c) for c, _ in P.terms), default=1.0)
    return NcPolynomial([(v, d) for d, v in acc.items() if abs(v) > 1e-15 * scale])


def rotation_to_z(v) -> np.ndarray:
    """An orthogonal matrix (det +1) mapping the unit vector along ``v`` to z."""
    v = np.asarray(v, dtype=float)
    e = v / np.linalg.norm(v)
    helper = np.array([1.0, 0.0, 0.0]) if abs(e[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    x = helper - (helper @ e) * e
    x /= np.linalg.norm(x)
    y = np.cross(e, x)
    return np.vstack([x, y, e])


# -- built-in models ---------------------------------------------------------

def curie_weiss(gamma: float) -> NcPolynomial:
    """P(m) = -m_x^2 - gamma m_z."""
    return NcPolynomial([(-1.0, (2, 0, 0)), (-gamma, (0, 0, 1))])


def lmg(alpha: float, beta_c: float, gamma: float) -> NcPolynomial:
    """P(m) = -alpha m_y^2 - beta_c m_z^2 - gamma m_x."""
    return NcPolynomial([(-alpha, (0, 2, 0)), (-beta_c, (0, 0, 2)), (-gamma, (1, 0, 0))])


def pspin(p: int, beta_c: float, gamma: float) -> NcPolynomial:
    """P(m) = -beta_c m_z^p - gamma m_x."""
    if int(p) != p or p < 1:
        raise ConfigError("pspin requires an integer p >= 1")
    return NcPolynomial([(-beta_c, (0, 0, int(p))), (-gamma, (1, 0, 0))])


def field(lam: float) -> NcPolynomial:
    """P(m) = -lambda m_z."""
    return NcPolynomial([(-lam, (0, 0, 1))])


BUILTINS = {
    "curie_weiss": (curie_weiss, ("gamma",)),
    "lmg": (lmg, ("alpha", "beta_c", "gamma")),
    "pspin": (pspin, ("p", "beta_c", "gamma")),
    "field": (field, ("lambda",)),
}


def builtin(name: str, params: dict | None = None) -> NcPolynomial:
    """Construct a named model from a parameter mapping."""
    params = dict(params or {})
    if name not in BUILTINS:
        raise UnknownModel(f"unknown model {name!r}; choose from {sorted(BUILTINS)}")
    fn, keys = BUILTINS[name]
    missing = [k for k in keys if k not in params]
    if missing:
        raise ConfigError(f"model {name!r} needs parameters {missing}")
    return fn(*(params[k] for k in keys))
