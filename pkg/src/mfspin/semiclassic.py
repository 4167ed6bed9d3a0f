"""
Semiclassical predictions for the low-lying spectrum.

Around a surface minimum the block Hamiltonians reduce to a harmonic
oscillator ``omega^2 L_x^2 + L_y^2`` on l^2(N_0), where L_x, L_y are the
position and momentum operators written in the number basis.  This module
provides the ladder of predicted eigenvalues, the interior-minimum ground
energy, the oscillator truncations and the explicit eigenvectors.

The additive constant kappa of the quadratic approximation is taken to be
zero for polynomial symbols.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np
from scipy.special import gammaln

from .classical_opt import MinimumReport, OUTSIDE_THEOREM, tangent_eigenframe
from .eigensolve import SpectrumResult, lowest_eigenpairs
from .errors import NotInterior, OutsideTheorem
from .model import NcPolynomial, eval_classical, grad, hessian, rotate
from .spinblocks import build_block

DEGENERACY_RTOL = 1e-9


# -- ladder prediction --------------------------------------------------------

@dataclass
class MinimumData:
    l: int
    n_h: float
    grad_norm: float
    sqrt_det: float
    omega: float


@dataclass(frozen=True)
class LadderLevel:
    l: int
    k: int
    m: int
    energy: float


@dataclass
class LadderPrediction:
    n_sites: int
    minima: list[MinimumData]
    levels: list[LadderLevel]
    predicted_e0: float
    predicted_gap: float
    gap_to_next: float
    kappa_offset: float = 0.0
    degenerate: bool = False

    def to_dict(self, exact: SpectrumResult | None = None) -> dict:
        out = {
            "n": self.n_sites,
            "minima": [asdict(m) for m in self.minima],
            "levels": [asdict(lv) for lv in self.levels],
            "predicted_e0": self.predicted_e0,
            "predicted_gap": self.predicted_gap,
            "gap_to_next": self.gap_to_next,
            "degenerate": self.degenerate,
            "kappa_offset": self.kappa_offset,
        }
        if exact is not None:
            out["exact_vs_predicted"] = self.compare(exact)
        return out

    def compare(self, exact: SpectrumResult) -> list[dict]:
        """Pair each predicted level with the exact level of the same rank in block J = N/2 - k."""
        rows = []
        by_k: dict[int, list[LadderLevel]] = {}
        for lv in self.levels:
            by_k.setdefault(lv.k, []).append(lv)
        for k, group in sorted(by_k.items()):
            twice_j = self.n_sites - 2 * k
            block = exact.block_levels(twice_j)
            for rank, lv in enumerate(sorted(group, key=lambda v: (v.energy, v.l, v.m))):
                e_exact = float(block[rank]) if rank < len(block) else None
                rows.append({
                    "l": lv.l, "k": k, "m": lv.m, "twoJ": twice_j,
                    "predicted": lv.energy, "exact": e_exact,
                    "error": None if e_exact is None else e_exact - lv.energy,
                })
        return rows


def _surface_data(record, l: int, n_sites: int) -> MinimumData:
    if record.location != "surface" or OUTSIDE_THEOREM in record.flags:
        raise OutsideTheorem(f"minimum {l} at {record.m0.tolist()} is not a surface minimum with non-zero gradient")
    if record.grad_norm <= 0.0 or record.det_perp is None or record.det_perp <= 0.0:
        raise OutsideTheorem(f"minimum {l} has vanishing gradient or non-positive det_perp")
    w_small, w_large = record.omega_perp
    return MinimumData(
        l=l,
        n_h=n_sites * record.value,
        grad_norm=record.grad_norm,
        sqrt_det=math.sqrt(record.det_perp),
        omega=math.sqrt(w_large / w_small),
    )


def predict(P: NcPolynomial, report: MinimumReport, n_sites: int, kmax: int = 2, mmax: int = 2,
            kappa: float = 0.0) -> LadderPrediction:
    """Ladder N h + kappa + (2k-1)|grad| + (2m+1) sqrt(det) for every minimum."""
    if kmax < 0 or mmax < 0:
        raise ValueError("kmax and mmax must be non-negative")
    minima = [_surface_data(rec, l, n_sites) for l, rec in enumerate(report.minima)]
    levels = [
        LadderLevel(d.l, k, m, d.n_h + kappa + (2 * k - 1) * d.grad_norm + (2 * m + 1) * d.sqrt_det)
        for d in minima
        for k in range(kmax + 1)
        for m in range(mmax + 1)
    ]
    levels.sort(key=lambda lv: (lv.energy, lv.l, lv.k, lv.m))
    e0 = levels[0].energy
    tol = DEGENERACY_RTOL * (1.0 + abs(e0))
    above = [lv.energy - e0 for lv in levels if lv.energy - e0 > tol]
    gap_to_next = above[0] if above else math.nan
    degenerate = len(levels) > 1 and levels[1].energy - e0 <= tol
    return LadderPrediction(
        n_sites=n_sites,
        minima=minima,
        levels=levels,
        predicted_e0=e0,
        predicted_gap=0.0 if degenerate else gap_to_next,
        gap_to_next=gap_to_next,
        kappa_offset=kappa,
        degenerate=degenerate,
    )


@dataclass
class InteriorPrediction:
    e0: float
    gap: float
    j_n: float
    sqrt_det: float
    m0: list[float] = dc_field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def predict_interior(P: NcPolynomial, m0, n_sites: int) -> InteriorPrediction:
    """Ground energy N h(m0) + |m0| sqrt(det) of the tangent Hessian at an interior minimum.

    Blocks with J close to N |m0| / 2 share this energy, so the predicted
    gap of H is 0 to leading order.
    """
    m0 = np.asarray(m0, dtype=float)
    r = float(np.linalg.norm(m0))
    if not 0.0 < r < 1.0:
        raise NotInterior(f"|m0| = {r!r} is not in (0, 1)")
    if np.linalg.norm(grad(P, m0)) > 1e-6:
        raise NotInterior("gradient does not vanish at m0")
    D = hessian(P, m0)
    if np.linalg.eigvalsh(D)[0] <= 0.0:
        raise NotInterior("Hessian at m0 is not positive definite")
    e1, e2 = tangent_eigenframe(P, m0)
    T = np.column_stack([e1, e2])
    det = float(np.linalg.det(T.T @ D @ T))
    sqrt_det = math.sqrt(det)
    return InteriorPrediction(
        e0=n_sites * float(eval_classical(P, m0)) + r * sqrt_det,
        gap=0.0,
        j_n=n_sites * r / 2,
        sqrt_det=sqrt_det,
        m0=m0.tolist(),
    )


# -- limit oscillator ---------------------------------------------------------------

@dataclass
class OscillatorTruncation:
    omega: float
    K: int
    matrix: np.ndarray


def ladder_operators(dim: int):
    """Dense L_x, L_y on span{|0>, ..., |dim-1>}."""
    s = np.sqrt(np.arange(1, dim) / 2.0)
    Lx = np.diag(s, 1) + np.diag(s, -1)
    # <k|L_y|k'> = i^(k - k') sqrt(max(k, k')/2)
    Ly = np.diag(-1j * s, 1) + np.diag(1j * s, -1)
    return Lx, Ly


def oscillator(omega: float, K: int) -> OscillatorTruncation:
    """P_K (omega^2 L_x^2 + L_y^2) P_K on the first K+1 number states."""
    if omega < 1.0:
        raise ValueError("omega must be >= 1")
    if K < 2:
        raise ValueError("K must be >= 2")
    # two extra states so that products reaching beyond |K> are included
    Lx, Ly = ladder_operators(K + 3)
    D = (omega**2 * Lx @ Lx + Ly @ Ly)[: K + 1, : K + 1]
    M = D.real
    M = np.triu(M) + np.triu(M, 1).T
    idx = np.arange(K + 1)
    off = np.abs(idx[:, None] - idx[None, :])
    M[(off != 0) & (off != 2)] = 0.0
    return OscillatorTruncation(omega=float(omega), K=K, matrix=M)


def oscillator_spectrum(trunc: OscillatorTruncation, count: int) -> np.ndarray:
    return np.linalg.eigvalsh(trunc.matrix)[:count]


def ground_state_coefficients(omega: float, nmax: int) -> np.ndarray:
    """<n|psi_0>, n = 0..nmax, for the ground state of omega^2 L_x^2 + L_y^2."""
    if omega < 1.0:
        raise ValueError("omega must be >= 1")
    out = np.zeros(nmax + 1)
    out[0] = omega**0.25 * math.sqrt(2.0 / (omega + 1.0))
    if omega == 1.0:
        return out
    log_q = 0.5 * math.log((omega - 1.0) / (2.0 * (omega + 1.0)))
    base = 0.25 * math.log(omega) + 0.5 * math.log(2.0 / (omega + 1.0))
    n = np.arange(0, nmax + 1, 2)
    # c_n = base * q^n * (-1)^{n/2} sqrt(n!) / (n/2)!
    logs = base + n * log_q + 0.5 * gammaln(n + 1) - gammaln(n / 2 + 1)
    out[::2] = np.where((n // 2) % 2 == 0, 1.0, -1.0) * np.exp(logs)
    return out


def oscillator_overlap(n: int, k: int, omega: float) -> float:
    """Closed-form <n|psi_k> as a finite alternating sum."""
    if n < 0 or k < 0:
        raise ValueError("n and k must be non-negative")
    if omega < 1.0:
        raise ValueError("omega must be >= 1")
    if (n - k) % 2:
        return 0.0
    half = (k - n) // 2
    log_a = math.log(2.0 * math.sqrt(omega) / (omega + 1.0))
    b = (omega - 1.0) / (2.0 * (omega + 1.0))
    prefactor = 0.25 * math.log(omega) + 0.5 * (math.log(2.0 / (omega + 1.0)) + gammaln(n + 1) + gammaln(k + 1))
    total = 0.0
    for l in range(n // 2 + 1):
        j = l + half
        if not 0 <= j <= k // 2:
            continue
        power_b = 2 * l + half
        if power_b > 0 and b == 0.0:
            continue
        log_term = (prefactor - gammaln(n - 2 * l + 1) - gammaln(l + 1) - gammaln(j + 1)
                    + (n - 2 * l) * log_a + (power_b * math.log(b) if power_b else 0.0))
        total += (-1) ** l * math.exp(log_term)
    return total


def raising_operator(omega: float, dim: int) -> np.ndarray:
    """Real matrix of sqrt(omega/2) (L_x - (i/omega) L_y)."""
    s = np.sqrt(np.arange(1, dim))
    c = math.sqrt(omega / 2.0) / math.sqrt(2.0)
    return c * (np.diag((1 + 1 / omega) * s, -1) + np.diag((1 - 1 / omega) * s, 1))


def excited_state(k: int, omega: float, nmax: int) -> np.ndarray:
    """psi_k = (a^dagger)^k psi_0 / sqrt(k!) on the first nmax+1 number states."""
    dim = nmax + 2 * k + 2
    A = raising_operator(omega, dim)
    v = ground_state_coefficients(omega, dim - 1)
    for j in range(1, k + 1):
        v = A @ v / math.sqrt(j)
    return v[: nmax + 1]


# -- ground-state overlap -----------------------------------------------------------

def ground_state_overlap_check(P: NcPolynomial, n_sites: int, report: MinimumReport) -> float:
    """|<psi_exact, psi_predicted>| for the top block, in coordinates where m0 is the z axis."""
    if not report.is_unique:
        raise OutsideTheorem("overlap check needs a unique minimum")
    rec = report.minima[0]
    data = _surface_data(rec, 0, n_sites)
    m0 = rec.m0 / np.linalg.norm(rec.m0)
    e_small, e_large = tangent_eigenframe(P, m0)
    # the stiffer tangent direction plays the role of x
    R = np.vstack([e_large, np.cross(m0, e_large), m0])
    Pr = rotate(P, R)
    A = build_block(Pr, n_sites, n_sites)
    _, V = lowest_eigenpairs(A, 1, vectors=True)
    return aligned_overlap(V[:, 0], ground_state_coefficients(data.omega, n_sites))


def aligned_overlap(psi, reference) -> float:
    """|<psi, reference>| after normalizing both and rotating psi's largest entry to the positive axis."""
    psi = np.asarray(psi, dtype=complex)
    i = int(np.argmax(np.abs(psi)))
    psi = psi * (abs(psi[i]) / psi[i]) / np.linalg.norm(psi)
    ref = np.asarray(reference, dtype=float)
    return float(abs(np.vdot(psi, ref / np.linalg.norm(ref))))
