"""
Low-lying eigenvalues of banded blocks and the merged spectrum of H.

Small and medium blocks go through LAPACK's banded driver (Householder
reduction to tridiagonal form followed by a tridiagonal eigensolver).
Blocks larger than ``DENSE_BAND_MAX_DIM`` use implicitly restarted
Lanczos with a spectral shift.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NoConvergence, WindowTooNarrow
from .model import NcPolynomial
from .spinblocks import BandedHermitian, Multiplicity, build_block, multiplicity

DENSE_BAND_MAX_DIM = 4096


def default_threads() -> int:
    return max(1, os.cpu_count() or 1)


def _banded(A: BandedHermitian, select: str, select_range, vectors: bool):
    try:
        return sla.eig_banded(
            A.band, lower=True, eigvals_only=not vectors,
            select=select, select_range=select_range, check_finite=False,
        )
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NoConvergence(f"banded eigensolver failed: {exc}",
                            {"dim": A.dim, "bandwidth": A.bandwidth}) from exc


def _lanczos(A: BandedHermitian, count: int, vectors: bool, tol: float):
    op = A.to_sparse()
    shift = A.norm_bound()
    # shifted so the wanted low edge has the largest magnitude
    shifted = op - shift * sp.identity(op.shape[0], dtype=op.dtype, format="csr")
    try:
        w, v = spla.eigsh(shifted, k=count, which="LM", tol=tol * 1e-2, maxiter=50 * A.dim)
    except spla.ArpackNoConvergence as exc:
        raise NoConvergence("Lanczos did not converge",
                            {"dim": A.dim, "requested": count,
                             "converged": len(exc.eigenvalues)}) from exc
    w = w + shift
    order = np.argsort(w)
    w, v = w[order], v[:, order]
    return (w, v) if vectors else w


def lowest_eigenpairs(A: BandedHermitian, count: int, tol: float = 1e-12, vectors: bool = False):
    """The ``count`` smallest eigenvalues (ascending) and optionally eigenvectors.

    Returns ``w`` or ``(w, V)`` with eigenvectors as columns of ``V``.
    """
    if not 1 <= count <= A.dim:
        raise ValueError(f"count must be in [1, {A.dim}]")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if A.dim <= DENSE_BAND_MAX_DIM or count > A.dim // 2:
        out = _banded(A, "i", (0, count - 1), vectors)
    else:
        out = _lanczos(A, count, vectors, tol)
    if vectors:
        w, V = out
        scale = max(A.norm_bound(), 1.0)
        res = np.linalg.norm(A.to_sparse() @ V - V * w, axis=0)
        if np.max(res) > max(tol, 1e-10) * scale * 10:
            raise NoConvergence("eigenvector residual too large",
                                {"max_residual": float(np.max(res)), "scale": scale})
        return w, V
    return out


def eigenvalues_below(A: BandedHermitian, upper: float) -> np.ndarray:
    """All eigenvalues <= ``upper``, ascending."""
    if A.dim <= DENSE_BAND_MAX_DIM:
        w = _banded(A, "v", (-np.inf, upper), False)
        return np.sort(np.asarray(w))
    count = 8
    while True:
        count = min(count, A.dim)
        w = _lanczos(A, count, False, 1e-12)
        if w[-1] > upper or count == A.dim:
            return w[w <= upper]
        count *= 2


def full_spectrum(A: BandedHermitian) -> np.ndarray:
    return np.asarray(_banded(A, "a", None, False))


# -- merged spectrum -------------------------------------------------------------------

@dataclass(frozen=True)
class Level:
    energy: float
    twice_j: int
    multiplicity: Multiplicity
    index: int


@dataclass
class SpectrumResult:
    n_sites: int
    levels: list[Level]
    e0: float
    gap: float
    window: float
    model: str = ""
    scanned_twice_j: list[int] = field(default_factory=list)

    def expanded(self, count: int) -> np.ndarray:
        """First ``count`` energies of H counted with multiplicity (within the window)."""
        out = []
        for lev in self.levels:
            copies = lev.multiplicity.exact
            if copies is None:
                copies = count if lev.multiplicity.log_value > math.log(count) else round(math.exp(lev.multiplicity.log_value))
            out.extend([lev.energy] * min(copies, count - len(out)))
            if len(out) >= count:
                break
        return np.array(out)

    def block_levels(self, twice_j: int) -> np.ndarray:
        return np.array([lv.energy for lv in self.levels if lv.twice_j == twice_j])

    def to_dict(self) -> dict:
        return {
            "n": self.n_sites,
            "model": self.model,
            "levels": [
                {"e": lv.energy, "twoJ": lv.twice_j, "lnMult": lv.multiplicity.log_value, "idx": lv.index}
                for lv in self.levels
            ],
            "e0": self.e0,
            "gap": self.gap,
            "window": self.window,
        }


def _multiplicity_aware_gap(levels: list[Level]) -> float:
    if not levels:
        return math.nan
    first = levels[0]
    if not first.multiplicity.is_unique:
        return 0.0
    if len(levels) < 2:
        return math.nan
    return levels[1].energy - first.energy


def assemble_spectrum(
    P: NcPolynomial,
    n_sites: int,
    window: float,
    j_window: int | None = None,
    min_twice_j: int | None = None,
    threads: int | None = None,
    model_name: str = "",
) -> SpectrumResult:
    """Merge per-block eigenvalues below e0 + window.

    With ``j_window`` set, exactly that many top-J blocks are scanned.
    Otherwise the scan descends in J and stops at the first block whose
    lowest eigenvalue exceeds the running e0 + window (block ground
    energies are assumed unimodal in J).
    """
    if window <= 0:
        raise ValueError("window must be positive")
    floor = n_sites % 2 if min_twice_j is None else max(min_twice_j, n_sites % 2)
    all_tj = list(range(n_sites, floor - 1, -2))
    threads = threads or default_threads()

    def lowest(tj):
        A = build_block(P, n_sites, tj)
        return tj, A, float(lowest_eigenpairs(A, 1)[0])

    scanned: list[tuple[int, BandedHermitian, float]] = []
    if j_window is not None:
        todo = all_tj[: max(1, j_window)]
        with ThreadPoolExecutor(threads) as pool:
            scanned = list(pool.map(lowest, todo))
    else:
        e0 = math.inf
        pos = 0
        stopped = False
        while pos < len(all_tj) and not stopped:
            chunk = all_tj[pos: pos + threads]
            with ThreadPoolExecutor(threads) as pool:
                results = list(pool.map(lowest, chunk))
            for res in results:
                scanned.append(res)
                e0 = min(e0, res[2])
                if res[2] > e0 + window:
                    stopped = True
                    break
            pos += len(chunk)
        if not stopped and floor > n_sites % 2:
            raise WindowTooNarrow(f"scan reached 2J floor {floor} while blocks still lie in the window")

    e0 = min(s[2] for s in scanned)
    threshold = e0 + window

    def collect(item):
        tj, A, low = item
        if low > threshold:
            return []
        w = eigenvalues_below(A, threshold)
        mult = multiplicity(n_sites, tj)
        return [Level(float(e), tj, mult, i) for i, e in enumerate(w)]

    with ThreadPoolExecutor(threads) as pool:
        per_block = list(pool.map(collect, scanned))
    levels = [lv for blk in per_block for lv in blk]
    levels.sort(key=lambda lv: (lv.energy, -lv.twice_j, lv.index))
    return SpectrumResult(
        n_sites=n_sites,
        levels=levels,
        e0=levels[0].energy,
        gap=_multiplicity_aware_gap(levels),
        window=window,
        model=model_name,
        scanned_twice_j=[s[0] for s in scanned],
    )
