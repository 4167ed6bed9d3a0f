"""
Total-spin blocks of H = N P(2S/N).

The Hilbert space of N qubits splits into irreducible spin-J sectors of
dimension 2J+1, each appearing M_{N,J} times.  On every copy H acts as the
Weyl-ordered polynomial of the spin-J generators, which are tridiagonal in
the S_z eigenbasis |J-k>, k = 0..2J.  Blocks are therefore banded.

Spins are indexed by ``twice_j`` (= 2J) throughout to keep half-integers exact.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import lru_cache
from math import comb, lgamma, log

import numpy as np
import scipy.sparse as sp

from .errors import DimensionOverflow, ZeroDirection
from .model import NcPolynomial, grad, hessian, eval_classical

MAX_DIM = 200_001
EXACT_MULTIPLICITY_MAX_N = 64
REAL_PROBE_TOL = 1e-14


@dataclass(frozen=True)
class BlockIndex:
    n_sites: int
    twice_j: int

    def __post_init__(self):
        if self.n_sites < 1 or not 0 <= self.twice_j <= self.n_sites:
            raise ValueError(f"invalid block (N={self.n_sites}, 2J={self.twice_j})")
        if (self.n_sites - self.twice_j) % 2:
            raise ValueError("2J and N must have equal parity")

    @property
    def j(self) -> float:
        return self.twice_j / 2

    @property
    def dim(self) -> int:
        return self.twice_j + 1


@dataclass(frozen=True)
class Multiplicity:
    log_value: float
    exact: int | None = None

    @property
    def is_unique(self) -> bool:
        return self.log_value < 1e-12


class BandedHermitian:
    """Hermitian matrix stored by its lower band (LAPACK ``lower=True`` layout).

    ``band[i, j]`` holds ``A[j + i, j]`` for ``0 <= i <= bandwidth``.
    """

    def __init__(self, band: np.ndarray):
        band = np.asarray(band)
        if band.ndim != 2:
            raise ValueError("band storage must be 2-D")
        if np.iscomplexobj(band):
            band = band.copy()
            band[0] = band[0].real
            scale = max(1.0, float(np.max(np.abs(band)))) if band.size else 1.0
            if band.size == 0 or np.max(np.abs(band.imag)) < REAL_PROBE_TOL * scale:
                band = band.real.copy()
        self.band = band
        self.band.setflags(write=False)

    @classmethod
    def from_matrix(cls, A, bandwidth: int | None = None) -> BandedHermitian:
        """From a dense or sparse matrix; only the lower triangle is read."""
        if sp.issparse(A):
            A = A.todia() if bandwidth is None else A
            n = A.shape[0]
            if bandwidth is None:
                offs = [-o for o in A.offsets if o <= 0] if A.nnz else [0]
                bandwidth = max(offs) if offs else 0
            A = A.tocsr()
            diag = lambda i: A.diagonal(-i)
        else:
            A = np.asarray(A)
            n = A.shape[0]
            if bandwidth is None:
                rows, cols = np.nonzero(np.tril(A))
                bandwidth = int(np.max(rows - cols)) if rows.size else 0
            diag = lambda i: np.diagonal(A, -i)
        bandwidth = min(bandwidth, max(n - 1, 0))
        dtype = complex if np.iscomplexobj(A.data if sp.issparse(A) else A) else float
        band = np.zeros((bandwidth + 1, n), dtype=dtype)
        for i in range(bandwidth + 1):
            band[i, : n - i] = diag(i)
        return cls(band)

    @property
    def dim(self) -> int:
        return self.band.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.band.shape[0] - 1

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.band)

    def to_sparse(self) -> sp.csr_matrix:
        n, b = self.dim, self.bandwidth
        diags, offs = [self.band[0]], [0]
        for i in range(1, b + 1):
            low = self.band[i, : n - i]
            diags += [low, np.conj(low)]
            offs += [-i, i]
        return sp.diags(diags, offs, shape=(n, n), format="csr")

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def matvec(self, v):
        return self.to_sparse() @ v

    def norm_bound(self) -> float:
        """Cheap upper bound on the operator norm (max absolute row sum)."""
        return float(np.max(np.abs(self.to_sparse()).sum(axis=1))) if self.dim else 0.0

    def hermiticity_error(self) -> float:
        A = self.to_dense()
        return float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0

    def to_csv(self) -> str:
        """Lower-band entries as ``row,col,re,im`` lines after a header."""
        buf = io.StringIO()
        buf.write(f"# banded hermitian lower band; dim={self.dim} bandwidth={self.bandwidth}\n")
        buf.write("row,col,re,im\n")
        n = self.dim
        for i in range(self.bandwidth + 1):
            for j in range(n - i):
                z = complex(self.band[i, j])
                buf.write(f"{j + i},{j},{z.real:.16e},{z.imag:.16e}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> BandedHermitian:
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        rows = [ln.split(",") for ln in lines[1:]]
        dim = max(int(r[0]) for r in rows) + 1
        bw = max(int(r[0]) - int(r[1]) for r in rows)
        band = np.zeros((bw + 1, dim), dtype=complex)
        for r, c, re_, im_ in rows:
            band[int(r) - int(c), int(c)] = complex(float(re_), float(im_))
        return cls(band)


# -- spin matrices -------------------------------------------------------------

@lru_cache(maxsize=64)
def _spin_sparse(twice_j: int):
    n = twice_j + 1
    k = np.arange(1, n)
    # <J-k+1| S_+ |J-k> = sqrt(k (2J - k + 1))
    sp_elems = np.sqrt(k * (twice_j - k + 1.0))
    Sx = sp.diags([sp_elems / 2, sp_elems / 2], [1, -1], shape=(n, n), format="csr", dtype=complex)
    Sy = sp.diags([-0.5j * sp_elems, 0.5j * sp_elems], [1, -1], shape=(n, n), format="csr", dtype=complex)
    Sz = sp.diags([twice_j / 2 - np.arange(n)], [0], shape=(n, n), format="csr", dtype=complex)
    return Sx, Sy, Sz


def spin_operators(twice_j: int):
    """Sparse (S_x, S_y, S_z) on C^{2J+1} in the basis |J-k>, k = 0..2J."""
    return _spin_sparse(int(twice_j))


def spin_matrices(twice_j: int) -> tuple[BandedHermitian, BandedHermitian, BandedHermitian]:
    return tuple(BandedHermitian.from_matrix(S, bandwidth=1 if twice_j else 0) for S in spin_operators(twice_j))


# -- multiplicities --------------------------------------------------------------

def multiplicity(n_sites: int, twice_j: int) -> Multiplicity:
    """Number of spin-J copies among N qubits."""
    BlockIndex(n_sites, twice_j)
    top = (n_sites + twice_j) // 2 + 1
    log_value = (
        log(twice_j + 1) - log(n_sites + 1)
        + lgamma(n_sites + 2) - lgamma(top + 1) - lgamma(n_sites + 2 - top)
    )
    exact = None
    if n_sites <= EXACT_MULTIPLICITY_MAX_N:
        num = (twice_j + 1) * comb(n_sites + 1, top)
        exact, rem = divmod(num, n_sites + 1)
        assert rem == 0
        log_value = log(exact)
    return Multiplicity(log_value, exact)


def blocks(n_sites: int) -> list[tuple[BlockIndex, Multiplicity]]:
    """All sectors from J = N/2 downwards."""
    if n_sites < 1:
        raise ValueError("N must be positive")
    return [
        (BlockIndex(n_sites, tj), multiplicity(n_sites, tj))
        for tj in range(n_sites, -1, -2)
    ]


# -- Weyl-ordered block Hamiltonians -------------------------------------------

def weyl_words(twice_j: int, degrees: set[tuple[int, int, int]]) -> dict:
    """Sum over all distinct orderings of each requested letter multiset.

    W(a,b,c) = S_x W(a-1,b,c) + S_y W(a,b-1,c) + S_z W(a,b,c-1): split on the
    first letter.  Shared sub-multisets are computed once.
    """
    S = spin_operators(twice_j)
    n = twice_j + 1
    memo = {(0, 0, 0): sp.identity(n, dtype=complex, format="csr")}

    def W(d):
        if d in memo:
            return memo[d]
        acc = None
        for ax in range(3):
            if d[ax]:
                sub = list(d)
                sub[ax] -= 1
                term = S[ax] @ W(tuple(sub))
                acc = term if acc is None else acc + term
        memo[d] = acc.tocsr()
        return memo[d]

    return {d: W(d) for d in degrees}


def _multinomial(a, b, c) -> int:
    return comb(a + b + c, a) * comb(b + c, b)


def block_operator(P: NcPolynomial, n_sites: int, twice_j: int) -> sp.csr_matrix:
    """Sparse N * Weyl(P)(2S/N) on C^{2J+1}."""
    BlockIndex(n_sites, twice_j)
    words = weyl_words(twice_j, {d for _, d in P.terms})
    n = twice_j + 1
    H = sp.csr_matrix((n, n), dtype=complex)
    for c, d in P.terms:
        deg = sum(d)
        scale = c * n_sites ** (1 - deg) * 2.0**deg / _multinomial(*d)
        H = H + scale * words[d]
    return H


def build_block(P: NcPolynomial, n_sites: int, twice_j: int, max_dim: int = MAX_DIM) -> BandedHermitian:
    if twice_j + 1 > max_dim:
        raise DimensionOverflow(f"block dimension {twice_j + 1} exceeds limit {max_dim}")
    H = block_operator(P, n_sites, twice_j)
    return BandedHermitian.from_matrix(H, bandwidth=min(P.degree, twice_j))


# -- quadratic approximations -------------------------------------------------------

def quadratic_block(P: NcPolynomial, n_sites: int, twice_j: int, m0, variant: str = "full") -> BandedHermitian:
    """Second-order Taylor operator of the symbol around ``m0``.

    ``variant="projected"`` keeps only the Hessian restricted to the
    directions perpendicular to ``m0``.
    """
    m0 = np.asarray(m0, dtype=float)
    r = np.linalg.norm(m0)
    if r == 0.0:
        raise ZeroDirection("m0 must be non-zero")
    if variant not in ("full", "projected"):
        raise ValueError("variant must be 'full' or 'projected'")
    N = n_sites
    h0 = float(eval_classical(P, m0))
    g = grad(P, m0)
    D = hessian(P, m0)
    S = spin_operators(twice_j)
    n = twice_j + 1
    eye = sp.identity(n, dtype=complex, format="csr")
    Q = N * h0 * eye
    for i in range(3):
        Q = Q + g[i] * (2 * S[i] - N * m0[i] * eye)
    if variant == "full":
        F = [S[i] - (N * m0[i] / 2) * eye for i in range(3)]
    else:
        e = m0 / r
        proj = np.eye(3) - np.outer(e, e)
        F = [sum(proj[i, j] * S[j] for j in range(3)) for i in range(3)]
    for i in range(3):
        for j in range(3):
            if D[i, j] != 0.0:
                Q = Q + (2.0 / N) * D[i, j] * (F[i] @ F[j])
    return BandedHermitian.from_matrix(Q.tocsr(), bandwidth=min(2, twice_j))


def fluctuation_projector(twice_j: int, m0, K: int) -> np.ndarray:
    """Orthonormal columns spanning eigenvectors of e.S for the K+1 top eigenvalues."""
    m0 = np.asarray(m0, dtype=float)
    e = m0 / np.linalg.norm(m0)
    S = spin_operators(twice_j)
    A = sum(e[i] * S[i] for i in range(3)).toarray()
    w, V = np.linalg.eigh(A)
    return V[:, ::-1][:, : K + 1]
