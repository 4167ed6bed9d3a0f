"""Pressure of H = N P(2S/N): exact block traces and the variational formula."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .classical_opt import OptConfig, fibonacci_sphere, minimize_on_sphere, sphere_newton
from .coherent import SphericalQuadrature, coherent_matrix
from .eigensolve import default_threads, full_spectrum
from .errors import DimensionOverflow, OutOfRange
from .model import NcPolynomial, eval_classical
from .spinblocks import build_block, multiplicity

EXACT_PRESSURE_MAX_N = 2000
R_GRID = 1024
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def binary_entropy(r) -> float | np.ndarray:
    """I(r) = -(1+r)/2 ln((1+r)/2) - (1-r)/2 ln((1-r)/2), with I(1) = 0 and I(0) = ln 2."""
    r_arr = np.asarray(r, dtype=float)
    if np.any((r_arr < 0.0) | (r_arr > 1.0)) or np.any(np.isnan(r_arr)):
        raise OutOfRange("r must lie in [0, 1]")
    p, q = (1.0 + r_arr) / 2.0, (1.0 - r_arr) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -p * np.log(p) - np.where(q > 0.0, q * np.log(np.where(q > 0.0, q, 1.0)), 0.0)
    return float(out) if out.ndim == 0 else out


def exact_pressure(P: NcPolynomial, n_sites: int, beta: float, max_n: int = EXACT_PRESSURE_MAX_N,
                   threads: int | None = None) -> float:
    """N^-1 ln Tr exp(-beta H) from full block spectra."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    if n_sites > max_n:
        raise DimensionOverflow(f"N = {n_sites} exceeds the exact-pressure cap {max_n}")

    def block_term(tj):
        w = full_spectrum(build_block(P, n_sites, tj))
        return multiplicity(n_sites, tj).log_value + float(logsumexp(-beta * w))

    with ThreadPoolExecutor(threads or default_threads()) as pool:
        terms = list(pool.map(block_term, range(n_sites, -1, -2)))
    return float(logsumexp(terms)) / n_sites


@dataclass
class PressureResult:
    beta: float
    variational: float
    maximizer_r: float
    inner_minimizer: np.ndarray
    exact: float | None = None

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "variational": self.variational,
            "exact": self.exact,
            "maximizer_r": self.maximizer_r,
            "inner_minimizer": [float(x) for x in self.inner_minimizer],
        }


def sphere_minimum_profile(P: NcPolynomial, radii, config: OptConfig | None = None):
    """min over unit e of P(r e) for every r, with the minimizing points."""
    config = config or OptConfig()
    radii = np.asarray(radii, dtype=float)
    starts = fibonacci_sphere(config.n_sphere_starts)
    n_s = len(starts)
    u0 = np.tile(starts, (len(radii), 1))
    rr = np.repeat(radii, n_s)
    u = sphere_newton(P, rr, u0, config.max_iter, config.grad_tol)
    vals = eval_classical(P, rr[:, None] * u).reshape(len(radii), n_s)
    best = np.argmin(vals, axis=1)
    pts = (rr[:, None] * u).reshape(len(radii), n_s, 3)[np.arange(len(radii)), best]
    return vals[np.arange(len(radii)), best], pts


def variational_pressure(P: NcPolynomial, beta: float, grid: int = R_GRID,
                         config: OptConfig | None = None, profile=None) -> PressureResult:
    """max over r in [0, 1] of I(r) - beta min_e P(r e).

    ``profile`` may carry a precomputed ``(radii, minima, points)`` triple so
    that several temperatures share one inner minimization.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    config = config or OptConfig(n_sphere_starts=128)
    if profile is None:
        radii = np.linspace(0.0, 1.0, grid)
        mins, pts = sphere_minimum_profile(P, radii, config)
    else:
        radii, mins, pts = profile
    values = binary_entropy(radii) - beta * mins
    top = float(np.max(values))
    i = int(np.flatnonzero(values == top)[-1])  # ties go to the larger radius

    def objective(r):
        v, x = minimize_on_sphere(P, r, config)
        return float(binary_entropy(r)) - beta * v, x

    best_r, best_v, best_x = float(radii[i]), top, pts[i]
    a = float(radii[max(i - 1, 0)])
    b = float(radii[min(i + 1, len(radii) - 1)])
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, xc = objective(c)
    fd, xd = objective(d)
    while b - a > 1e-12:
        if fc > fd:
            b, d, fd, xd = d, c, fc, xc
            c = b - _GOLDEN * (b - a)
            fc, xc = objective(c)
        else:
            a, c, fc, xc = c, d, fd, xd
            d = a + _GOLDEN * (b - a)
            fd, xd = objective(d)
    for r, v, x in ((c, fc, xc), (d, fd, xd)):
        if v > best_v or (v == best_v and r > best_r):
            best_r, best_v, best_x = r, v, x
    return PressureResult(beta=float(beta), variational=best_v, maximizer_r=best_r,
                          inner_minimizer=np.asarray(best_x, dtype=float))


def pressure_scan(P: NcPolynomial, betas, n_sites: int | None = None, grid: int = R_GRID,
                  config: OptConfig | None = None) -> list[PressureResult]:
    config = config or OptConfig(n_sphere_starts=128)
    radii = np.linspace(0.0, 1.0, grid)
    mins, pts = sphere_minimum_profile(P, radii, config)
    out = []
    for beta in betas:
        res = variational_pressure(P, beta, grid, config, profile=(radii, mins, pts))
        if n_sites is not None:
            res.exact = exact_pressure(P, n_sites, beta)
        out.append(res)
    return out


def pressure_csv(results: list[PressureResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["beta", "variational", "exact", "maximizer_r"])
    for r in results:
        writer.writerow([f"{r.beta:.16e}", f"{r.variational:.16e}",
                         "" if r.exact is None else f"{r.exact:.16e}", f"{r.maximizer_r:.16e}"])
    return buf.getvalue()


# -- Berezin-Lieb ---------------------------------------------------------------

def berezin_lieb(A: np.ndarray, g, beta: float, quad: SphericalQuadrature) -> tuple[float, float, float]:
    """Lower coherent integral, exact trace and upper-symbol integral of exp(-beta A).

    ``g`` is the upper symbol from which ``A`` was quantized (callable on unit
    vectors or an :class:`NcPolynomial`).
    """
    A = np.asarray(A)
    dim = A.shape[0]
    J = (dim - 1) / 2
    V = coherent_matrix(J, quad)
    lower_sym = np.real(np.einsum("nk,kl,nl->n", V.conj(), A, V))
    units = quad.units
    upper_sym = eval_classical(g, units) if isinstance(g, NcPolynomial) else np.asarray(g(units), dtype=float)
    upper_sym = np.broadcast_to(upper_sym, (len(units),))
    pref = dim / (4 * np.pi)
    lower_int = pref * quad.integrate(np.exp(-beta * lower_sym))
    upper_int = pref * quad.integrate(np.exp(-beta * upper_sym))
    trace = float(np.sum(np.exp(-beta * np.linalg.eigvalsh(A))))
    return float(lower_int), trace, float(upper_int)
