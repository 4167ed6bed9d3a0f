"""
Global minimization of the classical symbol over the closed unit ball.

The ball is searched in two phases, surface and interior, so that every
minimum is crisply classified.  Both phases run a batch of damped Newton
iterations from deterministic starting grids; the sphere phase works
directly on the manifold (tangent steps followed by renormalization).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import NoMinimumFound, NotOnSphere
from .model import NcPolynomial, eval_classical, grad, hessian

MERGE_TOL = 1e-6
GLOBAL_TIE_RTOL = 1e-9
OUTSIDE_THEOREM = "OUTSIDE_THEOREM"


@dataclass
class OptConfig:
    n_sphere_starts: int = 256
    interior_grid: int = 7
    max_iter: int = 200
    grad_tol: float = 1e-13


@dataclass
class MinimumRecord:
    m0: np.ndarray
    value: float
    grad_norm: float
    location: str  # "surface" | "interior"
    omega_perp: tuple[float, float] | None = None
    det_perp: float | None = None
    hessian_eigs: tuple[float, float, float] | None = None
    flags: list[str] = dc_field(default_factory=list)

    def to_dict(self) -> dict:
        d = {
            "m0": [float(x) for x in self.m0],
            "value": self.value,
            "grad_norm": self.grad_norm,
            "location": self.location,
        }
        if self.location == "surface":
            d["omega_perp"] = list(self.omega_perp)
            d["det_perp"] = self.det_perp
        else:
            d["hessian_eigs"] = list(self.hessian_eigs)
        if self.flags:
            d["flags"] = list(self.flags)
        return d


@dataclass
class MinimumReport:
    minima: list[MinimumRecord]
    global_value: float

    @property
    def is_unique(self) -> bool:
        return len(self.minima) == 1

    def to_dict(self) -> dict:
        return {
            "minima": [m.to_dict() for m in self.minima],
            "global_value": self.global_value,
            "is_unique": self.is_unique,
        }


def fibonacci_sphere(n: int) -> np.ndarray:
    """Deterministic, nearly uniform unit vectors (golden-angle spiral)."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = np.pi * (1.0 + 5**0.5) * i
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def _tangent_frame(u):
    """Two orthonormal tangent vectors at each row of ``u`` (shape (n, 3))."""
    helper = np.where(np.abs(u[:, :1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    t1 = helper - np.sum(helper * u, axis=1, keepdims=True) * u
    t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = np.cross(u, t1)
    return t1, t2


def _sphere_derivs(P, radii, u):
    """Riemannian gradient (2 tangent coords) and Hessian (2x2) of u -> P(r u)."""
    x = radii[:, None] * u
    g = radii[:, None] * grad(P, x)
    H = (radii**2)[:, None, None] * hessian(P, x)
    t1, t2 = _tangent_frame(u)
    T = np.stack([t1, t2], axis=2)  # (n, 3, 2)
    gt = np.einsum("nij,ni->nj", T, g)
    radial = np.sum(g * u, axis=1)
    Ht = np.einsum("nia,nij,njb->nab", T, H, T) - radial[:, None, None] * np.eye(2)
    return gt, Ht, T


def sphere_newton(P: NcPolynomial, radii, u0, max_iter: int = 200, grad_tol: float = 1e-13):
    """Batch-minimize ``u -> P(r u)`` over unit vectors, one row per start.

    Returns the converged unit vectors.
    """
    u = np.array(u0, dtype=float)
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    radii = np.broadcast_to(np.asarray(radii, dtype=float), (len(u),)).copy()
    scale = 1.0 + max((abs(c) for c, _ in P.terms), default=0.0)
    active = np.ones(len(u), dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        ua, ra = u[idx], radii[idx]
        gt, Ht, T = _sphere_derivs(P, ra, ua)
        gnorm = np.linalg.norm(gt, axis=1)
        done = gnorm <= grad_tol * scale
        active[idx[done]] = False
        keep = ~done
        if not keep.any():
            break
        idx, ua, ra, gt, Ht, T = idx[keep], ua[keep], ra[keep], gt[keep], Ht[keep], T[keep]
        w, V = np.linalg.eigh(Ht)
        # Levenberg shift keeps the model convex so steps descend
        shift = np.maximum(0.0, 1e-8 * scale - w[:, 0])
        wd = w + shift[:, None]
        coef = -np.einsum("nab,na->nb", V, gt) / wd
        step2 = np.einsum("nab,nb->na", V, coef)
        step = np.einsum("nia,na->ni", T, step2)
        norm = np.linalg.norm(step, axis=1, keepdims=True)
        step = np.where(norm > 0.5, step * (0.5 / np.maximum(norm, 1e-300)), step)
        f0 = eval_classical(P, ra[:, None] * ua)
        slope = np.einsum("na,na->n", gt, step2 * np.minimum(1.0, 0.5 / np.maximum(norm[:, 0], 1e-300))[:, None])
        t = np.ones(len(idx))
        accepted = np.zeros(len(idx), dtype=bool)
        new_u = ua.copy()
        for _ in range(40):
            pending = ~accepted
            if not pending.any():
                break
            cand = ua[pending] + t[pending, None] * step[pending]
            cand /= np.linalg.norm(cand, axis=1, keepdims=True)
            f1 = eval_classical(P, ra[pending, None] * cand)
            ok = f1 <= f0[pending] + 1e-4 * t[pending] * slope[pending] + 1e-15 * scale
            pidx = np.flatnonzero(pending)
            new_u[pidx[ok]] = cand[ok]
            accepted[pidx[ok]] = True
            t[pidx[~ok]] *= 0.5
        u[idx] = new_u
        # a start that cannot descend any more has converged to working precision
        stalled = ~accepted | (np.linalg.norm(new_u - ua, axis=1) < 1e-15)
        active[idx[stalled]] = False
    return u


def _ball_newton(P: NcPolynomial, x0, max_iter: int = 200, grad_tol: float = 1e-13):
    x = np.array(x0, dtype=float)
    scale = 1.0 + max((abs(c) for c, _ in P.terms), default=0.0)
    for _ in range(max_iter):
        g = grad(P, x)
        if np.all(np.linalg.norm(g, axis=1) <= grad_tol * scale):
            break
        w, V = np.linalg.eigh(hessian(P, x))
        shift = np.maximum(0.0, 1e-8 * scale - w[:, 0])
        coef = -np.einsum("nab,na->nb", V, g) / (w + shift[:, None])
        step = np.einsum("nab,nb->na", V, coef)
        norm = np.linalg.norm(step, axis=1, keepdims=True)
        step = np.where(norm > 0.25, step * (0.25 / np.maximum(norm, 1e-300)), step)
        f0 = eval_classical(P, x)
        t = np.ones(len(x))
        for _ in range(40):
            f1 = eval_classical(P, x + t[:, None] * step)
            bad = f1 > f0 + 1e-15 * scale
            if not bad.any():
                break
            t[bad] *= 0.5
        x = x + t[:, None] * step
        # runaway starts leave the region of interest; freeze them
        x = np.where(np.linalg.norm(x, axis=1, keepdims=True) > 2.0, x0, x)
    return x


def projected_hessian(P: NcPolynomial, m0) -> tuple[float, float, float]:
    """Eigenvalues (ascending) and determinant of Q_perp D Q_perp + |grad| Q_perp on the tangent plane."""
    m0 = np.asarray(m0, dtype=float)
    if abs(np.linalg.norm(m0) - 1.0) > 1e-8:
        raise NotOnSphere(f"|m0| = {np.linalg.norm(m0)!r} is not 1")
    return _projected_hessian(P, m0, *_tangent_frame(m0[None, :]))


def _projected_hessian(P, m0, t1, t2):
    T = np.column_stack([t1[0], t2[0]])
    D = hessian(P, m0)
    gnorm = float(np.linalg.norm(grad(P, m0)))
    Dt = T.T @ D @ T + gnorm * np.eye(2)
    Dt = 0.5 * (Dt + Dt.T)
    w = np.linalg.eigvalsh(Dt)
    return float(w[0]), float(w[1]), float(w[0] * w[1])


def tangent_eigenframe(P: NcPolynomial, m0):
    """Unit tangent vectors (e_small, e_large) diagonalizing the projected Hessian."""
    m0 = np.asarray(m0, dtype=float)
    t1, t2 = _tangent_frame(m0[None, :] / np.linalg.norm(m0))
    T = np.column_stack([t1[0], t2[0]])
    Dt = T.T @ hessian(P, m0) @ T
    w, V = np.linalg.eigh(0.5 * (Dt + Dt.T))
    return T @ V[:, 0], T @ V[:, 1]


def _merge(points, values):
    order = np.lexsort((points[:, 2], points[:, 1], points[:, 0], values))
    kept: list[int] = []
    for i in order:
        if all(np.linalg.norm(points[i] - points[j]) > MERGE_TOL for j in kept):
            kept.append(i)
    return kept


def minimize_on_sphere(P: NcPolynomial, r: float, config: OptConfig | None = None):
    """Minimum of ``P(r e)`` over unit vectors ``e``; returns ``(value, r e)``."""
    config = config or OptConfig()
    if r == 0.0:
        return float(eval_classical(P, np.zeros(3))), np.zeros(3)
    starts = fibonacci_sphere(config.n_sphere_starts)
    u = sphere_newton(P, r, starts, config.max_iter, config.grad_tol)
    vals = eval_classical(P, r * u)
    i = int(np.argmin(vals))
    return float(vals[i]), r * u[i]


def minimize_on_ball(P: NcPolynomial, config: OptConfig | None = None) -> MinimumReport:
    """All global minima of P over the closed unit ball."""
    config = config or OptConfig()
    scale = 1.0 + max((abs(c) for c, _ in P.terms), default=0.0)
    candidates = []

    # sphere phase
    u = sphere_newton(P, 1.0, fibonacci_sphere(config.n_sphere_starts), config.max_iter, config.grad_tol)
    gt, Ht, _ = _sphere_derivs(P, np.ones(len(u)), u)
    g_full = grad(P, u)
    radial = np.sum(g_full * u, axis=1)
    tangent_min = np.linalg.eigvalsh(Ht)[:, 0]
    ok = (np.linalg.norm(gt, axis=1) <= 1e-7 * scale) & (tangent_min >= -1e-7 * scale) & (radial <= 1e-7 * scale)
    for m in u[ok]:
        candidates.append((m, "surface"))

    # interior phase
    if P.degree >= 2:
        g = np.linspace(-0.9, 0.9, config.interior_grid)
        grid = np.array(np.meshgrid(g, g, g, indexing="ij")).reshape(3, -1).T
        grid = grid[np.linalg.norm(grid, axis=1) < 0.95]
        x = _ball_newton(P, grid, config.max_iter, config.grad_tol)
        norms = np.linalg.norm(x, axis=1)
        gn = np.linalg.norm(grad(P, x), axis=1)
        hmin = np.linalg.eigvalsh(hessian(P, x))[:, 0]
        ok = (norms < 1 - 1e-6) & (gn <= 1e-8 * scale) & (hmin >= -1e-9 * scale)
        for m in x[ok]:
            candidates.append((m, "interior"))

    if not candidates:
        raise NoMinimumFound("no minimum located; check optimizer configuration")
    pts = np.array([c[0] for c in candidates])
    vals = eval_classical(P, pts)
    kept = _merge(pts, vals)
    best = float(np.min(vals[kept]))
    tie = GLOBAL_TIE_RTOL * (1.0 + abs(best))
    minima = []
    for i in kept:
        if vals[i] > best + tie:
            continue
        m, loc = candidates[i]
        minima.append(_record(P, m, loc))
    minima.sort(key=lambda rec: (rec.value, *rec.m0))
    return MinimumReport(minima=minima, global_value=best)


def _record(P, m, location) -> MinimumRecord:
    gnorm = float(np.linalg.norm(grad(P, m)))
    rec = MinimumRecord(m0=np.array(m), value=float(eval_classical(P, m)), grad_norm=gnorm, location=location)
    if location == "surface":
        lo, hi, det = projected_hessian(P, m)
        rec.omega_perp = (lo, hi)
        rec.det_perp = lo * hi
        if gnorm < 1e-8:
            rec.flags.append(OUTSIDE_THEOREM)
    else:
        rec.hessian_eigs = tuple(float(w) for w in np.linalg.eigvalsh(hessian(P, m)))
    return rec
