"""Numerical convex roofs over pure-state decompositions.

Every size-``m`` decomposition of ``rho = sum_j lam_j |e_j><e_j|`` (rank
``r``) is obtained from an ``m x r`` isometry ``V`` through the unnormalized
vectors ``V @ W.T`` with ``W = [sqrt(lam_j) e_j]``.  The roof is therefore
minimized over the complex Stiefel manifold, restarted from random
isometries.

The isometry is parametrized by an unconstrained matrix through the polar
map and minimized with L-BFGS; functionals with kinks (the l1 one) are
minimized through a sequence of smoothed versions ending with the exact one.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .matcore import ValidationError, as_density
from .measures import BlochVector, PureStateFunctional

RANK_TOL = 1e-12
WEIGHT_FLOOR = 1e-15
RECON_TOL = 1e-8


@dataclass(frozen=True)
class PureEnsemble:
    """Weights ``p_l`` and normalized states ``psi_l`` (rows of ``states``)."""
    weights: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        s = np.atleast_2d(np.asarray(self.states, dtype=complex))
        if w.ndim != 1 or len(w) != len(s):
            raise ValidationError("ensemble", "weights and states differ in length")
        if np.any(w < 0):
            raise ValidationError("ensemble", "negative weight")
        if abs(w.sum() - 1) > 1e-10:
            raise ValidationError("ensemble", f"weights sum to {w.sum():.12g}")
        norms = np.linalg.norm(s, axis=1)
        if np.any(np.abs(norms - 1) > 1e-10):
            raise ValidationError("ensemble", "state not normalized")
        w.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "states", s)

    @classmethod
    def from_vectors(cls, vectors, floor: float = WEIGHT_FLOOR) -> "PureEnsemble":
        """Build from unnormalized rows ``sqrt(p_l) psi_l``; tiny rows are dropped.

        Weights are renormalized to sum to one.
        """
        v = np.atleast_2d(np.asarray(vectors, dtype=complex))
        p = np.sum(np.abs(v) ** 2, axis=1)
        keep = p > floor
        v, p = v[keep], p[keep]
        return cls(p / p.sum(), v / np.sqrt(p)[:, None])

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def density(self) -> np.ndarray:
        s = self.states
        return np.einsum("l,lj,lk->jk", self.weights, s, s.conj())

    def vectors(self) -> np.ndarray:
        return np.sqrt(self.weights)[:, None] * self.states

    def reconstruction_error(self, rho) -> float:
        return float(np.max(np.abs(self.density() - np.asarray(rho))))

    def check_reconstructs(self, rho, tol: float = RECON_TOL) -> None:
        err = self.reconstruction_error(rho)
        if err > tol:
            raise ValidationError("reconstruction", f"ensemble misses rho by {err:.3e} > {tol:g}")

    def to_dict(self) -> dict:
        return {
            "weights": [float(w) for w in self.weights],
            "states": [[[float(a.real), float(a.imag)] for a in row] for row in self.states],
        }


@dataclass(frozen=True)
class RoofResult:
    value: float
    ensemble: PureEnsemble
    restarts_used: int
    converged: tuple[bool, ...]
    restart_values: tuple[float, ...] = ()


def ensemble_average(e: PureEnsemble, f: PureStateFunctional) -> float:
    """``sum_l p_l f(psi_l)``."""
    return float(np.dot(e.weights, f.unnormalized(e.states)))


# -- isometry parametrization ------------------------------------------------

SMOOTHING_SCHEDULE = (3e-2, 1e-3, 3e-5, 1e-6, 3e-8, 0.0)


def random_isometry(m: int, r: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((m, r)) + 1j * rng.standard_normal((m, r))
    q, rr = np.linalg.qr(z)
    return q * (np.diag(rr) / np.abs(np.diag(rr)))[None, :]


def _polar(a: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(a, full_matrices=False)
    return u @ vh


def polar_chart(z: np.ndarray, grad_v: np.ndarray | None = None):
    """Isometry ``V = Z (Z^H Z)^{-1/2}`` and the pullback of ``grad_v`` to ``Z``.

    Gradients are real-inner-product gradients, ``dF = Re tr(G^H dZ)``.
    """
    s, q = np.linalg.eigh(z.conj().T @ z)
    isq = s ** -0.5
    t = (q * isq) @ q.conj().T
    v = z @ t
    if grad_v is None:
        return v, None
    ds = s[:, None] - s[None, :]
    close = np.abs(ds) <= 1e-12 * np.maximum(s[:, None], s[None, :])
    # divided differences of x**-0.5
    k = np.where(close, -0.5 * s[:, None] ** -1.5,
                 (isq[:, None] - isq[None, :]) / np.where(close, 1.0, ds))
    h = q.conj().T @ (z.conj().T @ grad_v) @ q
    p = q @ (k * h) @ q.conj().T
    return v, grad_v @ t + z @ (p + p.conj().T)


def _factor(rho) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    r = int(np.sum(w > RANK_TOL))
    return v[:, :r] * np.sqrt(w[:r])[None, :]


def _isometry_from_ensemble(e: PureEnsemble, wmat: np.ndarray, m: int) -> np.ndarray:
    psi = e.vectors()
    lam = np.sum(np.abs(wmat) ** 2, axis=0)
    v = psi @ wmat.conj() / lam[None, :]
    if len(v) < m:
        v = np.vstack([v, np.zeros((m - len(v), v.shape[1]), dtype=complex)])
    return _polar(v)


def _descend(v: np.ndarray, wmat: np.ndarray, f: PureStateFunctional,
             max_iters: int, tol: float) -> tuple[np.ndarray, float, bool]:
    """Local minimization from isometry ``v``; returns (V, value, converged)."""
    m, r = v.shape
    wt = wmat.T
    wc = wmat.conj()

    def unpack(x):
        return (x[:m * r] + 1j * x[m * r:]).reshape(m, r)

    def objective(x, eps):
        z = unpack(x)
        vv, _ = polar_chart(z)
        psi = vv @ wt
        if f.smooth is not None and eps > 0:
            vals, g = f.smooth(psi, eps)
        else:
            vals, g = f.unnormalized(psi), f.gradient(psi)
        _, gz = polar_chart(z, g @ wc)
        return float(np.sum(vals)), np.concatenate([gz.real.ravel(), gz.imag.ravel()])

    schedule = SMOOTHING_SCHEDULE if f.smooth is not None else (0.0,)
    start = float(np.sum(f.unnormalized(v @ wt)))
    x = np.concatenate([v.real.ravel(), v.imag.ravel()])
    converged = True
    for eps in schedule:
        res = minimize(objective, x, args=(eps,), jac=True, method="L-BFGS-B",
                       options={"maxiter": max_iters, "ftol": tol, "gtol": 1e-12})
        x = res.x
        converged &= res.status != 1
    vv, _ = polar_chart(unpack(x))
    end = float(np.sum(f.unnormalized(vv @ wt)))
    if end > start:
        return v, start, converged
    return vv, end, converged


def roof_upper(rho, f: PureStateFunctional, *, ensemble_size: int | None = None,
               restarts: int = 8, seed: int = 0, max_iters: int = 2000, tol: float = 1e-12,
               init: PureEnsemble | None = None, workers: int = 1) -> RoofResult:
    """Upper bound on the convex roof of ``f`` at ``rho`` with its ensemble.

    Restart ``k`` starts from a random isometry drawn with seed ``seed + k``;
    with ``init`` given, restart 0 starts from that ensemble instead.  The
    result does not depend on ``workers``.
    """
    rho = as_density(rho)
    d = rho.shape[0]
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    wmat = _factor(rho)
    r = wmat.shape[1]
    m = d * d if ensemble_size is None else int(ensemble_size)
    if init is not None:
        m = max(m, len(init))
    if m < r:
        raise ValidationError("ensemble-size", f"ensemble size {m} is below rank {r}")

    if r == 1:
        psi = wmat[:, 0] / np.linalg.norm(wmat[:, 0])
        e = PureEnsemble(np.ones(1), psi[None, :])
        return RoofResult(ensemble_average(e, f), e, 0, (True,), ())

    def run(k: int):
        if k == 0 and init is not None:
            v0 = _isometry_from_ensemble(init, wmat, m)
        else:
            v0 = random_isometry(m, r, np.random.default_rng(seed + k))
        return _descend(v0, wmat, f, max_iters, tol)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            runs = list(ex.map(run, range(restarts)))
    else:
        runs = [run(k) for k in range(restarts)]

    best = min(range(restarts), key=lambda k: (runs[k][1], k))
    e = PureEnsemble.from_vectors(runs[best][0] @ wmat.T)
    return RoofResult(
        value=ensemble_average(e, f),
        ensemble=e,
        restarts_used=restarts,
        converged=tuple(bool(x[2]) for x in runs),
        restart_values=tuple(float(x[1]) for x in runs),
    )


# -- brute-force qubit oracle -------------------------------------------------

def _bloch_states(n: np.ndarray) -> np.ndarray:
    """Pure qubit states for unit Bloch vectors (rows of ``n``)."""
    nz = np.clip(n[:, 2], -1.0, 1.0)
    c = np.sqrt((1 + nz) / 2)
    s = np.sqrt((1 - nz) / 2)
    phase = np.exp(1j * np.arctan2(n[:, 1], n[:, 0]))
    return np.stack([c + 0j, s * phase], axis=1)


def _chord_values(b: np.ndarray, alpha: np.ndarray, phi: np.ndarray,
                  f: PureStateFunctional) -> np.ndarray:
    n = np.stack([np.sin(alpha) * np.cos(phi), np.sin(alpha) * np.sin(phi), np.cos(alpha)], axis=1)
    bn = n @ b
    disc = np.sqrt(np.maximum(bn ** 2 + 1 - b @ b, 0.0))
    t1, t2 = -bn + disc, -bn - disc
    p1 = -t2 / (t1 - t2)
    ends1 = b[None, :] + t1[:, None] * n
    ends2 = b[None, :] + t2[:, None] * n
    ends1 /= np.linalg.norm(ends1, axis=1, keepdims=True)
    ends2 /= np.linalg.norm(ends2, axis=1, keepdims=True)
    return p1 * f.unnormalized(_bloch_states(ends1)) + (1 - p1) * f.unnormalized(_bloch_states(ends2))


def qubit_roof_oracle(b: BlochVector, f: PureStateFunctional, grid_n: int = 360,
                      refine: bool = True) -> float:
    """Brute-force qubit roof over two-state decompositions.

    Scans chords of the Bloch ball through ``b`` with directions on a
    ``grid_n x grid_n`` (polar, azimuth) grid over a hemisphere, optionally
    polishing the best chord with Nelder-Mead.
    """
    if grid_n < 90:
        raise ValueError("grid_n must be at least 90")
    vec = np.array([b.x, b.y, b.z])
    r = b.r
    if r >= 1 - 1e-10:
        return float(f.unnormalized(_bloch_states(vec[None, :] / max(r, 1e-300)))[0])
    ang = np.pi * np.arange(grid_n) / grid_n
    alpha, phi = (a.ravel() for a in np.meshgrid(ang, ang, indexing="ij"))
    vals = _chord_values(vec, alpha, phi, f)
    i = int(np.argmin(vals))
    best = float(vals[i])
    if refine:
        res = minimize(lambda x: float(_chord_values(vec, x[:1], x[1:], f)[0]),
                       np.array([alpha[i], phi[i]]), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400})
        best = min(best, float(res.fun))
    return best
