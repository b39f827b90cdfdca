"""Small dense Hermitian matrix primitives.

Everything here works on plain ``numpy`` arrays of shape ``(d, d)`` with
``d`` at most about 8.  Validation helpers return read-only copies so the
results can be shared freely.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
MINOR_TOL = 1e-12
ZERO_ENTRY = 1e-14
PHASE_TOL = 1e-10


class ValidationError(ValueError):
    """Input violates a named invariant (``invariant`` attribute)."""

    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns


@dataclass(frozen=True)
class MinorCertificate:
    indices: tuple[int, ...]
    value: float


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def hermitian_residual(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def as_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate a square Hermitian matrix and return a read-only complex copy.

    The returned matrix is exactly Hermitian: the upper triangle is mirrored
    and the diagonal imaginary parts are dropped.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValidationError("square", f"expected a nonempty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("finite", "matrix has non-finite entries")
    res = hermitian_residual(m)
    if res > tol:
        raise ValidationError("hermitian", f"symmetry residual {res:.3e} exceeds {tol:g}")
    h = np.triu(m, 1)
    h = h + h.conj().T + np.diag(m.diagonal().real)
    return _frozen(h)


def as_density(m, *, renormalize: bool = False, trace_tol: float = TRACE_TOL,
               psd_tol: float = PSD_TOL, hermitian_tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate a density matrix (Hermitian, unit trace, PSD).

    With ``renormalize`` a positive trace is divided out instead of rejected.
    """
    h = as_hermitian(m, hermitian_tol)
    tr = float(np.trace(h).real)
    if renormalize:
        if tr <= 0:
            raise ValidationError("trace", f"cannot rescale matrix with trace {tr:g}")
        h = _frozen(h / tr)
    elif abs(tr - 1.0) > trace_tol:
        raise ValidationError("trace", f"trace {tr:.12g} differs from 1 by more than {trace_tol:g}")
    lo = float(np.linalg.eigvalsh(h)[0])
    if lo < -psd_tol:
        raise ValidationError("psd", f"smallest eigenvalue {lo:.3e} below -{psd_tol:g}")
    return h


def eigh(m) -> Spectrum:
    """Eigendecomposition with eigenvalues sorted in descending order."""
    h = as_hermitian(m)
    w, v = np.linalg.eigh(h)
    order = np.argsort(w)[::-1]
    return Spectrum(w[order], v[:, order])


def is_psd_minors(m, tol: float = MINOR_TOL) -> tuple[bool, MinorCertificate | None]:
    """PSD test through the signs of all principal minors.

    Returns ``(True, None)`` or ``(False, cert)`` with the first negative
    minor found (subsets visited by size, then lexicographically).
    """
    h = as_hermitian(m)
    d = h.shape[0]
    for size in range(1, d + 1):
        for idx in itertools.combinations(range(d), size):
            value = float(np.linalg.det(h[np.ix_(idx, idx)]).real)
            if value < -tol:
                return False, MinorCertificate(idx, value)
    return True, None


def perron_vector(m) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and its entrywise-positive unit eigenvector.

    ``m`` must be Hermitian with every entry real and strictly positive.
    """
    h = as_hermitian(m)
    if np.max(np.abs(h.imag)) > MINOR_TOL:
        raise ValidationError("positive-matrix", "entries must be real")
    re = h.real
    bad = np.argwhere(re <= ZERO_ENTRY)
    if bad.size:
        j, k = (int(i) for i in bad[0])
        raise ValidationError("positive-matrix", f"entry ({j}, {k}) = {re[j, k]:.3e} is not positive")
    w, v = np.linalg.eigh(re)
    lam = float(w[-1])
    chi = v[:, -1]
    chi = chi * np.sign(chi[np.argmax(np.abs(chi))])
    if np.any(chi <= 0):
        raise ArithmeticError(f"Perron vector not positive: {chi}")
    return lam, chi


def phases(m) -> np.ndarray:
    """Entrywise phases in (-pi, pi]; zero for entries below ``ZERO_ENTRY``."""
    m = np.asarray(m, dtype=complex)
    th = np.angle(m)
    th[th <= -np.pi] += 2 * np.pi
    th[np.abs(m) < ZERO_ENTRY] = 0.0
    return th


def phase_conjugate(rho, theta) -> np.ndarray:
    """``U rho U^dagger`` for ``U = diag(exp(i*theta))``."""
    rho = np.asarray(rho, dtype=complex)
    u = np.exp(1j * np.asarray(theta, dtype=float))
    return _frozen(u[:, None] * rho * u.conj()[None, :])


def _wrap(a: float) -> float:
    r = (a + np.pi) % (2 * np.pi) - np.pi
    return np.pi if r <= -np.pi else float(r)


def phase_align_unitary(rho, tol: float = PHASE_TOL) -> np.ndarray | None:
    """Phases making ``phase_conjugate(rho, theta)`` entrywise nonnegative.

    ``theta[0]`` is fixed to 0 and the remaining phases are propagated along
    nonzero off-diagonal entries.  Returns None when some cycle of nonzero
    entries carries inconsistent phases (for d = 3 with all entries nonzero:
    ``theta23 != theta13 - theta12``).
    """
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    th = phases(rho)
    nonzero = np.abs(rho) >= ZERO_ENTRY
    theta = np.full(d, np.nan)
    for root in range(d):
        if not np.isnan(theta[root]):
            continue
        theta[root] = 0.0
        stack = [root]
        while stack:
            j = stack.pop()
            for k in range(d):
                if k == j or not nonzero[j, k]:
                    continue
                want = theta[j] + th[j, k]
                if np.isnan(theta[k]):
                    theta[k] = want
                    stack.append(k)
                elif abs(_wrap(theta[k] - want)) > tol:
                    return None
    return np.array([_wrap(t) for t in theta])
