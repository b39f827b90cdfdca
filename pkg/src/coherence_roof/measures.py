"""Coherence measures: l1 norm, relative entropy, qubit closed forms."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .matcore import ValidationError

NORM_TOL = 1e-10
BLOCH_TOL = 1e-10
_EIG_FLOOR = 1e-15
_H_SLACK = 1e-12


def entropy(probs) -> float:
    """Shannon entropy in bits; entries below 1e-15 count as zero."""
    p = np.asarray(probs, dtype=float)
    p = p[p > _EIG_FLOOR]
    return float(-np.sum(p * np.log2(p))) + 0.0 if p.size else 0.0


def von_neumann(rho) -> float:
    return entropy(np.linalg.eigvalsh(np.asarray(rho, dtype=complex)))


def binary_entropy(x: float) -> float:
    if x < -_H_SLACK or x > 1 + _H_SLACK:
        raise ValueError(f"binary entropy argument {x} outside [0, 1]")
    x = min(max(x, 0.0), 1.0)
    return entropy([x, 1.0 - x])


def c_l1(rho) -> float:
    """Sum of the moduli of the off-diagonal entries."""
    rho = np.asarray(rho, dtype=complex)
    a = np.abs(rho)
    return float(a.sum() - np.trace(a))


def c_r(rho) -> float:
    """Relative entropy of coherence, ``S(diag rho) - S(rho)``, in bits."""
    rho = np.asarray(rho, dtype=complex)
    return max(0.0, entropy(np.diag(rho).real) - von_neumann(rho))


# -- qubit / Bloch ball ------------------------------------------------------

@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if self.r > 1 + BLOCH_TOL:
            raise ValidationError("bloch", f"|r| = {self.r:.12g} exceeds 1")

    @property
    def r(self) -> float:
        return float(np.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2))

    @property
    def transverse(self) -> float:
        return float(np.hypot(self.x, self.y))

    def to_matrix(self) -> np.ndarray:
        return 0.5 * np.array([[1 + self.z, self.x - 1j * self.y],
                               [self.x + 1j * self.y, 1 - self.z]])

    @classmethod
    def from_matrix(cls, rho) -> "BlochVector":
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (2, 2):
            raise ValidationError("dim", f"Bloch vector needs a 2x2 matrix, got {rho.shape}")
        tr = rho[0, 0].real + rho[1, 1].real
        off = 2 * rho[1, 0] / tr
        return cls(float(off.real), float(off.imag), float((rho[0, 0].real - rho[1, 1].real) / tr))


def qubit_cr(b: BlochVector) -> float:
    """Closed form ``h((1+z)/2) - h((1+r)/2)``."""
    return binary_entropy((1 + b.z) / 2) - binary_entropy((1 + min(b.r, 1.0)) / 2)


def qubit_cr_roof(b: BlochVector) -> float:
    """Closed form of the convex roof of C_r for a qubit."""
    return binary_entropy((1 + np.sqrt(max(0.0, 1 - b.transverse ** 2))) / 2)


# -- pure-state functionals --------------------------------------------------

@dataclass(frozen=True)
class PureStateFunctional:
    """A nonnegative function of a normalized pure state.

    ``unnormalized`` evaluates ``|v|^2 * f(v/|v|)`` row-wise on unnormalized
    vectors and ``gradient`` returns twice the Wirtinger derivative of it
    with respect to ``conj(v)``; the roof optimizer works entirely in those
    terms.  ``smooth(v, eps)``, when given, returns a smoothed ``(values,
    gradient)`` pair that tends to the exact one as ``eps -> 0``.
    """
    name: str
    unnormalized: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    smooth: Callable[[np.ndarray, float], tuple[np.ndarray, np.ndarray]] | None = None

    def __call__(self, psi) -> float:
        psi = np.asarray(psi, dtype=complex)
        n = np.linalg.norm(psi)
        if abs(n - 1) > NORM_TOL:
            raise ValidationError("normalized", f"state norm {n:.12g} is not 1")
        return float(self.unnormalized(psi[None, :])[0])


def _l1_rows(v: np.ndarray) -> np.ndarray:
    a = np.abs(v)
    return a.sum(axis=-1) ** 2 - (a ** 2).sum(axis=-1)


def _l1_grad(v: np.ndarray) -> np.ndarray:
    a = np.abs(v)
    unit = np.divide(v, a, out=np.zeros_like(v), where=a > 0)
    return 2 * a.sum(axis=-1, keepdims=True) * unit - 2 * v


def _cr_rows(v: np.ndarray) -> np.ndarray:
    a = np.abs(v) ** 2
    p = a.sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(a > 0, a * np.log2(np.where(a > 0, a, 1.0)), 0.0)
        pl = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return np.maximum(pl - term.sum(axis=-1), 0.0)


def _cr_grad(v: np.ndarray) -> np.ndarray:
    a = np.abs(v) ** 2
    p = a.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(a > 0, np.log2(np.where(a > 0, p / np.where(a > 0, a, 1.0), 1.0)), 0.0)
    return 2 * v * logs


def _l1_smooth(v: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    # |v_j| -> sqrt(|v_j|^2 + eps^2)
    a2 = np.abs(v) ** 2
    s = np.sqrt(a2 + eps * eps)
    tot = s.sum(axis=-1, keepdims=True)
    unit = np.divide(v, s, out=np.zeros_like(v), where=s > 0)
    return tot[:, 0] ** 2 - a2.sum(axis=-1), 2 * tot * unit - 2 * v


PURE_L1 = PureStateFunctional("l1", _l1_rows, _l1_grad, _l1_smooth)
PURE_RELATIVE_ENTROPY = PureStateFunctional("rel-entropy", _cr_rows, _cr_grad)

FUNCTIONALS = {
    "l1": PURE_L1,
    "rel-entropy": PURE_RELATIVE_ENTROPY,
}


def pure_c_l1(psi) -> float:
    """l1 coherence of a normalized pure state, ``(sum |psi_j|)^2 - 1``."""
    return PURE_L1(psi)


def pure_c_r(psi) -> float:
    """Entropy of the basis populations of a normalized pure state."""
    return PURE_RELATIVE_ENTROPY(psi)


def from_populations(name: str, f: Callable[[np.ndarray], float],
                     df: Callable[[np.ndarray], np.ndarray]) -> PureStateFunctional:
    """Functional ``psi -> f(|psi_1|^2, ..., |psi_d|^2)`` from ``f`` and its gradient.

    ``f`` should be nonnegative, symmetric, and vanish on ``(1, 0, ..., 0)``.
    """

    def rows(v):
        a = np.abs(v) ** 2
        p = a.sum(axis=-1)
        out = np.zeros(len(v))
        for i in np.flatnonzero(p > 0):
            out[i] = p[i] * f(a[i] / p[i])
        return out

    def grad(v):
        a = np.abs(v) ** 2
        p = a.sum(axis=-1)
        out = np.zeros_like(v)
        for i in np.flatnonzero(p > 0):
            q = a[i] / p[i]
            g = np.asarray(df(q), dtype=float)
            out[i] = 2 * v[i] * (f(q) + g - q @ g)
        return out

    return PureStateFunctional(name, rows, grad)
