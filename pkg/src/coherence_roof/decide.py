"""Exact decision of whether the l1 coherence equals its convex roof.

For qubits an explicit optimal decomposition always exists.  For qutrits the
states split into four situations by their zero pattern and off-diagonal
phases; the first three always admit an optimal decomposition, which is
constructed here, and the fourth reduces to a one-parameter PSD feasibility
problem in ``x1`` that is solved in closed form.

Internally decompositions are handled as stacks of unnormalized vectors
``sqrt(p_l) psi_l`` (rows), which keeps traces of sub-blocks implicit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .matcore import (
    MINOR_TOL,
    ZERO_ENTRY,
    ValidationError,
    as_density,
    is_psd_minors,
    perron_vector,
    phase_align_unitary,
    phase_conjugate,
    phases,
)
from .measures import BLOCH_TOL, PURE_L1, BlochVector, c_l1
from .roof import RECON_TOL, PureEnsemble, ensemble_average

PHASE_MATCH_TOL = 1e-9
CROSS_FLOOR = 1e-12
DET_TOL = 1e-12
AVERAGE_TOL = 1e-9
MAX_PEELS = 12


class Verdict(str, Enum):
    EQUAL = "EQUAL"
    STRICT = "STRICT"
    BOUNDARY = "BOUNDARY"


@dataclass(frozen=True)
class PhaseViolation:
    l: int
    j: int
    k: int
    mismatch: float


@dataclass(frozen=True)
class Certificate:
    """Evidence that no x1 makes the residual block PSD."""
    x1_star: float
    max_det: float
    failing_minor: tuple[int, ...] | None = None
    interval: tuple[float, float] | None = None

    def to_dict(self) -> dict:
        return {
            "x1_star": self.x1_star,
            "max_det": self.max_det,
            "failing_minor": list(self.failing_minor) if self.failing_minor else None,
            "interval": list(self.interval) if self.interval else None,
        }


@dataclass(frozen=True)
class DecisionReport:
    verdict: Verdict
    situation: str
    witness: PureEnsemble | None = None
    certificate: Certificate | None = None
    trace: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "situation": self.situation,
            "witness": self.witness.to_dict() if self.witness is not None else None,
            "certificate": self.certificate.to_dict() if self.certificate is not None else None,
            "trace": list(self.trace),
        }


# -- phase-alignment criterion -----------------------------------------------

def theorem1_check(rho, e: PureEnsemble, tol: float = PHASE_MATCH_TOL
                   ) -> tuple[bool, PhaseViolation | None]:
    """Check that every cross term of every ensemble state carries rho's phase.

    Cross terms below 1e-12 in modulus, and entries of rho below 1e-14, are
    not constrained.
    """
    rho = np.asarray(rho, dtype=complex)
    e.check_reconstructs(rho)
    th = phases(rho)
    d = rho.shape[0]
    for l, psi in enumerate(e.states):
        cross = np.outer(psi, psi.conj())
        for j in range(d):
            for k in range(j + 1, d):
                if abs(cross[j, k]) <= CROSS_FLOOR or abs(rho[j, k]) < ZERO_ENTRY:
                    continue
                mismatch = float(np.angle(cross[j, k] * np.exp(-1j * th[j, k])))
                if abs(mismatch) > tol:
                    return False, PhaseViolation(l, j, k, mismatch)
    return True, None


# -- qubits -------------------------------------------------------------------

@dataclass(frozen=True)
class QubitPiece:
    weight: float
    direction: tuple[float, float, float]
    scale: float  # transverse part of direction = scale * (x, y)


def _unit_bloch(b: BlochVector) -> BlochVector:
    r = b.r
    return BlochVector(b.x / r, b.y / r, b.z / r)


def qubit_pieces(b: BlochVector) -> list[QubitPiece]:
    """Optimal Bloch-sphere decomposition pieces for the l1 roof of a qubit.

    Pure states give one piece.  Inside the double cone ``t + |z| <= 1``
    (``t`` the transverse radius) the state splits into a transverse piece
    and two pole pieces; outside it into two pieces in the plane through
    the z axis.
    """
    x, y, z = b.x, b.y, b.z
    t = b.transverse
    r = b.r
    if r >= 1 - BLOCH_TOL:
        n = (x / r, y / r, z / r)
        return [QubitPiece(1.0, n, 1 / r)]
    sgn = 1.0 if z >= 0 else -1.0
    pieces: list[QubitPiece] = []
    if t + abs(z) <= 1:
        if t > 0:
            pieces.append(QubitPiece(t, (x / t, y / t, 0.0), 1 / t))
        low = (1 - t - abs(z)) / 2
        if low > 0:
            pieces.append(QubitPiece(low, (0.0, 0.0, -sgn), 0.0))
        pieces.append(QubitPiece((1 - t + abs(z)) / 2, (0.0, 0.0, sgn), 0.0))
        return pieces
    s = (1 - r * r) / (2 * t * (1 - t))
    if s * t > 0:
        pieces.append(QubitPiece(s * t, (x / t, y / t, 0.0), 1 / t))
    w2 = float(np.sqrt(((1 - s) * t) ** 2 + z * z))
    pieces.append(QubitPiece(w2, ((1 - s) * x / w2, (1 - s) * y / w2, z / w2), (1 - s) / w2))
    return pieces


def _bloch_state(n) -> np.ndarray:
    nx, ny, nz = n
    nz = min(max(nz, -1.0), 1.0)
    c = np.sqrt((1 + nz) / 2)
    s = np.sqrt((1 - nz) / 2)
    t = np.hypot(nx, ny)
    ph = complex(nx, ny) / t if t > 0 else 1.0
    return np.array([c, s * ph], dtype=complex)


def qubit_decomposition(b: BlochVector) -> PureEnsemble:
    """Decomposition of a qubit state attaining its l1 coherence."""
    pieces = qubit_pieces(b)
    weights = np.array([p.weight for p in pieces])
    states = np.array([_bloch_state(p.direction) for p in pieces])
    return PureEnsemble(weights / weights.sum(), states)


def _qubit_vectors(m: np.ndarray) -> np.ndarray:
    """Unnormalized optimal vectors for a 2x2 PSD block of any trace."""
    tr = float(m[0, 0].real + m[1, 1].real)
    if tr <= 0:
        return np.zeros((0, 2), dtype=complex)
    off = 2 * m[1, 0] / tr
    vec = np.array([off.real, off.imag, (m[0, 0].real - m[1, 1].real) / tr])
    r = np.linalg.norm(vec)
    if r > 1 + 1e-6:
        raise ValidationError("block-psd", f"2x2 block is not PSD (Bloch radius {r:.9g})")
    if r > 1:
        vec = vec / r
    pieces = qubit_pieces(BlochVector(*vec))
    return np.array([np.sqrt(p.weight * tr) * _bloch_state(p.direction) for p in pieces])


# -- qutrits: situations 1-3 ---------------------------------------------------

def _embed(vecs: np.ndarray, idx, d: int) -> np.ndarray:
    out = np.zeros((len(vecs), d), dtype=complex)
    out[:, list(idx)] = vecs
    return out


def _components(m: np.ndarray) -> list[list[int]]:
    d = m.shape[0]
    seen, comps = set(), []
    for root in range(d):
        if root in seen:
            continue
        comp, stack = [], [root]
        seen.add(root)
        while stack:
            j = stack.pop()
            comp.append(j)
            for k in range(d):
                if k not in seen and abs(m[j, k]) >= ZERO_ENTRY:
                    seen.add(k)
                    stack.append(k)
        comps.append(sorted(comp))
    return comps


def _first_zero_pair(m: np.ndarray) -> tuple[int, int] | None:
    d = m.shape[0]
    for j in range(d):
        for k in range(j + 1, d):
            if abs(m[j, k]) < ZERO_ENTRY:
                return j, k
    return None


def _split_chain(m: np.ndarray, pair: tuple[int, int], log: list[str]) -> np.ndarray:
    """Relabel so the zero pair is (0, 2), peel the rank-one (0, 1) block,
    and decompose the remaining (1, 2) block as a qubit."""
    j, k = pair
    mid = ({0, 1, 2} - {j, k}).pop()
    perm = [j, mid, k]
    p = m[np.ix_(perm, perm)]
    first = np.array([np.sqrt(p[0, 0].real), np.conj(p[0, 1]) / np.sqrt(p[0, 0].real), 0.0])
    rest = p[1:, 1:].copy()
    rest[0, 0] -= abs(p[0, 1]) ** 2 / p[0, 0].real
    det = float((rest[0, 0] * rest[1, 1]).real - abs(rest[0, 1]) ** 2)
    if rest[0, 0].real < -1e-10 or det < -1e-10:
        raise ValidationError("block-psd", f"second block not PSD (det {det:.3e})")
    log.append(f"split on zero pair {pair}: rank-one block on {(perm[0], perm[1])}, "
               f"qubit block on {(perm[1], perm[2])}")
    vecs = np.vstack([first[None, :], _embed(_qubit_vectors(rest), [1, 2], 3)])
    out = np.zeros_like(vecs)
    out[:, perm] = vecs
    return out


def _vectors_aligned(m: np.ndarray, log: list[str]) -> np.ndarray:
    """Optimal vectors for a PSD block of dimension <= 3 whose zero pattern
    or phases already guarantee equality (situations 1-3)."""
    m = np.asarray(m, dtype=complex)
    d = m.shape[0]
    if float(np.trace(m).real) <= ZERO_ENTRY:
        return np.zeros((0, d), dtype=complex)
    diag = m.diagonal().real
    if np.any(diag < ZERO_ENTRY):
        keep = [i for i in range(d) if diag[i] >= ZERO_ENTRY]
        log.append(f"zero diagonal: reduce to indices {keep}")
        return _embed(_vectors_aligned(m[np.ix_(keep, keep)], log), keep, d)
    if d == 1:
        return np.array([[np.sqrt(diag[0]) + 0j]])
    if d == 2:
        return _qubit_vectors(m)
    comps = _components(m)
    if len(comps) > 1:
        log.append(f"direct sum over blocks {comps}")
        return np.vstack([_embed(_vectors_aligned(m[np.ix_(c, c)], log), c, d) for c in comps])
    pair = _first_zero_pair(m)
    if pair is not None:
        return _split_chain(m, pair, log)
    theta = phase_align_unitary(m)
    if theta is None:
        raise ValueError("block has inconsistent phases; no phase-aligned decomposition")
    log.append(f"phase-align with theta = {np.round(theta, 12).tolist()}")
    plus = phase_conjugate(m, theta).real
    vecs, _ = _peel(plus, log)
    return vecs * np.exp(-1j * theta)[None, :]


def _peel(plus: np.ndarray, log: list[str], max_peels: int = MAX_PEELS) -> tuple[np.ndarray, int]:
    r = np.array(plus, dtype=float)
    out = []
    peels = 0
    while float(np.trace(r)) > ZERO_ENTRY:
        if np.min(r) < ZERO_ENTRY:
            log.append("residual has a zero entry: hand over to the zero-pattern route")
            out.extend(_vectors_aligned(r, log))
            break
        if peels >= max_peels:
            raise ArithmeticError(f"peeling did not finish within {max_peels} peels")
        lam, chi = perron_vector(r)
        ratios = r / np.outer(chi, chi)
        jk = np.unravel_index(np.argmin(ratios), ratios.shape)
        t0 = min(lam, float(ratios[jk]))
        out.append(np.sqrt(t0) * chi.astype(complex))
        r = r - t0 * np.outer(chi, chi)
        r = (r + r.T) / 2
        peels += 1
        if ratios[jk] <= lam:
            r[jk] = r[jk[::-1]] = 0.0
            log.append(f"peel {peels}: t0 = {t0:.9g} zeroes entry {tuple(int(i) for i in jk)}")
        else:
            log.append(f"peel {peels}: t0 = lambda_max = {t0:.9g}")
        ok, cert = is_psd_minors(r)
        if not ok:
            raise ArithmeticError(f"peel residual lost PSD at minor {cert.indices} ({cert.value:.3e})")
    if not out:
        return np.zeros((0, plus.shape[0]), dtype=complex), peels
    return np.array(out), peels


def peel_positive(rho_plus) -> PureEnsemble:
    """Decompose an entrywise-nonnegative 3x3 state by peeling Perron projectors.

    Each peel removes the largest multiple of the Perron projector that
    keeps the residual entrywise nonnegative and PSD.  Once an entry of the
    residual vanishes it is finished through the zero-pattern route.  All
    amplitudes in the result are real and nonnegative.
    """
    rho_plus = as_density(rho_plus)
    if rho_plus.shape != (3, 3):
        raise ValidationError("dim", "peeling needs a 3x3 matrix")
    if np.max(np.abs(rho_plus.imag)) > MINOR_TOL or np.min(rho_plus.real) < -ZERO_ENTRY:
        raise ValidationError("nonnegative", "matrix must be real and entrywise nonnegative")
    vecs, _ = _peel(rho_plus.real, [])
    return PureEnsemble.from_vectors(vecs)


def split_situation2(rho) -> PureEnsemble:
    """Optimal decomposition of a 3x3 state with a vanishing off-diagonal pair."""
    rho = as_density(rho)
    if rho.shape != (3, 3):
        raise ValidationError("dim", "needs a 3x3 matrix")
    if _first_zero_pair(rho) is None:
        raise ValidationError("situation", "no off-diagonal entry vanishes")
    if np.any(rho.diagonal().real < ZERO_ENTRY):
        raise ValidationError("situation", "a diagonal entry vanishes")
    return PureEnsemble.from_vectors(_vectors_aligned(rho, []))


# -- qutrits: situation 4 -------------------------------------------------------

@dataclass(frozen=True)
class X1Problem:
    """``det rho_bar(x1) = a - b*x1 - c/x1`` on ``lo <= x1 <= hi``."""
    a: float
    b: float
    c: float
    lo: float
    hi: float
    rho11: float
    rho22: float

    def det(self, x1):
        x1 = np.asarray(x1, dtype=float)
        return self.a - self.b * x1 - self.c / x1

    def maximizer(self) -> float:
        x = np.sqrt(self.c / self.b) if self.b > 0 else self.hi
        return float(min(max(x, self.lo), self.hi))


def x1_problem(aligned) -> X1Problem:
    """Coefficients for a state already conjugated so that its (0,1) and
    (0,2) entries are real and nonnegative."""
    m = np.asarray(aligned, dtype=complex)
    r11, r22, r33 = m.diagonal().real
    a12, a13, a23 = abs(m[0, 1]) ** 2, abs(m[0, 2]) ** 2, abs(m[1, 2]) ** 2
    b = r22 * r33 - a23
    c = a12 * (r11 * r33 - a13)
    a = r11 * b + a12 * r33 - a13 * r22
    lo = a12 * r33 / b if b > 0 else np.inf
    hi = r11 - a13 / r33
    return X1Problem(float(a), float(b), float(c), float(lo), float(hi), float(r11), float(r22))


def rho_bar(aligned, x1: float) -> np.ndarray:
    """Residual after removing the rank-one (0, 1) block with (0,0) entry ``x1``."""
    m = np.array(aligned, dtype=complex)
    m[0, 0] -= x1
    m[1, 1] -= abs(m[0, 1]) ** 2 / x1
    m[0, 1] = m[1, 0] = 0.0
    return m


def _verify_witness(rho: np.ndarray, e: PureEnsemble) -> None:
    e.check_reconstructs(rho, RECON_TOL)
    ok, bad = theorem1_check(rho, e)
    if not ok:
        raise ArithmeticError(f"witness violates phase alignment: {bad}")
    gap = ensemble_average(e, PURE_L1) - c_l1(rho)
    if abs(gap) > AVERAGE_TOL:
        raise ArithmeticError(f"witness average misses the l1 coherence by {gap:.3e}")


def _equal(rho: np.ndarray, vecs: np.ndarray, situation: str, log: list[str]) -> DecisionReport:
    e = PureEnsemble.from_vectors(vecs)
    _verify_witness(rho, e)
    log.append(f"witness with {len(e)} states verified")
    return DecisionReport(Verdict.EQUAL, situation, witness=e, trace=tuple(log))


def _situation4(rho: np.ndarray, log: list[str]) -> DecisionReport:
    th = phases(rho)
    theta = np.array([0.0, th[0, 1], th[0, 2]])
    aligned = np.array(phase_conjugate(rho, theta))
    rel = float(np.angle(aligned[1, 2]))
    log.append(f"situation 4: conjugate by theta = {np.round(theta, 12).tolist()}, "
               f"residual phase on (1,2) = {rel:.12g}")
    prob = x1_problem(aligned)
    log.append(f"det rho_bar(x1) = {prob.a:.9g} - {prob.b:.9g}*x1 - {prob.c:.9g}/x1 "
               f"on [{prob.lo:.9g}, {prob.hi:.9g}]")
    if not prob.lo <= prob.hi:
        # every x1 breaks the (1,2) minor (below lo) or the (0,2) minor (above hi)
        x1 = float(min(max(np.sqrt(prob.c / prob.b) if prob.b > 0 else prob.hi, 1e-300), prob.rho11))
        ok, cert = is_psd_minors(rho_bar(aligned, x1))
        log.append("x1 interval empty: a 2x2 minor of rho_bar fails everywhere")
        return DecisionReport(
            Verdict.STRICT, "S4-strict",
            certificate=Certificate(x1, float(prob.det(x1)),
                                    cert.indices if cert is not None else None,
                                    (prob.lo, prob.hi)),
            trace=tuple(log))
    x1 = prob.maximizer()
    best = float(prob.det(x1))
    log.append(f"max det = {best:.9g} at x1 = {x1:.9g}")
    if best >= DET_TOL:
        bar = rho_bar(aligned, x1)
        ok, cert = is_psd_minors(bar)
        if not ok:
            raise ArithmeticError(f"rho_bar not PSD at the maximizer: {cert}")
        head = np.array([[np.sqrt(x1), np.sqrt(abs(aligned[0, 1]) ** 2 / x1), 0.0]], dtype=complex)
        vecs = np.vstack([head, _vectors_aligned(bar, log)])
        vecs = vecs * np.exp(-1j * theta)[None, :]
        return _equal(rho, vecs, "S4-equal", log)
    cert = Certificate(x1, best, None, (prob.lo, prob.hi))
    if best < -DET_TOL:
        return DecisionReport(Verdict.STRICT, "S4-strict", certificate=cert, trace=tuple(log))
    return DecisionReport(Verdict.BOUNDARY, "S4-boundary", certificate=cert, trace=tuple(log))


def decide_equality_d3(rho) -> DecisionReport:
    """Decide whether the l1 coherence of a qutrit state equals its convex roof."""
    rho = np.array(as_density(rho))
    if rho.shape != (3, 3):
        raise ValidationError("dim", f"expected a 3x3 state, got {rho.shape}")
    log: list[str] = []
    diag = rho.diagonal().real
    if np.any(diag < ZERO_ENTRY):
        log.append("situation 1: a diagonal entry vanishes")
        return _equal(rho, _vectors_aligned(rho, log), "S1", log)
    if _first_zero_pair(rho) is not None:
        log.append("situation 2: an off-diagonal entry vanishes")
        return _equal(rho, _vectors_aligned(rho, log), "S2", log)
    if phase_align_unitary(rho) is not None:
        log.append("situation 3: phases satisfy theta23 = theta13 - theta12")
        return _equal(rho, _vectors_aligned(rho, log), "S3", log)
    return _situation4(rho, log)


def decide_qubit(rho) -> DecisionReport:
    rho = np.array(as_density(rho))
    b = BlochVector.from_matrix(rho)
    e = qubit_decomposition(b)
    _verify_witness(rho, e)
    return DecisionReport(Verdict.EQUAL, "d2", witness=e,
                          trace=(f"qubit with Bloch vector ({b.x:.9g}, {b.y:.9g}, {b.z:.9g})",))


def decide(rho) -> DecisionReport:
    """Dispatch on dimension: qubits always EQUAL, qutrits through the case analysis."""
    d = np.asarray(rho).shape[0]
    if d == 2:
        return decide_qubit(rho)
    if d == 3:
        return decide_equality_d3(rho)
    if d == 1:
        rho = as_density(rho)
        return DecisionReport(Verdict.EQUAL, "d1", witness=PureEnsemble(np.ones(1), np.ones((1, 1))))
    raise ValidationError("dimension", f"exact decision supports d <= 3, got d = {d}; use the roof estimator")
