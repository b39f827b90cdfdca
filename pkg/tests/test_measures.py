import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coherence_roof.matcore import ValidationError, phase_conjugate
from coherence_roof.measures import (
    PURE_L1,
    PURE_RELATIVE_ENTROPY,
    BlochVector,
    binary_entropy,
    c_l1,
    c_r,
    from_populations,
    pure_c_l1,
    pure_c_r,
    qubit_cr,
    qubit_cr_roof,
)

from conftest import example_state, hs_state, seeds


def h(x):
    """Independent binary entropy."""
    if x in (0.0, 1.0):
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


PLUS = np.full((2, 2), 0.5)
Q = (1 + 1 / math.sqrt(2)) / 2


def test_c_l1_values():
    assert c_l1(np.diag([0.3, 0.7])) == 0
    assert c_l1(PLUS) == pytest.approx(1)
    assert c_l1(example_state(0.19)) == pytest.approx(2 * (0.01 + 0.19 + 0.2), abs=1e-15)


def test_c_r_values():
    assert c_r(np.diag([0.2, 0.3, 0.5])) == 0
    assert c_r(PLUS) == pytest.approx(1, abs=1e-12)
    b = BlochVector(1 / math.sqrt(2), 0, 0)
    assert c_r(b.to_matrix()) == pytest.approx(1 - h(Q), abs=1e-12)


def test_qubit_cr_values():
    for z in (-1, -0.3, 0, 0.8, 1):
        assert qubit_cr(BlochVector(0, 0, z)) == pytest.approx(0, abs=1e-15)
    assert qubit_cr(BlochVector(1 / math.sqrt(2), 0, 0)) == pytest.approx(0.399124, abs=1e-6)
    assert qubit_cr(BlochVector(1, 0, 0)) == pytest.approx(1)


def test_qubit_cr_roof_values():
    assert qubit_cr_roof(BlochVector(0, 0, 0.4)) == 0
    assert qubit_cr_roof(BlochVector(1 / math.sqrt(2), 0, 0)) == pytest.approx(0.600876, abs=1e-6)
    b = BlochVector(0.6, 0, 0.8)
    assert qubit_cr_roof(b) == pytest.approx(qubit_cr(b), abs=1e-12)
    assert qubit_cr_roof(b) == pytest.approx(h(0.9), abs=1e-12)


def test_bloch_rejects_outside_ball():
    with pytest.raises(ValidationError):
        BlochVector(1, 0.1, 0)


def test_pure_c_l1_values():
    assert pure_c_l1(np.array([0, 1, 0])) == 0
    assert pure_c_l1(np.ones(3) / math.sqrt(3)) == pytest.approx(2)
    assert pure_c_l1(np.array([math.sqrt(0.8), math.sqrt(0.2), 0])) == pytest.approx(0.8)
    with pytest.raises(ValidationError):
        pure_c_l1(np.array([1.0, 1.0]))


def test_pure_functionals_vanish_on_basis_states():
    for f in (PURE_L1, PURE_RELATIVE_ENTROPY):
        assert f(np.array([1, 0, 0])) == 0


def test_pure_c_r_is_population_entropy():
    psi = np.array([0.6, 0.8j])
    assert pure_c_r(psi) == pytest.approx(h(0.36), abs=1e-12)


def test_binary_entropy_clamps_roundoff():
    assert binary_entropy(1 + 1e-13) == 0
    with pytest.raises(ValueError):
        binary_entropy(1.1)


@pytest.mark.parametrize("f", [PURE_L1, PURE_RELATIVE_ENTROPY])
def test_functional_gradients_match_finite_differences(f, rng):
    for _ in range(10):
        v = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
        g = f.gradient(v)
        dv = rng.standard_normal(v.shape) + 1j * rng.standard_normal(v.shape)
        eps = 1e-6
        fd = (f.unnormalized(v + eps * dv).sum() - f.unnormalized(v - eps * dv).sum()) / (2 * eps)
        assert fd == pytest.approx(np.vdot(g, dv).real, rel=1e-6, abs=1e-8)


def test_l1_smoothing_converges(rng):
    v = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    vals, grad = PURE_L1.smooth(v, 1e-9)
    np.testing.assert_allclose(vals, PURE_L1.unnormalized(v), atol=1e-7)
    np.testing.assert_allclose(grad, PURE_L1.gradient(v), atol=1e-7)


def test_from_populations_reproduces_relative_entropy(rng):
    ent = from_populations(
        "entropy",
        lambda q: float(-np.sum(q[q > 0] * np.log2(q[q > 0]))),
        lambda q: -np.log2(np.where(q > 0, q, 1.0)) - 1 / np.log(2),
    )
    v = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
    np.testing.assert_allclose(ent.unnormalized(v), PURE_RELATIVE_ENTROPY.unnormalized(v), atol=1e-12)
    np.testing.assert_allclose(ent.gradient(v), PURE_RELATIVE_ENTROPY.gradient(v), atol=1e-10)


def test_roof_dominates_measure_on_grid():
    for x in np.linspace(0, 1, 41):
        for z in np.linspace(-1, 1, 41):
            if x * x + z * z > 1:
                continue
            b = BlochVector(x, 0, z)
            assert qubit_cr_roof(b) >= qubit_cr(b) - 1e-12


@given(st.floats(0, 1), st.floats(0, 2 * math.pi), st.floats(0, math.pi))
@settings(max_examples=200, deadline=None)
def test_qubit_cr_matches_matrix_formula(r, phi, alpha):
    b = BlochVector(r * math.sin(alpha) * math.cos(phi), r * math.sin(alpha) * math.sin(phi),
                    r * math.cos(alpha))
    assert qubit_cr(b) == pytest.approx(c_r(b.to_matrix()), abs=1e-10)


@given(seeds)
@settings(max_examples=60, deadline=None)
def test_phase_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 5))
    rho = hs_state(d, rng)
    out = phase_conjugate(rho, rng.uniform(-np.pi, np.pi, d))
    assert c_l1(out) == pytest.approx(c_l1(rho), abs=1e-12)
    assert c_r(out) == pytest.approx(c_r(rho), abs=1e-12)


@given(seeds, st.floats(0, 1))
@settings(max_examples=60, deadline=None)
def test_direct_sum_additivity(seed, p):
    rng = np.random.default_rng(seed)
    r1, r2 = hs_state(2, rng), hs_state(int(rng.integers(1, 4)), rng)
    d1, d2 = len(r1), len(r2)
    rho = np.zeros((d1 + d2, d1 + d2), dtype=complex)
    rho[:d1, :d1] = p * r1
    rho[d1:, d1:] = (1 - p) * r2
    assert c_l1(rho) == pytest.approx(p * c_l1(r1) + (1 - p) * c_l1(r2), abs=1e-12)


@given(seeds)
@settings(max_examples=60, deadline=None)
def test_l1_convexity(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 5))
    k = int(rng.integers(2, 5))
    states = [hs_state(d, rng) for _ in range(k)]
    p = rng.dirichlet(np.ones(k))
    mix = sum(pi * s for pi, s in zip(p, states))
    assert c_l1(mix) <= sum(pi * c_l1(s) for pi, s in zip(p, states)) + 1e-12
