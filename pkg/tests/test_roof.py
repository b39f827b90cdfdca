import math

import numpy as np
import pytest
from hypothesis import given, settings

from coherence_roof.matcore import ValidationError
from coherence_roof.measures import (
    PURE_L1,
    PURE_RELATIVE_ENTROPY,
    BlochVector,
    c_l1,
    qubit_cr_roof,
)
from coherence_roof.roof import (
    PureEnsemble,
    ensemble_average,
    qubit_roof_oracle,
    roof_upper,
)

from conftest import hs_state, seeds


def test_pure_state_returns_exact_value():
    psi = np.array([math.sqrt(0.8), math.sqrt(0.2), 0])
    res = roof_upper(np.outer(psi, psi.conj()), PURE_L1)
    assert res.value == pytest.approx(0.8, abs=1e-14)
    assert len(res.ensemble) == 1


def test_qubit_l1_roof_example():
    rho = BlochVector(1 / math.sqrt(2), 0, 0).to_matrix()
    res = roof_upper(rho, PURE_L1, restarts=4, tol=1e-12)
    assert res.value == pytest.approx(1 / math.sqrt(2), abs=1e-6)


def test_qubit_relative_entropy_roof_example():
    b = BlochVector(1 / math.sqrt(2), 0, 0)
    res = roof_upper(b.to_matrix(), PURE_RELATIVE_ENTROPY, restarts=4, tol=1e-12)
    assert res.value == pytest.approx(qubit_cr_roof(b), abs=1e-4)


def test_ensemble_average_examples():
    e = PureEnsemble(np.array([0.5, 0.5]), np.array([[1, 0], [0, 1]], dtype=complex))
    assert ensemble_average(e, PURE_L1) == 0
    plus = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    e = PureEnsemble(np.array([0.5, 0.5]), plus.astype(complex))
    assert ensemble_average(e, PURE_L1) == pytest.approx(1)
    np.testing.assert_allclose(e.density(), np.eye(2) / 2, atol=1e-15)


def test_ensemble_validation():
    with pytest.raises(ValidationError):
        PureEnsemble(np.array([0.5, 0.4]), np.eye(2, dtype=complex))
    with pytest.raises(ValidationError):
        PureEnsemble(np.array([0.5, 0.5]), 2 * np.eye(2, dtype=complex))


def test_example_witness_average(rho17):
    from coherence_roof.decide import decide
    rep = decide(rho17)
    assert ensemble_average(rep.witness, PURE_L1) == pytest.approx(0.76, abs=1e-9)


def test_oracle_examples():
    assert qubit_roof_oracle(BlochVector(0, 0, 0.5), PURE_L1) == pytest.approx(0, abs=1e-12)
    b = BlochVector(1 / math.sqrt(2), 0, 0)
    assert qubit_roof_oracle(b, PURE_RELATIVE_ENTROPY) == pytest.approx(qubit_cr_roof(b), abs=1e-3)
    assert qubit_roof_oracle(BlochVector(0.5, 0, 0.2), PURE_L1) == pytest.approx(0.5, abs=1e-6)


def test_oracle_rejects_coarse_grid():
    with pytest.raises(ValueError):
        qubit_roof_oracle(BlochVector(0.1, 0, 0), PURE_L1, grid_n=45)


def test_oracle_nested_grids_do_not_increase():
    b = BlochVector(0.3, 0.2, -0.4)
    coarse = qubit_roof_oracle(b, PURE_RELATIVE_ENTROPY, grid_n=90, refine=False)
    fine = qubit_roof_oracle(b, PURE_RELATIVE_ENTROPY, grid_n=180, refine=False)
    assert fine <= coarse + 1e-15


def test_warm_start_is_idempotent(rho17):
    first = roof_upper(rho17, PURE_L1, restarts=2, tol=1e-12)
    again = roof_upper(rho17, PURE_L1, restarts=1, tol=1e-12, init=first.ensemble)
    assert again.value <= first.value + 1e-12


def test_ensemble_reconstructs_state(rng):
    rho = hs_state(2, rng)
    res = roof_upper(rho, PURE_L1, ensemble_size=4, restarts=2)
    assert res.ensemble.reconstruction_error(rho) <= 1e-8
    assert len(res.ensemble) <= 4


def test_rejects_ensemble_below_rank(rng):
    with pytest.raises(ValidationError) as info:
        roof_upper(hs_state(3, rng), PURE_L1, ensemble_size=2)
    assert info.value.invariant == "ensemble-size"


def test_result_independent_of_workers(rng):
    rho = hs_state(3, rng)
    one = roof_upper(rho, PURE_L1, restarts=3, seed=5, workers=1)
    many = roof_upper(rho, PURE_L1, restarts=3, seed=5, workers=3)
    assert one.value == many.value
    assert one.restart_values == many.restart_values


def test_qubit_l1_roof_equals_measure_on_random_states(rng):
    for _ in range(200):
        rho = hs_state(2, rng)
        res = roof_upper(rho, PURE_L1, restarts=2, tol=1e-12)
        gap = res.value - c_l1(rho)
        assert -1e-8 <= gap <= 1e-4


@given(seeds)
@settings(max_examples=15, deadline=None)
def test_roof_dominates_l1(seed):
    rng = np.random.default_rng(seed)
    rho = hs_state(3, rng)
    res = roof_upper(rho, PURE_L1, restarts=2)
    assert res.value >= c_l1(rho) - 1e-8
    assert res.ensemble.reconstruction_error(rho) <= 1e-8


def test_strict_example_has_positive_gap(rho19):
    res = roof_upper(rho19, PURE_L1, restarts=4, tol=1e-12)
    assert res.value - c_l1(rho19) == pytest.approx(0.00849, abs=5e-4)
