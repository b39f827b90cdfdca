import numpy as np
import pytest
from hypothesis import strategies as st


def example_state(rho13: float) -> np.ndarray:
    """The qutrit family with entries 0.1, 0.01, |rho13|, 0.2i, 0.8."""
    return np.array([[0.1, 0.01, rho13],
                     [0.01, 0.1, 0.2j],
                     [rho13, -0.2j, 0.8]])


def hs_state(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    g = rng.standard_normal((dim, rank or dim)) + 1j * rng.standard_normal((dim, rank or dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(dim: int, rng: np.random.Generator, shift: float = 0.0) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / 2 + shift * np.eye(dim)


@pytest.fixture
def rho17():
    return example_state(0.17)


@pytest.fixture
def rho19():
    return example_state(0.19)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


seeds = st.integers(min_value=0, max_value=2**32 - 1)
