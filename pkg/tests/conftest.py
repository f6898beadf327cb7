import numpy as np
import pytest

from koopman_cert import dictionaries, systems


@pytest.fixture
def two_state_chain():
    return systems.FiniteMarkovSystem(np.array([[0.7, 0.3], [0.3, 0.7]]))


@pytest.fixture
def indicator2():
    return dictionaries.indicator(2)


def random_ergodic_chain(n, seed):
    """Strictly positive rows: irreducible and aperiodic by construction."""
    g = np.random.Generator(np.random.Philox(seed=np.random.SeedSequence(seed)))
    A = g.random((n, n)) + 0.05
    return systems.FiniteMarkovSystem(A / A.sum(axis=1, keepdims=True))


@pytest.fixture
def five_state_chain():
    return random_ergodic_chain(5, 123)


@pytest.fixture
def monomial3():
    return dictionaries.monomial(2, scale=0.25)


@pytest.fixture
def golden():
    return systems.golden_rotation()
