import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from groupsos.algebra import AlgebraElement, marginals
from groupsos.groups import cyclic_product, free_abelian

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.diag([1.0, -1.0]).astype(complex)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def Z():
    return free_abelian(1)


@pytest.fixture
def Z2():
    return free_abelian(2)


@pytest.fixture
def C4():
    return cyclic_product(4)


def c4_example_element():
    r = 2 ** -0.5
    ph = np.exp(1j * math.pi / 4)
    return AlgebraElement.from_map(cyclic_product(4), {0: 1.0, 1: r * ph, 3: r * np.conj(ph)}, 1)


def random_gram_element(rng, sigma, rank=None, n=1):
    """An element of Q_n(Sigma) together with the Gram matrix that built it."""
    m = len(sigma) * n
    r = rank or m
    C = rng.normal(size=(m, r)) + 1j * rng.normal(size=(m, r))
    G = C @ C.conj().T
    return marginals(G, sigma, n), G
