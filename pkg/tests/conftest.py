import numpy as np
import pytest

from orbitdp.linalg import HermitianMatrix


def random_hermitian(d, rng):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return HermitianMatrix((a + a.conj().T) / 2)


def random_psd(d, rng, scale=1.0):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return HermitianMatrix(scale * a @ a.conj().T / d)


def random_unit_vector(d, rng, max_norm=1.0):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v) * max_norm


@pytest.fixture
def rng():
    return np.random.default_rng(0)
