import numpy as np
import pytest

from krauscompress import rng


def random_matrix(gen, rows, cols=None):
    return rng.complex_normal(gen, (rows, cols or rows))


def random_hermitian(gen, dim):
    m = random_matrix(gen, dim)
    return (m + m.conj().T) / 2


def random_state(gen, dim, rank=None):
    return rng.random_density(gen, dim, rank)


@pytest.fixture
def gen():
    return rng.substream(1234, 0)
