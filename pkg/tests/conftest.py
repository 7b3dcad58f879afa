import numpy as np
import pytest

from disslab.fields import SpectralConvention
from disslab.toral import ToralAutomorphism


@pytest.fixture(scope="session")
def cat():
    return ToralAutomorphism(((2, 1), (1, 1)))


@pytest.fixture(scope="session")
def lattice2():
    return SpectralConvention(2, "lattice")


@pytest.fixture(scope="session")
def geometric2():
    return SpectralConvention(2, "geometric")


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
