import numpy as np
import pytest

from wignersource import bk_support, density, make_measure, support_intervals


@pytest.fixture(scope="session")
def two_atom():
    return make_measure([(-2.0, 0.5), (2.0, 0.5)])


@pytest.fixture(scope="session")
def delta0():
    return make_measure([(0.0, 1.0)])


@pytest.fixture(scope="session")
def three_atom():
    return make_measure([(-1.0, 0.2), (0.0, 0.3), (2.0, 0.5)])


@pytest.fixture(scope="session")
def a2_profile(two_atom):
    return density(two_atom, np.linspace(-6.0, 6.0, 2001))


@pytest.fixture(scope="session")
def a2_support(a2_profile):
    return support_intervals(a2_profile)


@pytest.fixture(scope="session")
def a2_edges():
    return bk_support(2.0)
