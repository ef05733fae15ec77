import warnings

import numpy as np
import pytest

from omegacont import OmegaSet


@pytest.fixture(autouse=True)
def _quiet_stability_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*not addition stable.*")
        yield


@pytest.fixture
def nstar():
    return OmegaSet.positive_integers()


@pytest.fixture
def two_pi_i():
    return OmegaSet.two_pi_i_lattice()


@pytest.fixture
def gauss():
    return OmegaSet.gauss_integers()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
