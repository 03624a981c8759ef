import numpy as np
import pytest

from malab.geometry import BoundaryProfile, Domain2D


@pytest.fixture(scope="session")
def quartic_profile():
    return BoundaryProfile(k=4, beta=2.0, leading_coeff=1.0, half_width=1.0)


@pytest.fixture(scope="session")
def quartic_domain(quartic_profile):
    return Domain2D.from_profile(quartic_profile, height=1.0)


@pytest.fixture(scope="session")
def disk_domain():
    return Domain2D.disk(1.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
