import pytest

from reminiq.domain import RewardSpec
from reminiq.patient.generator import default_model


@pytest.fixture(scope="session")
def model():
    """Default patient model, seed 0."""
    return default_model(0)


@pytest.fixture(scope="session")
def r1():
    return RewardSpec.preset("R1")


@pytest.fixture(scope="session")
def r2():
    return RewardSpec.preset("R2")
