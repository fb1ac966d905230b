# tests/conftest.py

import numpy as np
import pytest

from StrategicDynamics.game_model import BASELINE, MANIPULATION_PROOF, RECOURSE, GameParameters


@pytest.fixture
def params():
    """Default parameters: lambda=50, rho=10, b=50, c_F=1, c_I=5, p_G=0.5, r=1."""
    return GameParameters()


@pytest.fixture
def baseline():
    return BASELINE


@pytest.fixture
def manipulation_proof():
    return MANIPULATION_PROOF


@pytest.fixture
def recourse():
    return RECOURSE


@pytest.fixture(params=[BASELINE, MANIPULATION_PROOF, RECOURSE], ids=lambda s: s.name)
def scenario(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
