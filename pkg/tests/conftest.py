"""Fixtures for qbench tests."""
from pathlib import Path

import pytest

from qbench.benchmarks import EnsembleSpec
from qbench.ensembles import StateFamily
from qbench.hub import Hub

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_path():
    """Directory holding the JSON spec and experiment fixtures."""
    return FIXTURES


@pytest.fixture
def qubit_spec():
    return EnsembleSpec.create(StateFamily.qudit(2), 1, 1, beta=1.0)


@pytest.fixture
def hub():
    """Hub with coarse quadrature settings and two workers."""
    return Hub({"name": "test", "workers": 2, "seed": 7, "n_max": 40})
