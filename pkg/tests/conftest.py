"""Shared pytest fixtures."""

import json
from pathlib import Path

import pytest

from mlmctdhb.models import MixtureModel

from .helpers import make_model

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def scenario_document() -> dict:
    """The attractive double-well scenario as a decoded JSON document."""
    with open(FIXTURES / "scenario_attractive.json") as f:
        return json.load(f)


@pytest.fixture
def two_species_model() -> MixtureModel:
    """S=2, N=(2, 3), m=(3, 2), M=(3, 2), interacting, on a 12-point grid."""
    return make_model([2, 3], [3, 2], [3, 2], g=[0.3, 0.2], inter=0.15)


@pytest.fixture
def three_species_model() -> MixtureModel:
    """S=3 with a single-particle species, N=(2, 1, 3), m=(2, 2, 2), M=(2, 2, 3)."""
    return make_model([2, 1, 3], [2, 2, 2], [2, 2, 3], g=[0.2, 0.0, 0.1], inter=0.1)
