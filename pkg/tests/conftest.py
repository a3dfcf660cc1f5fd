"""
Pytest configuration and fixtures.
"""
import numpy as np
import pytest

from app.models.system import StateSpaceSystem
from tests.utils import (
    create_gyrator,
    create_lc_oscillator,
    create_nonneg_fixture,
    create_point_mass,
    create_rc_pair,
    create_test_system,
)

MODULE_MARKERS = ("matcore", "lti", "certify", "passivity", "forms", "hankel", "geometry", "generators", "cli")


@pytest.fixture
def scalar() -> StateSpaceSystem:
    return create_test_system()


@pytest.fixture
def point_mass() -> StateSpaceSystem:
    return create_point_mass()


@pytest.fixture
def lc() -> StateSpaceSystem:
    return create_lc_oscillator()


@pytest.fixture
def rc_pair() -> StateSpaceSystem:
    return create_rc_pair()


@pytest.fixture
def nonneg() -> StateSpaceSystem:
    return create_nonneg_fixture()


@pytest.fixture
def gyrator() -> StateSpaceSystem:
    return create_gyrator()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


# Module markers for selective runs
def pytest_collection_modifyitems(config, items):
    """Add module markers to tests based on filename."""
    for item in items:
        for marker in MODULE_MARKERS:
            if f"test_{marker}" in item.nodeid:
                item.add_marker(getattr(pytest.mark, marker))
                break
