"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from pe3d.fields import HorizontalField
from pe3d.grid import GridSpec


@pytest.fixture(scope="session")
def grid8() -> GridSpec:
    return GridSpec(n1=8, n2=8, nz=8)


@pytest.fixture(scope="session")
def grid12() -> GridSpec:
    return GridSpec(L1=1.5, L2=0.8, h=1.2, n1=12, n2=10, nz=8)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240824)


def raw_field(grid: GridSpec, rng: np.random.Generator) -> HorizontalField:
    """A raw Gaussian field with no boundary or constraint structure."""
    return HorizontalField(rng.standard_normal((2,) + grid.shape), grid)
