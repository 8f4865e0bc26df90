"""Shared solved profiles.  Each solve runs once per session."""

import numpy as np
import pytest

from spiralsheet.core import DOMAIN, FieldPair, GridSpec, Params
from spiralsheet.geometry import SpiralSolution
from spiralsheet.solver import solve

_REPORTS = {}


def solved(m: int):
    if m not in _REPORTS:
        _REPORTS[m] = solve(Params(m=m))
    return _REPORTS[m]


@pytest.fixture(scope="session")
def report32():
    return solved(32)


@pytest.fixture(scope="session")
def spiral32(report32):
    return SpiralSolution(report32.params, report32.x)


@pytest.fixture(scope="session")
def reports():
    return {m: solved(m) for m in (16, 32, 64)}


@pytest.fixture(scope="session")
def kaden_spiral():
    """The unperturbed Kaden profile (μ = 1) wrapped as a solution."""
    p = Params(m=32)
    return SpiralSolution(p, FieldPair.zeros(p.grid, DOMAIN))


@pytest.fixture
def small_grid():
    return GridSpec(theta_min=1e-2, theta_max=1e2, n_nodes=512)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
