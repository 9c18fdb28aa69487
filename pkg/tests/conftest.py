import math

import numpy as np
import pytest

from qhydro.grids import build_grid
from qhydro.system import PairPotentialSpec, SortSpec, SystemSpec
from qhydro.wavefield import WaveField


def gauss(x, center=0.0, sigma=1.0, k=0.0):
    amp = (2 * math.pi * sigma**2) ** -0.25 * np.exp(-((x - center) ** 2) / (4 * sigma**2))
    return amp * np.exp(1j * k * x)


@pytest.fixture(scope="session")
def single_1d():
    """One free 1D particle, moderate grid; the workhorse for unit tests."""
    spec = SystemSpec((SortSpec("g", mass=1.0),), spatial_dim=1)
    grid = build_grid(spec, (-10.0, 10.0, 512))
    x = grid.axes[0].values
    psi = WaveField(gauss(x, k=2.0), grid, spec).normalized()
    return spec, grid, psi


@pytest.fixture(scope="session")
def two_sorts_1d():
    """Two distinguishable particles (one per sort) with harmonic coupling."""
    pot = PairPotentialSpec(kind="harmonic_coupling", spring=1.0)
    spec = SystemSpec(
        (SortSpec("a", mass=1.0), SortSpec("b", mass=2.0)), spatial_dim=1, potential=pot
    )
    grid = build_grid(spec, (-9.0, 9.0, 129))
    x = grid.axes[0].values[:, None]
    y = grid.axes[1].values[None, :]
    psi = WaveField(
        np.exp(-(x**2) / 2 - (y - 0.4) ** 2 / 1.5 + 0.7j * x - 0.3j * y), grid, spec
    ).normalized()
    return spec, grid, psi
