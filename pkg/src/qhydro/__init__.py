"""Grid-based quantum-hydrodynamics field diagnostics.

Builds multi-sort wave functions on configuration-space grids, reduces them
to one-particle hydrodynamic fields (densities, currents, velocities,
stress tensors in two gauges) and verifies the balance laws and tensor
identities those fields satisfy, in Cartesian and cylindrical coordinates.
"""

from .errors import (
    CapExceededError,
    ConfigError,
    GridMismatchError,
    QhydroError,
    ScopeError,
    SymmetryError,
    ZeroNormError,
)
from .grids import Axis, Grid, PhysicalGrid, build_grid, marginalize
from .system import PairPotentialSpec, SortSpec, SystemSpec
from .wavefield import MadelungView, WaveField, load_wavefield, save_wavefield, symmetrize

__version__ = "0.1.0"

__all__ = [
    "Axis",
    "CapExceededError",
    "ConfigError",
    "Grid",
    "GridMismatchError",
    "MadelungView",
    "PairPotentialSpec",
    "PhysicalGrid",
    "QhydroError",
    "ScopeError",
    "SortSpec",
    "SymmetryError",
    "SystemSpec",
    "WaveField",
    "ZeroNormError",
    "build_grid",
    "load_wavefield",
    "marginalize",
    "save_wavefield",
    "symmetrize",
    "__version__",
]
