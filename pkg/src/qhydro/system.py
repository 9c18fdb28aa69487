"""System description: particle sorts, pair potentials, global constants."""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ScopeError

MAX_CONFIG_DIM = 4  # desk-scale cap on d * (total particle count)


@dataclass(frozen=True)
class SortSpec:
    """One species of identical particles."""

    label: str
    mass: float
    count: int = 1
    charge: float = 0.0
    statistics: str = "distinguishable"  # "boson" | "fermion" | "distinguishable"

    def __post_init__(self):
        if self.mass <= 0:
            raise ConfigError(f"sort {self.label!r}: mass must be positive")
        if self.count < 1:
            raise ConfigError(f"sort {self.label!r}: count must be >= 1")
        if self.statistics not in ("boson", "fermion", "distinguishable"):
            raise ConfigError(f"sort {self.label!r}: unknown statistics {self.statistics!r}")


@dataclass(frozen=True)
class PairPotentialSpec:
    """Radial two-body potential, one functional form shared by all sort pairs.

    `coefficients[(a, b)]` scales the interaction between sorts a and b and
    must be symmetric in (a, b); missing pairs default to 1. A particle never
    interacts with itself.
    """

    kind: str = "none"  # "none" | "soft_coulomb" | "gaussian_well" | "harmonic_coupling"
    strength: float = 1.0
    softening: float = 1.0
    depth: float = 1.0
    width: float = 1.0
    spring: float = 1.0
    coefficients: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("none", "soft_coulomb", "gaussian_well", "harmonic_coupling"):
            raise ConfigError(f"unknown potential kind {self.kind!r}")
        for (a, b), c in self.coefficients.items():
            other = self.coefficients.get((b, a), c)
            if other != c:
                raise ConfigError(f"pair coefficients not symmetric for ({a}, {b})")

    def coefficient(self, a, b):
        return self.coefficients.get((a, b), self.coefficients.get((b, a), 1.0))

    def radial(self, r):
        """V(r) for the base form (before the per-pair coefficient)."""
        r = np.asarray(r)
        if self.kind == "none":
            return np.zeros_like(r)
        if self.kind == "soft_coulomb":
            return self.strength / np.sqrt(r * r + self.softening**2)
        if self.kind == "gaussian_well":
            return -self.depth * np.exp(-(r * r) / (2.0 * self.width**2))
        return 0.5 * self.spring * r * r

    def radial_derivative(self, r):
        """dV/dr, used for force densities; finite at r = 0 for every kind."""
        r = np.asarray(r)
        if self.kind == "none":
            return np.zeros_like(r)
        if self.kind == "soft_coulomb":
            return -self.strength * r / (r * r + self.softening**2) ** 1.5
        if self.kind == "gaussian_well":
            return self.depth * (r / self.width**2) * np.exp(-(r * r) / (2.0 * self.width**2))
        return self.spring * r


@dataclass(frozen=True)
class SystemSpec:
    """Particle content, spatial dimension and pair interaction of a system."""

    sorts: tuple
    spatial_dim: int
    potential: PairPotentialSpec = field(default_factory=PairPotentialSpec)
    hbar: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "sorts", tuple(self.sorts))
        if not self.sorts:
            raise ConfigError("need at least one particle sort")
        if self.spatial_dim not in (1, 2, 3):
            raise ConfigError("spatial_dim must be 1, 2 or 3")
        if self.hbar <= 0:
            raise ConfigError("hbar must be positive")
        labels = [s.label for s in self.sorts]
        if len(set(labels)) != len(labels):
            raise ConfigError("sort labels must be unique")
        if self.config_dim > MAX_CONFIG_DIM:
            raise ConfigError(
                f"configuration dimension {self.config_dim} exceeds the desk-scale "
                f"limit of {MAX_CONFIG_DIM}"
            )

    @property
    def config_dim(self):
        return self.spatial_dim * sum(s.count for s in self.sorts)

    @property
    def labels(self):
        return [s.label for s in self.sorts]

    def sort(self, label) -> SortSpec:
        for s in self.sorts:
            if s.label == label:
                return s
        raise ScopeError(f"unknown sort {label!r}")

    def particles(self):
        """(label, particle_index) in coordinate-set order; indices are 1-based."""
        out = []
        for s in self.sorts:
            out.extend((s.label, i) for i in range(1, s.count + 1))
        return out

    def replace_hbar(self, hbar) -> "SystemSpec":
        return SystemSpec(self.sorts, self.spatial_dim, self.potential, hbar)

    def content_hash(self) -> str:
        blob = json.dumps(
            {
                "sorts": [
                    [s.label, s.mass, s.count, s.charge, s.statistics] for s in self.sorts
                ],
                "d": self.spatial_dim,
                "hbar": self.hbar,
                "potential": [
                    self.potential.kind,
                    self.potential.strength,
                    self.potential.softening,
                    self.potential.depth,
                    self.potential.width,
                    self.potential.spring,
                    sorted((a, b, c) for (a, b), c in self.potential.coefficients.items()),
                ],
            },
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]
