"""Hamiltonian application and the Schrodinger right-hand side.

The kinetic term differentiates each particle coordinate twice with the
4th-order central first-difference stencil under zero extension (the state
is treated as vanishing outside the box). The repeated first difference is
antisymmetric, so its square is a symmetric operator and the discrete
Hamiltonian stays hermitian; it is also the same operator composition the
tensor module uses for density curvature, which keeps the balance-law
residuals free of avoidable route mismatch. The potential term sums the
radial pair potential over unordered particle pairs, which is exactly the
double-counted pair sum with its 1/2 factor folded in.
"""

import numpy as np

from . import stencils
from .errors import GridMismatchError
from .grids import Grid
from .system import SystemSpec
from .wavefield import WaveField


def pair_distance(grid: Grid, part_a, part_b):
    """|q_a - q_b| broadcast over the configuration grid for two particles
    given as (label, index)."""
    axes_a = grid.axes_of(*part_a)
    axes_b = grid.axes_of(*part_b)
    acc = 0.0
    for ka, kb in zip(axes_a, axes_b):
        diff = grid.coordinate(ka) - grid.coordinate(kb)
        acc = acc + diff * diff
    return np.sqrt(acc)


def potential_energy(grid: Grid, spec: SystemSpec):
    """Total potential V(Q) on the grid (zero array for kind 'none')."""
    pot = spec.potential
    out = np.zeros(grid.shape)
    if pot.kind == "none":
        return out
    particles = spec.particles()
    for a in range(len(particles)):
        for b in range(a + 1, len(particles)):
            la, lb = particles[a][0], particles[b][0]
            c = pot.coefficient(la, lb)
            if c == 0.0:
                continue
            r = pair_distance(grid, particles[a], particles[b])
            out = out + c * pot.radial(r)
    return out


def _check(psi: WaveField, spec: SystemSpec):
    if psi.spec.config_dim != spec.config_dim or psi.values.shape != psi.grid.shape:
        raise GridMismatchError("wave field and system spec are incompatible")


def apply_hamiltonian(psi: WaveField, spec: SystemSpec, potential=None) -> WaveField:
    """H psi = sum_particles -hbar^2/(2 m) laplacian_particle psi + V psi."""
    _check(psi, spec)
    grid = psi.grid
    out = np.zeros(grid.shape, dtype=np.complex128)
    for label, i in spec.particles():
        m = spec.sort(label).mass
        coef = -(spec.hbar**2) / (2.0 * m)
        for k in grid.axes_of(label, i):
            h = grid.axes[k].h
            first = stencils.derivative(psi.values, k, h, deriv=1, boundary="zero")
            out += coef * stencils.derivative(first, k, h, deriv=1, boundary="zero")
    if potential is None:
        potential = potential_energy(grid, spec)
    if np.any(potential):
        out += potential * psi.values
    return WaveField(out, grid, spec, psi.time_tag, validate=False)


def time_derivative(psi: WaveField, spec: SystemSpec, potential=None) -> WaveField:
    """d psi / dt = H psi / (i hbar), evaluated at the state's own instant."""
    hpsi = apply_hamiltonian(psi, spec, potential=potential)
    hpsi.values /= 1j * spec.hbar
    return hpsi
