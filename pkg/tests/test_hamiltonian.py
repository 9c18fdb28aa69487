import math

import numpy as np
import pytest

from conftest import gauss
from qhydro.grids import build_grid, trapezoid_weights
from qhydro.hamiltonian import apply_hamiltonian, pair_distance, potential_energy, time_derivative
from qhydro.system import PairPotentialSpec, SortSpec, SystemSpec
from qhydro.wavefield import WaveField


def test_kinetic_matches_oscillator_ground_state():
    spec = SystemSpec((SortSpec("g", mass=1.0),), 1)
    errs = []
    for n in (513, 1025):
        grid = build_grid(spec, (-12.0, 12.0, n))
        x = grid.axes[0].values
        psi = WaveField(np.pi**-0.25 * np.exp(-(x**2) / 2), grid, spec)
        hpsi = apply_hamiltonian(psi, spec)
        ref = -0.5 * (x**2 - 1) * psi.values  # -psi''/2 in closed form
        errs.append(np.max(np.abs(hpsi.values - ref)))
    assert errs[0] / errs[1] > 12  # 4th order
    assert errs[1] < 5e-7


def test_real_operator_on_real_state(two_sorts_1d):
    spec, grid, _ = two_sorts_1d
    x = grid.axes[0].values[:, None]
    y = grid.axes[1].values[None, :]
    psi = WaveField(np.exp(-(x**2) - (y**2) / 2), grid, spec)
    hpsi = apply_hamiltonian(psi, spec)
    assert np.max(np.abs(hpsi.values.imag)) == 0.0


def test_pair_potential_counts_both_orderings():
    pot = PairPotentialSpec(kind="harmonic_coupling", spring=0.8)
    spec = SystemSpec((SortSpec("a", mass=1.0), SortSpec("b", mass=1.0)), 1, potential=pot)
    grid = build_grid(spec, (-6.0, 6.0, 65))
    x = grid.axes[0].values[:, None]
    y = grid.axes[1].values[None, :]
    v = potential_energy(grid, spec)
    # double-counted sum with the 1/2 factor equals one full pair term
    assert np.max(np.abs(v - 0.5 * 0.8 * (x - y) ** 2)) < 1e-12
    r = pair_distance(grid, ("a", 1), ("b", 1))
    assert np.max(np.abs(r - np.abs(x - y))) < 1e-12


def test_self_interaction_excluded():
    pot = PairPotentialSpec(kind="gaussian_well", depth=2.0, width=1.0)
    spec = SystemSpec((SortSpec("g", mass=1.0),), 1, potential=pot)
    grid = build_grid(spec, (-6.0, 6.0, 65))
    assert np.all(potential_energy(grid, spec) == 0.0)


def test_hermitian_on_boundary_negligible_fields(two_sorts_1d):
    spec, grid, psi = two_sorts_1d
    x = grid.axes[0].values[:, None]
    y = grid.axes[1].values[None, :]
    phi = WaveField(np.exp(-((x - 0.3) ** 2) - (y + 0.2) ** 2 + 0.4j * y), grid, spec)
    hpsi = apply_hamiltonian(psi, spec)
    hphi = apply_hamiltonian(phi, spec)
    lhs = grid.integrate(np.conj(phi.values) * hpsi.values)
    rhs = grid.integrate(np.conj(hphi.values) * psi.values)
    assert abs(lhs - rhs) < 1e-10


def test_linearity(single_1d):
    spec, grid, psi = single_1d
    x = grid.axes[0].values
    other = WaveField(gauss(x, center=1.0, k=-1.0), grid, spec)
    combo = WaveField(2.0 * psi.values + 3j * other.values, grid, spec)
    direct = apply_hamiltonian(combo, spec).values
    split = 2.0 * apply_hamiltonian(psi, spec).values + 3j * apply_hamiltonian(other, spec).values
    assert np.max(np.abs(direct - split)) < 1e-12


def test_time_derivative_of_zero_state(single_1d):
    spec, grid, _ = single_1d
    zero = WaveField(np.zeros(grid.shape), grid, spec)
    assert np.all(time_derivative(zero, spec).values == 0.0)


def _dense_hamiltonian(grid, spec):
    n = grid.size
    mat = np.zeros((n, n))
    pot = potential_energy(grid, spec)
    basis = np.zeros(grid.shape)
    flat = basis.ravel()
    for k in range(n):
        flat[k] = 1.0
        col = apply_hamiltonian(WaveField(basis, grid, spec), spec, potential=pot)
        mat[:, k] = col.values.real.ravel()
        flat[k] = 0.0
    return mat


def test_time_derivative_on_discrete_eigenvector():
    # eigenvalue from the Rayleigh quotient is the oracle
    pot = PairPotentialSpec(kind="harmonic_coupling", spring=1.0)
    spec = SystemSpec((SortSpec("a", mass=1.0), SortSpec("b", mass=1.0)), 1, potential=pot)
    grid = build_grid(spec, (-7.0, 7.0, 24))
    mat = _dense_hamiltonian(grid, spec)
    assert np.max(np.abs(mat - mat.T)) < 1e-10
    vals, vecs = np.linalg.eigh(0.5 * (mat + mat.T))
    ground = vecs[:, 0].reshape(grid.shape)
    psi = WaveField(ground.astype(complex), grid, spec)
    energy = float(
        grid.integrate(np.conj(psi.values) * apply_hamiltonian(psi, spec).values).real
        / grid.integrate(np.abs(psi.values) ** 2).real
    )
    dot = time_derivative(psi, spec)
    ref = -1j * energy * psi.values / spec.hbar
    scale = np.max(np.abs(ref))
    assert np.max(np.abs(dot.values - ref)) < 1e-9 * scale


def test_free_packet_density_rate_matches_closed_form():
    spec = SystemSpec((SortSpec("g", mass=1.0),), 1)
    grid = build_grid(spec, (-12.0, 12.0, 2049))
    x = grid.axes[0].values
    k0 = 2.0
    psi = WaveField(gauss(x, k=k0), grid, spec).normalized()
    dot = time_derivative(psi, spec)
    rate = 2.0 * np.real(np.conj(psi.values) * dot.values)
    dens = np.abs(psi.values) ** 2
    ref = k0 * x * dens  # pure advection at the focal instant
    band = np.abs(x) < 8
    assert np.max(np.abs(rate - ref)[band]) < 2e-7 * np.max(np.abs(ref))


def test_momentum_expectation_reference():
    spec = SystemSpec((SortSpec("g", mass=1.0),), 1)
    grid = build_grid(spec, (-12.0, 12.0, 2048))
    x = grid.axes[0].values
    psi = WaveField(gauss(x, k=2.0), grid, spec).normalized()
    from qhydro.stencils import sixth_order_first_derivative

    dpsi = sixth_order_first_derivative(psi.values, 0, grid.axes[0].h)
    w = trapezoid_weights(grid.axes[0])
    p = float(np.real(np.sum(w * np.conj(psi.values) * (-1j) * dpsi)))
    assert p == pytest.approx(2.0, abs=1e-8)
