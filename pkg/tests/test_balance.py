import numpy as np
import pytest

from conftest import gauss
from qhydro import balance, fields, tensors
from qhydro.grids import build_grid, marginalize
from qhydro.hamiltonian import apply_hamiltonian, potential_energy
from qhydro.system import PairPotentialSpec, SortSpec, SystemSpec
from qhydro.tensors import TensorField
from qhydro.wavefield import WaveField


def test_force_zero_without_potential(single_1d):
    spec, grid, psi = single_1d
    f = balance.force_density(psi, spec, "g")
    assert np.all(f.values == 0.0)


def test_force_zero_for_lone_sort_member():
    # one particle of a sort cannot interact with its own sort
    pot = PairPotentialSpec(kind="soft_coulomb", strength=1.0, softening=0.5)
    spec = SystemSpec((SortSpec("g", mass=1.0),), 1, potential=pot)
    grid = build_grid(spec, (-8.0, 8.0, 65))
    psi = WaveField(gauss(grid.axes[0].values), grid, spec).normalized()
    f = balance.force_density(psi, spec, "g")
    assert np.all(f.values == 0.0)


@pytest.mark.parametrize("kind,params", [
    ("harmonic_coupling", {"spring": 0.7}),
    ("gaussian_well", {"depth": 1.2, "width": 0.8}),
    ("soft_coulomb", {"strength": 0.5, "softening": 0.6}),
])
def test_total_force_integrates_to_zero(kind, params):
    # action equals reaction: quadrature of both per-sort forces cancels
    pot = PairPotentialSpec(kind=kind, **params)
    spec = SystemSpec((SortSpec("a", mass=1.0), SortSpec("b", mass=1.5)), 1, potential=pot)
    grid = build_grid(spec, (-10.0, 10.0, 257))
    x = grid.axes[0].values[:, None]
    y = grid.axes[1].values[None, :]
    psi = WaveField(np.exp(-(x**2) / 2 - ((y - 0.8) ** 2) / 1.4 + 0.3j * x), grid, spec)
    psi = psi.normalized()
    f_tot = balance.force_density(psi, spec, "total")
    f_a = balance.force_density(psi, spec, "a")
    f_b = balance.force_density(psi, spec, "b")
    assert np.array_equal(f_tot.values, f_a.values + f_b.values)
    total = f_tot.grid.integrate(f_tot.values[0])
    assert abs(total) < 1e-8


def test_tensor_divergence_constant_and_isotropic(tilted_grid=None):
    spec = SystemSpec((SortSpec("g", mass=1.0),), 2)
    grid = build_grid(spec, (-5.0, 5.0, 65))
    pg = grid.physical_grid("g")
    const = TensorField(np.ones((2, 2) + pg.shape), pg, "g")
    div = balance.tensor_divergence_cartesian(const)
    assert np.max(np.abs(div.values)) < 1e-13
    # P * identity: divergence is the gradient of the scalar
    xs, ys = pg.meshes()
    p = np.exp(-(xs**2) / 3 - ys**2 / 2)
    iso = np.zeros((2, 2) + pg.shape)
    iso[0, 0] = p
    iso[1, 1] = p
    div = balance.tensor_divergence_cartesian(TensorField(iso, pg, "g"))
    from qhydro import stencils

    gx = stencils.derivative(p, 0, pg.axes[0].h, 1)
    gy = stencils.derivative(p, 1, pg.axes[1].h, 1)
    assert np.array_equal(div.values[0], gx)
    assert np.array_equal(div.values[1], gy)


def test_divergence_free_gauge_shift_is_invisible():
    # p_xy += C x and p_yy -= C y leave the divergence unchanged
    spec = SystemSpec((SortSpec("g", mass=1.0),), 2)
    grid = build_grid(spec, (-6.0, 6.0, 129))
    pg = grid.physical_grid("g")
    xs, ys = pg.meshes()
    rng = np.random.default_rng(11)
    base = np.empty((2, 2) + pg.shape)
    for a in range(2):
        for b in range(2):
            base[a, b] = np.exp(-(xs**2) / 4 - ys**2 / 3) * (1 + 0.1 * a + 0.2 * b)
    t0 = TensorField(base.copy(), pg, "g")
    shifted = base.copy()
    c = 3.7
    shifted[0, 1] += c * xs
    shifted[1, 1] -= c * ys
    t1 = TensorField(shifted, pg, "g")
    d0 = balance.tensor_divergence_cartesian(t0).values
    d1 = balance.tensor_divergence_cartesian(t1).values
    scale = np.max(np.abs(d0))
    assert np.max(np.abs(d1 - d0)) <= 1e-12 * max(scale, 1.0)


def test_tensor_divergence_linear():
    spec = SystemSpec((SortSpec("g", mass=1.0),), 2)
    grid = build_grid(spec, (-5.0, 5.0, 33))
    pg = grid.physical_grid("g")
    rng = np.random.default_rng(5)
    a = rng.normal(size=(2, 2) + pg.shape)
    b = rng.normal(size=(2, 2) + pg.shape)
    lhs = balance.tensor_divergence_cartesian(TensorField(a + 2 * b, pg, "g")).values
    rhs = (
        balance.tensor_divergence_cartesian(TensorField(a, pg, "g")).values
        + 2 * balance.tensor_divergence_cartesian(TensorField(b, pg, "g")).values
    )
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_erosion_and_boundary_band():
    mask = np.ones((20, 20), dtype=bool)
    mask[10, 10] = False
    eroded = balance.erode(mask, 2)
    assert not eroded[8:13, 8:13].all()
    assert eroded[10, 13]  # two-step cross erosion, not a box
    banded = balance.strip_boundary(np.ones((20, 20), dtype=bool), band=4)
    assert banded.sum() == 12 * 12


def test_measure_order_on_synthetic_data():
    hs = [0.1, 0.05, 0.025]
    norms = [c * h**4 for c, h in zip([1.0, 1.02, 0.99], hs)]
    order = balance.measure_order(hs, norms)
    assert order == pytest.approx(4.0, abs=0.1)


def test_mpce_stationary_real_state(two_sorts_1d):
    spec, grid, _ = two_sorts_1d
    x = grid.axes[0].values[:, None]
    y = grid.axes[1].values[None, :]
    psi = WaveField(np.exp(-(x**2) / 2 - (y - 0.2) ** 2), grid, spec).normalized()
    for scope in ("a", "b", "total"):
        rep, res, mask = balance.mpce_residual(psi, spec, scope, return_field=True)
        assert np.max(np.abs(res[mask])) <= 1e-10 * max(rep.scale, 1.0)


def test_mpce_against_direct_hamiltonian_form(two_sorts_1d):
    # (2 N m / hbar) marginal of Im[psi* H psi] reproduces the density rate
    spec, grid, psi = two_sorts_1d
    pot = potential_energy(grid, spec)
    hpsi = apply_hamiltonian(psi, spec, potential=pot)
    from qhydro.hamiltonian import time_derivative

    psidot = time_derivative(psi, spec, potential=pot)
    for label in ("a", "b"):
        s = spec.sort(label)
        oracle = (
            2.0
            * s.count
            * s.mass
            / spec.hbar
            * marginalize(np.imag(np.conj(psi.values) * hpsi.values), grid, label, 1)
        )
        rate = balance.density_rate(psi, psidot, label)
        assert np.max(np.abs(rate - oracle)) < 1e-12 * max(np.max(np.abs(rate)), 1e-30)


def test_mpce_refinement_factor_matches_stencil_order():
    # free 1D packet: the L2 residual drops by about 2^4 per halving
    spec = SystemSpec((SortSpec("g", mass=1.0),), 1)
    norms = []
    for n in (512, 1024):
        grid = build_grid(spec, (-12.0, 12.0, n))
        x = grid.axes[0].values
        psi = WaveField(gauss(x, k=2.0), grid, spec).normalized()
        rep = balance.mpce_residual(psi, spec, "g", eps=1e-8)
        norms.append(rep.l2)
    factor = norms[0] / norms[1]
    assert 10.0 < factor < 26.0  # about 2^4


def test_mpeem_and_mpqce_residuals_interacting(two_sorts_1d):
    spec, grid, psi = two_sorts_1d
    pot = potential_energy(grid, spec)
    from qhydro.hamiltonian import time_derivative

    psidot = time_derivative(psi, spec, potential=pot)
    for scope in ("a", "total"):
        f = balance.force_density(psi, spec, scope)
        rep = balance.mpeem_residual(
            psi, spec, scope, "K", psidot=psidot, force=f.values, tol_rel=1e-2
        )
        assert rep.passed
        rep2 = balance.mpqce_residual(
            psi, spec, scope, "W", psidot=psidot, force=f.values, tol_rel=1e-2
        )
        assert rep2.passed
        assert rep.details["version"] == "K"


def test_gauge_check_reports_both_gaps(tilted=None):
    spec = SystemSpec((SortSpec("g", mass=1.0),), 2)
    grid = build_grid(spec, (-11.0, 11.0, 129))
    x = grid.axes[0].values[:, None]
    y = grid.axes[1].values[None, :]
    quad = (4.0 / 3.0) * (x * x - x * y + y * y)
    psi = WaveField(np.exp(-0.25 * quad), grid, spec).normalized()
    rep = balance.gauge_divergence_check(psi, spec, "g", tol_rel=1e-6)
    assert rep.details["elementwise_linf"] > 1e-4 * rep.scale
    assert rep.linf <= 1e-12 * rep.scale  # shared construction commutes
    assert rep.details["independent_l2"] > rep.l2  # genuine discretization gap
    assert rep.passed


def test_residual_report_serialization(single_1d):
    spec, grid, psi = single_1d
    rep = balance.mpce_residual(psi, spec, "g")
    data = rep.to_dict()
    assert data["law"] == "MPCE"
    assert data["verdict"] in ("pass", "fail")
    assert set(data) >= {"law", "scope", "h", "l2", "linf", "scale", "tolerances"}
