import numpy as np
import pytest

from qhydro import cylindrical, fields
from qhydro.errors import SymmetryError
from qhydro.grids import Axis, build_grid
from qhydro.scenarios import load_instance
from qhydro.system import SortSpec, SystemSpec
from qhydro.wavefield import WaveField


def test_rotation_matrix_special_angles():
    lam0 = cylindrical.rotation_matrix(0.0)
    assert np.allclose(lam0, np.eye(3), atol=1e-15)
    lam90 = cylindrical.rotation_matrix(np.pi / 2)
    assert np.allclose(lam90[0], [0, 1, 0], atol=1e-15)  # e_rho = e_y
    assert np.allclose(lam90[1], [-1, 0, 0], atol=1e-15)  # e_phi = -e_x


def test_rotation_matrix_orthogonal_random_angles():
    rng = np.random.default_rng(42)
    for phi in rng.uniform(-np.pi, np.pi, size=100):
        lam = cylindrical.rotation_matrix(phi)
        assert np.max(np.abs(lam @ lam.T - np.eye(3))) <= 1e-14
        assert np.linalg.det(lam) == pytest.approx(1.0, abs=1e-14)


def test_position_vector_has_no_phi_component():
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(3, 50))
    comps, mask = cylindrical.to_cylindrical_vector(pts, pts[0], pts[1])
    rho = np.hypot(pts[0], pts[1])
    assert np.allclose(comps[0], rho, atol=1e-13)
    assert np.max(np.abs(comps[1])) < 1e-13
    assert np.array_equal(comps[2], pts[2])
    assert mask.all()


def test_isotropic_tensor_is_rotation_invariant():
    rng = np.random.default_rng(2)
    x, y = rng.normal(size=50), rng.normal(size=50)
    iso = 2.5 * np.eye(3)[..., None] * np.ones(50)
    out, _ = cylindrical.to_cylindrical_tensor(iso, x, y)
    assert np.max(np.abs(out - iso)) < 1e-14


def test_tensor_transform_matches_bruteforce():
    rng = np.random.default_rng(3)
    sym = rng.normal(size=(3, 3))
    sym = 0.5 * (sym + sym.T)
    x, y = rng.normal(size=20), rng.normal(size=20)
    out, _ = cylindrical.to_cylindrical_tensor(sym[..., None] * np.ones(20), x, y)
    for k in range(20):
        lam = cylindrical.rotation_matrix(np.arctan2(y[k], x[k]))
        brute = lam @ sym @ lam.T
        assert np.max(np.abs(out[..., k] - brute)) <= 1e-14
        # symmetry survives the transform
        assert np.max(np.abs(out[..., k] - out[..., k].T)) <= 1e-14


@pytest.fixture(scope="module")
def rz_axes():
    return Axis(0.25, 6.0, 128), Axis(-3.0, 3.0, 64)


def test_cyl_gradient_quadratic(rz_axes):
    rho_axis, z_axis = rz_axes
    rho = rho_axis.values[:, None]
    f = rho**2 * np.ones(z_axis.n)[None, :]
    comps, mask = cylindrical.cyl_gradient(f, rho_axis, z_axis)
    assert np.max(np.abs(comps[0] - 2 * rho)) < 1e-10
    assert np.max(np.abs(comps[1])) == 0.0
    assert np.max(np.abs(comps[2])) < 1e-10


def test_cyl_gradient_angular_sector():
    rho_axis = Axis(0.5, 3.0, 64)
    phi_axis = Axis(-0.4, 0.4, 32)
    z_axis = Axis(-1.0, 1.0, 16)
    f = np.broadcast_to(
        phi_axis.values[None, :, None], (rho_axis.n, phi_axis.n, z_axis.n)
    ).copy()
    comps, mask = cylindrical.cyl_gradient(f, rho_axis, z_axis, phi_axis=phi_axis)
    rho = rho_axis.values[:, None, None]
    assert np.max(np.abs(comps[0])) < 1e-11
    assert np.max(np.abs(comps[1] - 1.0 / rho)[mask]) < 1e-10
    assert np.max(np.abs(comps[2])) < 1e-11


def test_cyl_gradient_matches_rotated_cartesian_bell(rz_axes):
    # closed-form bell: grad in cylindrical comps equals the rotated
    # Cartesian gradient at every sample point
    rho_axis, z_axis = rz_axes
    rho = rho_axis.values[:, None]
    z = z_axis.values[None, :]
    f = np.exp(-(rho**2 + z**2) / 2.0)
    comps, mask = cylindrical.cyl_gradient(f, rho_axis, z_axis)
    phi0 = 0.7
    x, y = rho * np.cos(phi0), rho * np.sin(phi0)
    cart = np.stack([-x * f, -y * f, -z * f * np.ones_like(x)])
    rotated, _ = cylindrical.to_cylindrical_vector(
        cart, x * np.ones_like(z), y * np.ones_like(z)
    )
    assert np.max(np.abs(comps[0] - rotated[0])[mask]) < 1e-4
    assert np.max(np.abs(comps[2] - rotated[2])[mask]) < 1e-4
    assert np.max(np.abs(rotated[1])) < 1e-13


def test_cyl_laplacian_cases(rz_axes):
    rho_axis, z_axis = rz_axes
    rho = rho_axis.values[:, None]
    ones = np.ones(z_axis.n)[None, :]
    quad, mask = cylindrical.cyl_laplacian(rho**2 * ones, rho_axis, z_axis)
    assert np.max(np.abs(quad - 4.0)[mask]) < 1e-8
    log, mask = cylindrical.cyl_laplacian(np.log(rho) * ones, rho_axis, z_axis)
    away = mask & (rho >= 1.5)  # log derivatives blow up toward the axis
    assert np.max(np.abs(log)[away]) < 5e-6  # 2D harmonic function
    bell = np.exp(-(rho**2 + z_axis.values[None, :] ** 2) / 2.0)
    lap, mask = cylindrical.cyl_laplacian(bell, rho_axis, z_axis)
    r2 = rho**2 + z_axis.values[None, :] ** 2
    assert np.max(np.abs(lap - (r2 - 3.0) * bell)[mask]) < 5e-4


def test_cyl_tensor_divergence_isotropic_cases(rz_axes):
    rho_axis, z_axis = rz_axes
    rho = rho_axis.values[:, None]
    z = z_axis.values[None, :]
    shape = (rho_axis.n, z_axis.n)
    const = np.zeros((3, 3) + shape)
    for a in range(3):
        const[a, a] = 2.2
    div, mask = cylindrical.cyl_tensor_divergence(const, rho_axis, z_axis)
    assert np.max(np.abs(div)[np.broadcast_to(mask, div.shape)]) < 1e-11
    press = np.exp(-(rho**2) / 3 - z**2 / 2)
    iso = np.zeros((3, 3) + shape)
    for a in range(3):
        iso[a, a] = press
    div, mask = cylindrical.cyl_tensor_divergence(iso, rho_axis, z_axis)
    assert np.max(np.abs(div[0] - (-2 * rho / 3) * press)[mask]) < 1e-4
    assert np.max(np.abs(div[1])[mask]) == 0.0
    assert np.max(np.abs(div[2] - (-z) * press)[mask]) < 1e-4


def _iso3d_gaussian(n=65):
    spec = SystemSpec((SortSpec("g", mass=1.0),), 3)
    grid = build_grid(spec, (-8.0, 8.0, n))
    x = grid.axes[0].values[:, None, None]
    y = grid.axes[1].values[None, :, None]
    z = grid.axes[2].values[None, None, :]
    psi = np.exp(-(x * x + y * y + z * z) / 4.0)
    return spec, grid, WaveField(psi.astype(complex), grid, spec).normalized()


def test_symmetry_check_passes_isotropic():
    spec, grid, psi = _iso3d_gaussian()
    rep = cylindrical.azimuthal_symmetry_check(psi)
    assert rep.passed
    assert rep.density_variation <= 1e-12
    assert rep.current_variation <= 1e-12


def test_symmetry_check_fails_displaced():
    spec = SystemSpec((SortSpec("g", mass=1.0),), 3)
    grid = build_grid(spec, (-8.0, 8.0, 33))
    x = grid.axes[0].values[:, None, None]
    y = grid.axes[1].values[None, :, None]
    z = grid.axes[2].values[None, None, :]
    psi = WaveField(np.exp(-((x - 1.0) ** 2 + y * y + z * z) / 4.0), grid, spec)
    rep = cylindrical.azimuthal_symmetry_check(psi.normalized())
    assert not rep.passed
    with pytest.raises(SymmetryError):
        cylindrical.halfplane_elements(psi.normalized())


def test_symmetry_check_passes_ring():
    inst = load_instance("ring3d")
    rep = cylindrical.azimuthal_symmetry_check(inst.psi)
    assert rep.passed
    assert rep.density_variation == 0.0


def test_halfplane_zero_elements_and_symmetric_pressure():
    inst = load_instance("ring3d")
    elems = cylindrical.halfplane_elements(inst.psi)
    assert np.all(elems.part2_k["rho_phi"] == 0.0)
    assert np.all(elems.part2_k["phi_z"] == 0.0)
    assert np.all(elems.part2_w["rho_z"] == 0.0)
    # gauge-W second part carries the scalar pressure on the diagonal
    assert np.array_equal(elems.part2_w["rho_rho"], elems.quantum_pressure)
    assert np.array_equal(elems.part2_w["phi_phi"], elems.quantum_pressure)


def test_halfplane_phiphi_element_isotropic_oracle():
    # for an isotropic bell: d_rho / rho = hbar/(2 m sigma^2), so the
    # phi-phi second-order element is hbar^2/(4 m sigma^2) times the density
    spec, grid, psi = _iso3d_gaussian(n=65)
    elems = cylindrical.halfplane_elements(psi, "g")
    j0 = cylindrical._row_slice(grid)
    x = grid.axes[0].values
    i0 = int(np.argmax(x >= 0.0))
    dens_row = fields.total_density(psi)[i0:, j0, :]
    sigma2 = 1.0  # |psi|^2 = exp(-r^2/2): unit density width
    ref = dens_row / (4.0 * sigma2)
    mask = elems.mask & (dens_row > 1e-10 * dens_row.max())
    scale = np.max(np.abs(ref[mask]))
    # the 1/rho factor amplifies stencil error near the axis guard
    assert np.max(np.abs(elems.part2_k["phi_phi"] - ref)[mask]) < 5e-3 * scale


def test_halfplane_gauge_divergences_converge_together():
    gaps = []
    for n in (97, 145):
        inst = load_instance("ring3d", n)
        div_k, div_w, elems = cylindrical.halfplane_pressure_divergences(
            inst.psi, "g", eps=inst.eps
        )
        dens = fields.total_density(inst.psi)
        j0 = cylindrical._row_slice(inst.psi.grid)
        x = inst.psi.grid.axes[0].values
        i0 = int(np.argmax(x >= 0.0))
        sel = (elems.rho[:, None] >= 0.8) & (dens[i0:, j0, :] > 1e-10 * dens.max())
        gaps.append(float(np.max(np.abs((div_k - div_w)[:, sel]))))
        assert np.all(div_k[1] == 0.0)
        assert np.all(div_w[1] == 0.0)
    assert gaps[0] / gaps[1] > 3.0  # shrinks at stencil order under refinement
