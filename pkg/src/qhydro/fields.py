"""First-level hydrodynamic fields: densities, currents and velocities.

Per-sort fields use the representative-particle form: for identical
particles the sum over a sort equals the particle count times the first
particle's marginal. Velocities are always formed as current/density ratios
(never from a stored phase) and carry a defined-mask: points where the
density is below eps * max(density) are flagged undefined and the value is
set to zero there.
"""

from dataclasses import dataclass

import numpy as np

from . import stencils
from .errors import GridMismatchError, ScopeError
from .grids import Grid, PhysicalGrid, marginalize
from .system import SystemSpec
from .wavefield import WaveField

DEFAULT_EPS = 1e-10

TOTAL = "total"


@dataclass
class ScalarField:
    values: np.ndarray
    grid: PhysicalGrid
    scope: str
    kind: str = ""
    mask: np.ndarray = None  # True where defined; None means everywhere


@dataclass
class VectorField:
    values: np.ndarray  # shape (d,) + grid.shape
    grid: PhysicalGrid
    scope: str
    kind: str = ""
    mask: np.ndarray = None

    @property
    def dim(self):
        return self.values.shape[0]


@dataclass
class ConfigVectorField:
    """A d-vector per configuration point, attached to one particle."""

    values: np.ndarray  # shape (d,) + configuration shape
    grid: Grid
    sort: str
    index: int
    kind: str = ""
    mask: np.ndarray = None


def _resolve_scope(spec: SystemSpec, scope):
    if scope == TOTAL:
        return None
    return spec.sort(scope).label


def config_gradient(values, grid: Grid, axes):
    """Stacked onesided-boundary derivatives of `values` along `axes`."""
    return np.stack(
        [stencils.derivative(values, k, grid.axes[k].h, deriv=1) for k in axes]
    )


def current_kernel(psi: WaveField, label, index=1):
    """hbar * Im[psi* grad_particle psi] on the configuration grid.

    Equals density * mass * per-particle velocity wherever the density is
    positive, with no division involved.
    """
    grid = psi.grid
    axes = grid.axes_of(label, index)
    conj = np.conj(psi.values)
    out = np.empty((len(axes),) + grid.shape)
    for pos, k in enumerate(axes):
        dpsi = stencils.derivative(psi.values, k, grid.axes[k].h, deriv=1)
        out[pos] = psi.spec.hbar * np.imag(conj * dpsi)
    return out


def total_density(psi: WaveField):
    """|psi|^2 on the configuration grid."""
    return psi.density()


def mass_density(psi: WaveField, scope) -> ScalarField:
    spec = psi.spec
    label = _resolve_scope(spec, scope)
    if label is None:
        parts = [mass_density(psi, s.label) for s in spec.sorts]
        for p in parts[1:]:
            parts[0].grid.require_same(p.grid)
        values = parts[0].values.copy()
        for p in parts[1:]:
            values += p.values
        return ScalarField(values, parts[0].grid, TOTAL, kind="density")
    s = spec.sort(label)
    values = s.count * s.mass * marginalize(total_density(psi), psi.grid, label, 1)
    return ScalarField(values, psi.grid.physical_grid(label), label, kind="density")


def mass_current(psi: WaveField, scope) -> VectorField:
    spec = psi.spec
    label = _resolve_scope(spec, scope)
    if label is None:
        parts = [mass_current(psi, s.label) for s in spec.sorts]
        for p in parts[1:]:
            parts[0].grid.require_same(p.grid)
        values = parts[0].values.copy()
        for p in parts[1:]:
            values += p.values
        return VectorField(values, parts[0].grid, TOTAL, kind="current")
    s = spec.sort(label)
    kern = current_kernel(psi, label, 1)
    pg = psi.grid.physical_grid(label)
    values = np.stack(
        [s.count * marginalize(kern[c], psi.grid, label, 1) for c in range(spec.spatial_dim)]
    )
    return VectorField(values, pg, label, kind="current")


def mean_velocity(rho: ScalarField, current: VectorField, eps=DEFAULT_EPS) -> VectorField:
    if rho.scope != current.scope:
        raise ScopeError("density and current belong to different scopes")
    rho.grid.require_same(current.grid)
    floor = eps * rho.values.max()
    mask = rho.values > floor
    values = np.zeros_like(current.values)
    np.divide(current.values, rho.values, out=values, where=mask)
    values[:, ~mask] = 0.0
    return VectorField(values, rho.grid, rho.scope, kind="velocity", mask=mask)


def particle_velocity(psi: WaveField, label, index=1, eps=DEFAULT_EPS) -> ConfigVectorField:
    """Per-particle velocity w = hbar Im[psi* grad psi] / (m |psi|^2)."""
    spec = psi.spec
    m = spec.sort(label).mass
    kern = current_kernel(psi, label, index)
    dens = total_density(psi)
    floor = eps * dens.max()
    mask = dens > floor
    values = np.zeros_like(kern)
    np.divide(kern, m * dens, out=values, where=mask)
    values[:, ~mask] = 0.0
    return ConfigVectorField(values, psi.grid, label, index, kind="velocity", mask=mask)


def broadcast_physical(field_values, grid: Grid, label, index):
    """View a physical-grid array along particle (label, index)'s axes."""
    axes = grid.axes_of(label, index)
    shape = [1] * len(grid.axes)
    for pos, k in enumerate(axes):
        shape[k] = grid.axes[k].n
    return np.asarray(field_values).reshape(shape)


def relative_velocity(
    psi: WaveField, label, index=1, reference="sort", eps=DEFAULT_EPS
) -> ConfigVectorField:
    """w minus the mean velocity (per-sort or total) looked up at the
    particle's own coordinate. The physical grid coincides with the
    particle's axis grid, so the lookup is exact node indexing."""
    if reference not in ("sort", "total"):
        raise ScopeError(f"reference must be 'sort' or 'total', got {reference!r}")
    scope = label if reference == "sort" else TOTAL
    rho = mass_density(psi, scope)
    cur = mass_current(psi, scope)
    psi.grid.physical_grid(label, index).require_same(rho.grid)
    v = mean_velocity(rho, cur, eps=eps)
    w = particle_velocity(psi, label, index, eps=eps)
    values = np.empty_like(w.values)
    for c in range(values.shape[0]):
        values[c] = w.values[c] - broadcast_physical(v.values[c], psi.grid, label, index)
    vmask = np.broadcast_to(
        broadcast_physical(v.mask, psi.grid, label, index), psi.grid.shape
    )
    mask = w.mask & vmask
    values[:, ~mask] = 0.0
    kind = "relative" if reference == "sort" else "relative_total"
    return ConfigVectorField(values, psi.grid, label, index, kind=kind, mask=mask)


def osmotic_velocity(psi: WaveField, label, index=1, eps=DEFAULT_EPS) -> ConfigVectorField:
    """d = -hbar/(2 m) grad D / D on the defined mask."""
    spec = psi.spec
    m = spec.sort(label).mass
    dens = total_density(psi)
    grad = config_gradient(dens, psi.grid, psi.grid.axes_of(label, index))
    floor = eps * dens.max()
    mask = dens > floor
    values = np.zeros_like(grad)
    np.divide(grad, dens, out=values, where=mask)
    values *= -spec.hbar / (2.0 * m)
    values[:, ~mask] = 0.0
    return ConfigVectorField(values, psi.grid, label, index, kind="osmotic", mask=mask)


# ---------------------------------------------------------------------------
# exports


def field_csv(field):
    """One row per grid point: q columns, component value(s), mask bit."""
    grid = field.grid
    meshes = [m.ravel() for m in grid.meshes()]
    if isinstance(field, ScalarField):
        comps = [field.values.ravel()]
        names = ["value"]
    else:
        comps = [field.values[c].ravel() for c in range(field.dim)]
        names = [f"value{c+1}" for c in range(field.dim)]
    mask = (
        np.ones(comps[0].size, dtype=int)
        if field.mask is None
        else field.mask.ravel().astype(int)
    )
    header = [f"q{k+1}" for k in range(grid.dim)] + names + ["defined"]
    lines = [",".join(header)]
    for row in range(comps[0].size):
        cells = [repr(float(m[row])) for m in meshes]
        cells += [repr(float(c[row])) for c in comps]
        cells.append(str(int(mask[row])))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def field_summary(field):
    """min/max/L2/integral per component (JSON-ready dict)."""
    grid = field.grid
    comps = (
        {"value": field.values}
        if isinstance(field, ScalarField)
        else {f"value{c+1}": field.values[c] for c in range(field.dim)}
    )
    out = {"scope": field.scope, "kind": field.kind, "shape": list(grid.shape)}
    for name, arr in comps.items():
        out[name] = {
            "min": float(arr.min()),
            "max": float(arr.max()),
            "l2": float(np.sqrt(grid.integrate(arr * arr))),
            "integral": float(grid.integrate(arr)),
        }
    return out
