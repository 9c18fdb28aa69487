"""Momentum-flow and pressure tensors in their two standard gauges.

Both gauges share the first-order part (velocity and osmotic dyads weighted
by the density); they differ in how the second-derivative content of the
density enters: gauge "K" keeps the full matrix of second derivatives,
gauge "W" collapses it to the scalar quantum pressure times the identity.
The two differ elementwise but have equal divergence, which is what the
balance laws consume.

All per-point log-density curvature is evaluated through the identity
  -c * D * (d^2 ln D)_{ab} = m D d_a d_b - c * (d^2 D)_{ab},  c = hbar^2/(4m),
so no logarithm of a small density is ever taken; the only masked division
is the one inside the velocity fields.
"""

from dataclasses import dataclass

import numpy as np

from . import stencils
from .errors import ScopeError
from .fields import (
    DEFAULT_EPS,
    TOTAL,
    ScalarField,
    mass_current,
    mass_density,
    mean_velocity,
    osmotic_velocity,
    particle_velocity,
    relative_velocity,
    total_density,
)
from .grids import PhysicalGrid, marginalize
from .wavefield import WaveField

VERSIONS = ("K", "W")

# The velocity quotients inside the dyad marginals stay numerically stable
# far below the default field mask, and every tail point dropped from the
# integrand breaks the p = Pi - rho v x v identity by about eps * box size.
# The construction therefore cuts much deeper than the public eps, which
# keeps governing what is reported as defined.
CONSTRUCTION_EPS = 1e-14


@dataclass
class TensorField:
    values: np.ndarray  # shape (d, d) + grid.shape
    grid: PhysicalGrid
    scope: str
    version: str = ""
    family: str = ""  # "momentum_flow" | "pressure"
    part: str = "full"  # "full" | "classical" | "quantum" | "part1" | "part2"

    @property
    def dim(self):
        return self.values.shape[0]

    def copy_with(self, values, part=None):
        return TensorField(
            values, self.grid, self.scope, self.version, self.family,
            self.part if part is None else part,
        )


def _require_version(version):
    if version not in VERSIONS:
        raise ScopeError(f"tensor version must be one of {VERSIONS}, got {version!r}")


def _density_hessian_marginal(psi: WaveField, label, compact_diagonal=False,
                              diag_only=False):
    """-N hbar^2/(4 m) * marginal of the per-particle Hessian of D; this is
    the gauge-K second-order part.

    Every entry is a composition of two first-derivative stencils. That
    choice makes the discrete derivative operators commute exactly, so the
    divergence of this block equals the gradient of its trace down to float
    reordering: the gauge equivalence of the two tensor versions holds by
    construction, not merely in the limit. `compact_diagonal` switches the
    diagonal to the one-piece second-difference stencil, an equally valid
    4th-order realization that does NOT commute; the gauge check uses it as
    the independent branch whose divergence gap must shrink under
    refinement."""
    spec = psi.spec
    s = spec.sort(label)
    grid = psi.grid
    axes = grid.axes_of(label, 1)
    d = len(axes)
    dens = total_density(psi)
    coef = -(s.count * spec.hbar**2 / (4.0 * s.mass))
    pg = grid.physical_grid(label)
    out = np.empty((d, d) + pg.shape) if not diag_only else np.empty((d,) + pg.shape)
    firsts = {
        a: stencils.derivative(dens, axes[a], grid.axes[axes[a]].h, deriv=1)
        for a in range(d)
    }
    for a in range(d):
        ka = axes[a]
        if compact_diagonal:
            second = stencils.derivative(dens, ka, grid.axes[ka].h, deriv=2)
        else:
            second = stencils.derivative(firsts[a], ka, grid.axes[ka].h, deriv=1)
        diag = coef * marginalize(second, grid, label, 1)
        if diag_only:
            out[a] = diag
            continue
        out[a, a] = diag
        for b in range(a + 1, d):
            kb = axes[b]
            mixed = stencils.derivative(firsts[a], kb, grid.axes[kb].h, deriv=1)
            out[a, b] = out[b, a] = coef * marginalize(mixed, grid, label, 1)
    return out, pg


def scalar_quantum_pressure(psi: WaveField, label) -> ScalarField:
    """-N hbar^2/(4 m) times the marginal of the particle-Laplacian of D,
    formed as the trace of the same Hessian blocks the gauge-K part uses."""
    diag, pg = _density_hessian_marginal(psi, label, diag_only=True)
    values = diag[0].copy()
    for a in range(1, diag.shape[0]):
        values += diag[a]
    return ScalarField(values, pg, label, kind="quantum_pressure")


def _dyad_marginal(psi: WaveField, label, vel, osm=None):
    """N m * marginal of D (vel x vel [+ osm x osm]) for one sort."""
    spec = psi.spec
    s = spec.sort(label)
    grid = psi.grid
    d = spec.spatial_dim
    dens = total_density(psi)
    pg = grid.physical_grid(label)
    out = np.empty((d, d) + pg.shape)
    for a in range(d):
        for b in range(a, d):
            integrand = dens * (vel[a] * vel[b])
            if osm is not None:
                integrand += dens * (osm[a] * osm[b])
            out[a, b] = out[b, a] = s.count * s.mass * marginalize(
                integrand, grid, label, 1
            )
    return out, pg


def _sort_velocity(psi, label, family, total_scope, eps):
    ceps = min(eps, CONSTRUCTION_EPS)
    if family == "momentum_flow":
        return particle_velocity(psi, label, 1, eps=ceps).values
    reference = "total" if total_scope else "sort"
    return relative_velocity(psi, label, 1, reference=reference, eps=ceps).values


def _assemble(psi: WaveField, scope, version, family, eps, part="full",
              second_realization="composed"):
    _require_version(version)
    spec = psi.spec
    labels = spec.labels if scope == TOTAL else [spec.sort(scope).label]
    total_scope = scope == TOTAL
    compact = second_realization == "compact"
    acc = None
    pg_ref = None
    for label in labels:
        pieces = []
        if part in ("full", "part1", "classical"):
            vel = _sort_velocity(psi, label, family, total_scope, eps)
            if part == "classical":
                dyad, pg = _dyad_marginal(psi, label, vel)
            else:
                osm = osmotic_velocity(psi, label, 1, eps=min(eps, CONSTRUCTION_EPS)).values
                dyad, pg = _dyad_marginal(psi, label, vel, osm)
            pieces.append(dyad)
        if part in ("full", "part2"):
            if version == "K":
                second, pg = _density_hessian_marginal(
                    psi, label, compact_diagonal=compact
                )
            else:
                press = scalar_quantum_pressure(psi, label)
                pg = press.grid
                d = spec.spatial_dim
                second = np.zeros((d, d) + pg.shape)
                for a in range(d):
                    second[a, a] = press.values
            pieces.append(second)
        block = pieces[0]
        for extra in pieces[1:]:
            block = block + extra
        if acc is None:
            acc, pg_ref = block, pg
        else:
            pg_ref.require_same(pg)
            acc += block
    return TensorField(acc, pg_ref, scope, version, family, part)


def momentum_flow(psi: WaveField, scope, version, eps=DEFAULT_EPS,
                  second_realization="composed") -> TensorField:
    """Momentum-flow tensor; additive over sorts, so the total is the sum of
    the per-sort tensors."""
    return _assemble(psi, scope, version, "momentum_flow", eps,
                     second_realization=second_realization)


def pressure(psi: WaveField, scope, version, eps=DEFAULT_EPS,
             second_realization="composed") -> TensorField:
    """Pressure tensor. Per-sort scope uses the velocity relative to that
    sort's mean; the total recomputes the relative velocity against the
    total mean instead of summing per-sort tensors (they do not add up)."""
    return _assemble(psi, scope, version, "pressure", eps,
                     second_realization=second_realization)


def split_cl_qu(psi: WaveField, scope, family, version, eps=DEFAULT_EPS):
    """(classical, quantum) parts; classical is the bare velocity dyad
    marginal, quantum is full minus classical."""
    if family not in ("momentum_flow", "pressure"):
        raise ScopeError(f"unknown tensor family {family!r}")
    full = _assemble(psi, scope, version, family, eps)
    classical = _assemble(psi, scope, version, family, eps, part="classical")
    quantum = full.copy_with(full.values - classical.values, part="quantum")
    return classical, quantum


def split_parts_1_2(psi: WaveField, scope, version, family="pressure", eps=DEFAULT_EPS):
    """(part1, part2): part1 holds the first-derivative dyads (identical in
    both gauges), part2 the second-derivative content (gauge dependent)."""
    part1 = _assemble(psi, scope, version, family, eps, part="part1")
    part2 = _assemble(psi, scope, version, family, eps, part="part2")
    return part1, part2


def advection_dyad(psi: WaveField, scope, eps=DEFAULT_EPS) -> TensorField:
    """rho v (x) v on the physical grid (the bulk part that turns the
    momentum-flow tensor into the pressure tensor)."""
    rho = mass_density(psi, scope)
    v = mean_velocity(rho, mass_current(psi, scope), eps=eps)
    d = v.dim
    out = np.empty((d, d) + rho.grid.shape)
    for a in range(d):
        for b in range(a, d):
            out[a, b] = out[b, a] = rho.values * v.values[a] * v.values[b]
    return TensorField(out, rho.grid, scope, "", "advection", "full")


def tensor_csv(t: TensorField):
    """Row per grid point: q columns then row-major tensor entries."""
    grid = t.grid
    meshes = [m.ravel() for m in grid.meshes()]
    d = t.dim
    names = [f"t{a+1}{b+1}" for a in range(d) for b in range(d)]
    lines = [",".join([f"q{k+1}" for k in range(grid.dim)] + names)]
    comps = [t.values[a, b].ravel() for a in range(d) for b in range(d)]
    for row in range(comps[0].size):
        cells = [repr(float(m[row])) for m in meshes]
        cells += [repr(float(c[row])) for c in comps]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def tensor_summary(t: TensorField):
    d = t.dim
    entries = {}
    for a in range(d):
        for b in range(d):
            arr = t.values[a, b]
            entries[f"t{a+1}{b+1}"] = {
                "min": float(arr.min()),
                "max": float(arr.max()),
                "l2": float(np.sqrt(t.grid.integrate(arr * arr))),
            }
    return {
        "scope": t.scope,
        "version": t.version,
        "family": t.family,
        "part": t.part,
        "entries": entries,
    }
