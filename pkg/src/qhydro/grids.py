"""Uniform configuration-space grids and the marginalization primitive.

A configuration grid carries one axis per scalar particle coordinate, in
coordinate-set order (sorts in declaration order, particles within a sort,
spatial components within a particle). Fixing one particle's coordinates at
a grid node and integrating the remaining axes with the composite trapezoid
rule turns a configuration-space field into a field over physical space; the
physical grid is exactly the fixed particle's axis grid, so no interpolation
ever enters.
"""

from dataclasses import dataclass

import numpy as np

from .errors import CapExceededError, ConfigError, GridMismatchError, ScopeError

DEFAULT_POINT_CAP = 2**24
MIN_POINTS = 8

_active_cap = [DEFAULT_POINT_CAP]


def current_point_cap():
    return _active_cap[-1]


class point_cap_override:
    """Temporarily raise (or lower) the grid point cap.

    with point_cap_override(2**26): ...
    """

    def __init__(self, cap):
        self.cap = int(cap)

    def __enter__(self):
        _active_cap.append(self.cap)
        return self.cap

    def __exit__(self, *exc):
        _active_cap.pop()


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.n < MIN_POINTS:
            raise ConfigError(f"axis needs at least {MIN_POINTS} points, got {self.n}")
        if not self.hi > self.lo:
            raise ConfigError("axis extent must be positive")

    @property
    def h(self):
        return (self.hi - self.lo) / (self.n - 1)

    @property
    def values(self):
        # built sign-symmetrically around the midpoint so that mirrored nodes
        # are exact negatives when lo == -hi (rotation checks rely on this)
        mid = 0.5 * (self.lo + self.hi)
        return mid + (np.arange(self.n) - (self.n - 1) / 2.0) * self.h

    def refined(self, times=1) -> "Axis":
        """Halve the spacing `times` times keeping both endpoints on nodes."""
        n = self.n
        for _ in range(times):
            n = 2 * n - 1
        return Axis(self.lo, self.hi, n)


def trapezoid_weights(axis: Axis):
    w = np.full(axis.n, axis.h)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


@dataclass(frozen=True)
class PhysicalGrid:
    """d-dimensional grid over physical space."""

    axes: tuple

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))

    @property
    def dim(self):
        return len(self.axes)

    @property
    def shape(self):
        return tuple(a.n for a in self.axes)

    @property
    def spacings(self):
        return tuple(a.h for a in self.axes)

    def meshes(self):
        return np.meshgrid(*[a.values for a in self.axes], indexing="ij")

    def cell_volume(self):
        return float(np.prod(self.spacings))

    def integrate(self, values):
        """Composite trapezoid integral of a scalar sampled on this grid."""
        out = np.asarray(values)
        for k in range(self.dim - 1, -1, -1):
            out = np.tensordot(out, trapezoid_weights(self.axes[k]), axes=([k], [0]))
        return out

    def require_same(self, other: "PhysicalGrid"):
        if self.axes != other.axes:
            raise GridMismatchError("fields live on different physical grids")


class Grid:
    """Configuration-space grid with the axis-ownership map."""

    def __init__(self, axes, owners, point_cap=None):
        self.axes = tuple(axes)
        self.owners = tuple(owners)  # per axis: (sort_label, particle_index, component)
        if len(self.axes) != len(self.owners):
            raise ConfigError("one owner entry per axis is required")
        if point_cap is None:
            point_cap = current_point_cap()
        total = 1
        for a in self.axes:
            total *= a.n
        if total > point_cap:
            raise CapExceededError(total, point_cap)
        self.point_cap = point_cap

    @property
    def shape(self):
        return tuple(a.n for a in self.axes)

    @property
    def size(self):
        return int(np.prod(self.shape, dtype=np.int64))

    def axes_of(self, label, index):
        """Axis ids of particle (label, index), ordered by spatial component."""
        found = [
            (comp, k)
            for k, (lab, i, comp) in enumerate(self.owners)
            if lab == label and i == index
        ]
        if not found:
            raise ScopeError(f"no axes for particle ({label!r}, {index})")
        return [k for _, k in sorted(found)]

    def physical_grid(self, label, index=1) -> PhysicalGrid:
        return PhysicalGrid(tuple(self.axes[k] for k in self.axes_of(label, index)))

    def coordinate(self, k):
        """Axis-k node values broadcast to the full grid shape."""
        a = self.axes[k]
        shape = [1] * len(self.axes)
        shape[k] = a.n
        return a.values.reshape(shape)

    def volume_element(self):
        return float(np.prod([a.h for a in self.axes]))

    def integrate(self, values):
        out = np.asarray(values)
        for k in range(len(self.axes) - 1, -1, -1):
            out = np.tensordot(out, trapezoid_weights(self.axes[k]), axes=([k], [0]))
        return out

    def refined(self, times=1) -> "Grid":
        return Grid(
            [a.refined(times) for a in self.axes], self.owners, point_cap=self.point_cap
        )


def build_grid(spec, axis_specs, point_cap=None) -> Grid:
    """Assemble the configuration grid for `spec` from per-axis (lo, hi, n).

    `axis_specs` is either one tuple reused for every axis or a sequence with
    one entry per configuration axis.
    """
    wanted = spec.config_dim
    if isinstance(axis_specs, tuple) and len(axis_specs) == 3 and np.isscalar(axis_specs[0]):
        axis_specs = [axis_specs] * wanted
    axis_specs = list(axis_specs)
    if len(axis_specs) != wanted:
        raise ConfigError(
            f"system needs {wanted} configuration axes, got {len(axis_specs)}"
        )
    axes = [Axis(float(lo), float(hi), int(n)) for lo, hi, n in axis_specs]
    owners = []
    for label, i in spec.particles():
        owners.extend((label, i, comp) for comp in range(spec.spatial_dim))
    return Grid(axes, owners, point_cap=point_cap)


def marginalize(values, grid: Grid, label, index=1):
    """Integrate all axes except particle (label, index)'s with the trapezoid
    rule. Returns an array over that particle's physical grid, with spatial
    components in natural order. Linear in `values`.
    """
    keep = grid.axes_of(label, index)
    values = np.asarray(values)
    if values.shape != grid.shape:
        raise GridMismatchError("field shape does not match the configuration grid")
    out = values
    # reduce from the highest axis down so lower axis ids stay valid
    for k in range(len(grid.axes) - 1, -1, -1):
        if k in keep:
            continue
        out = np.tensordot(out, trapezoid_weights(grid.axes[k]), axes=([k], [0]))
    # the kept axes survive in ascending axis-id order, which is already the
    # spatial-component order produced by axes_of
    return out
