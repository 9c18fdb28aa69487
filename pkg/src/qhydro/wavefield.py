"""Complex wave fields on configuration grids.

Includes (anti)symmetrization of product states, normalization, boundary
diagnostics, and the flat-binary persistence format (interleaved re/im
doubles in row-major order plus a plain-text sidecar header).
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GridMismatchError, ZeroNormError
from .grids import Grid
from .system import SystemSpec

BOUNDARY_TOL = 1e-8  # outermost-layer amplitude allowed, relative to the max


@dataclass
class WaveField:
    values: np.ndarray
    grid: Grid
    spec: SystemSpec
    time_tag: float = 0.0
    validate: bool = True  # skipped for fields built by trusted internal paths

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != self.grid.shape:
            raise GridMismatchError("wave values do not match the grid shape")
        if self.validate and not np.all(np.isfinite(self.values.view(np.float64))):
            raise ConfigError("wave field contains non-finite values")

    def norm_squared(self):
        return float(np.real(self.grid.integrate(np.abs(self.values) ** 2)))

    def normalized(self) -> "WaveField":
        n2 = self.norm_squared()
        if n2 <= 1e-300:
            raise ZeroNormError("state has numerically zero norm")
        return WaveField(self.values / np.sqrt(n2), self.grid, self.spec, self.time_tag)

    def boundary_ratio(self):
        """max |psi| on the outermost layer, relative to the global max."""
        mags = np.abs(self.values)
        peak = mags.max()
        if peak == 0.0:
            return 0.0
        worst = 0.0
        for ax in range(mags.ndim):
            sl = [slice(None)] * mags.ndim
            for edge in (0, -1):
                sl[ax] = edge
                worst = max(worst, mags[tuple(sl)].max())
        return float(worst / peak)

    def check_boundary(self, tol=BOUNDARY_TOL):
        ratio = self.boundary_ratio()
        if ratio > tol:
            raise ConfigError(
                f"boundary amplitude {ratio:.3e} of max exceeds {tol:.1e}; "
                "enlarge the box so surface terms stay negligible"
            )
        return ratio

    def density(self):
        return np.abs(self.values) ** 2


@dataclass
class MadelungView:
    """Amplitude/phase picture of a state. The phase is only materialized for
    analytic scenarios that provide it in closed form; it is never
    reconstructed from the complex values (and never differentiated)."""

    density: np.ndarray
    amplitude: np.ndarray
    phase: np.ndarray = None

    @classmethod
    def of(cls, psi: WaveField, phase=None):
        amp = np.abs(psi.values)
        return cls(density=amp * amp, amplitude=amp, phase=phase)


def product_state(factors, grid: Grid, spec: SystemSpec):
    """psi(Q) = prod over particles of the given single-particle arrays.

    `factors` maps sort label -> list of per-particle arrays, each sampled on
    that particle's d-dimensional axis grid.
    """
    out = np.ones(grid.shape, dtype=np.complex128)
    for label, i in spec.particles():
        f = np.asarray(factors[label][i - 1], dtype=np.complex128)
        axes = grid.axes_of(label, i)
        expect = tuple(grid.axes[k].n for k in axes)
        if f.shape != expect:
            raise GridMismatchError(
                f"factor for ({label}, {i}) has shape {f.shape}, grid wants {expect}"
            )
        shape = [1] * len(grid.axes)
        for pos, k in enumerate(axes):
            shape[k] = f.shape[pos]
        out = out * f.reshape(shape)
    return out


def symmetrize(factors, grid: Grid, spec: SystemSpec, time_tag=0.0) -> WaveField:
    """Normalized (anti)symmetrized product state.

    For each sort labelled boson/fermion the per-particle factors are summed
    over all permutations within that sort (with the permutation sign for
    fermions); a 'distinguishable' sort keeps its plain product. Identical
    fermion factors therefore null the state, which raises.
    """
    for s in spec.sorts:
        if len(factors.get(s.label, ())) != s.count:
            raise ConfigError(f"sort {s.label!r} needs exactly {s.count} factors")

    per_sort_perms = []
    for s in spec.sorts:
        if s.statistics == "distinguishable" or s.count == 1:
            per_sort_perms.append([(0, tuple(range(s.count)))])
        else:
            sign_of = _permutation_signs(s.count)
            per_sort_perms.append(
                [(sign_of[p], p) for p in itertools.permutations(range(s.count))]
            )

    total = np.zeros(grid.shape, dtype=np.complex128)
    for combo in itertools.product(*per_sort_perms):
        arranged = {}
        parity = 0
        for s, (sgn, perm) in zip(spec.sorts, combo):
            parity += sgn if s.statistics == "fermion" else 0
            arranged[s.label] = [factors[s.label][j] for j in perm]
        term = product_state(arranged, grid, spec)
        total += -term if parity % 2 else term

    psi = WaveField(total, grid, spec, time_tag)
    n2 = psi.norm_squared()
    if n2 < 1e-24:
        raise ZeroNormError("antisymmetrization produced a null state")
    return WaveField(psi.values / np.sqrt(n2), grid, spec, time_tag)


def _permutation_signs(n):
    signs = {}
    for p in itertools.permutations(range(n)):
        inv = sum(
            1 for a in range(n) for b in range(a + 1, n) if p[a] > p[b]
        )
        signs[p] = inv % 2
    return signs


# ---------------------------------------------------------------------------
# persistence


def save_wavefield(psi: WaveField, path):
    """Write `<path>.bin` (interleaved re/im float64, row-major) and
    `<path>.header` (plain text: axes, time tag, system hash)."""
    path = str(path)
    inter = np.empty(psi.values.size * 2)
    flat = psi.values.ravel()
    inter[0::2] = flat.real
    inter[1::2] = flat.imag
    inter.tofile(path + ".bin")
    lines = [
        "qhydro-wavefield 1",
        f"axes {len(psi.grid.axes)}",
    ]
    for a, owner in zip(psi.grid.axes, psi.grid.owners):
        lines.append(f"axis {a.lo!r} {a.hi!r} {a.n} {owner[0]} {owner[1]} {owner[2]}")
    lines.append(f"time_tag {psi.time_tag!r}")
    lines.append(f"spec_hash {psi.spec.content_hash()}")
    with open(path + ".header", "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_wavefield(path, spec: SystemSpec) -> WaveField:
    path = str(path)
    with open(path + ".header", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("qhydro-wavefield"):
        raise ConfigError("not a wave-field header")
    axes, owners = [], []
    time_tag, stored_hash = 0.0, None
    from .grids import Axis  # local import to avoid cycle at module load

    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "axis":
            axes.append(Axis(float(parts[1]), float(parts[2]), int(parts[3])))
            owners.append((parts[4], int(parts[5]), int(parts[6])))
        elif parts[0] == "time_tag":
            time_tag = float(parts[1])
        elif parts[0] == "spec_hash":
            stored_hash = parts[1]
    if stored_hash is not None and stored_hash != spec.content_hash():
        raise ConfigError("stored system hash does not match the supplied spec")
    grid = Grid(axes, owners)
    raw = np.fromfile(path + ".bin")
    if raw.size != 2 * grid.size:
        raise ConfigError("binary payload size does not match the header")
    values = (raw[0::2] + 1j * raw[1::2]).reshape(grid.shape)
    return WaveField(values, grid, spec, time_tag)


def wavefield_csv(psi: WaveField):
    """CSV export (header row; q columns, re, im). Only for <= 2 axes."""
    if len(psi.grid.axes) > 2:
        raise ConfigError("CSV export of wave fields is limited to <= 2 axes")
    cols = [f"q{k+1}" for k in range(len(psi.grid.axes))]
    lines = [",".join(cols + ["re", "im"])]
    meshes = np.meshgrid(*[a.values for a in psi.grid.axes], indexing="ij")
    flat = [m.ravel() for m in meshes]
    re = psi.values.real.ravel()
    im = psi.values.imag.ravel()
    for row in range(re.size):
        vals = [repr(float(f[row])) for f in flat] + [repr(float(re[row])), repr(float(im[row]))]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"
