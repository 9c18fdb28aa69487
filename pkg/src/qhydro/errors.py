"""Exception types shared across the package."""


class QhydroError(Exception):
    """Base class for all package errors."""


class ConfigError(QhydroError):
    """Invalid user-supplied configuration (bad grid spec, unknown scenario, ...)."""


class CapExceededError(ConfigError):
    """Requested grid exceeds the configured point-count cap."""

    def __init__(self, requested, cap, flag="--cap-override"):
        self.requested = requested
        self.cap = cap
        self.flag = flag
        super().__init__(
            f"grid would allocate {requested} points, above the cap of {cap}; "
            f"pass {flag} (or set cap_override) to raise the limit"
        )


class GridMismatchError(QhydroError):
    """Fields defined on incompatible grids were combined."""


class ScopeError(QhydroError):
    """Unknown sort label or invalid scope for an operation."""


class SymmetryError(QhydroError):
    """A wave function failed a required symmetry check."""


class ZeroNormError(QhydroError):
    """Antisymmetrization (or normalization) produced a numerically null state."""
