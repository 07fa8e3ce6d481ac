"""Exception types shared across the package."""


class CapplanError(Exception):
    """Base class for errors raised by this package."""


class InstanceError(CapplanError):
    """Malformed planning instance or violated instance invariant."""


class DimensionError(CapplanError):
    """Vector/matrix dimensions inconsistent with the instance."""


class SolverError(CapplanError):
    """Numerical failure inside an LP/MILP solve; never silently clamped."""


class LabelingError(CapplanError):
    """Adaptive labeling aborted (non-finite statistics, non-positive mean)."""


class ConfigError(CapplanError):
    """Invalid run configuration."""
