"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """Input data violates a documented precondition (e.g. missing boundary decay)."""


class GeometryError(ValueError):
    """Degenerate or invalid geometric data (non-positive profile, folded map)."""


class ConfigurationError(ValueError):
    """Inconsistent discretization or experiment configuration."""


class AssemblyError(RuntimeError):
    """Assembled matrices violate a structural invariant (symmetry, SPD mass)."""


class SolverError(RuntimeError):
    """Linear algebra backend failure (Cholesky breakdown, non-convergence)."""
