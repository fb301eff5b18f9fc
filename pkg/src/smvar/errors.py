"""Exception types shared across the package."""


class SmvarError(Exception):
    pass


class ManifoldMismatchError(SmvarError, ValueError):
    """Two fields (or a field and a manifold) live on different grids."""


class SolverError(SmvarError, RuntimeError):
    """An iterative solver failed to converge or detected a broken operator."""


class ConfigError(SmvarError, ValueError):
    pass


class DomainTooSmallError(SmvarError, ValueError):
    """A 1-D scan found its extremum on the boundary of the search domain."""
