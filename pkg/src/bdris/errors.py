"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A configuration file or config object is inconsistent."""


class DegenerateInputError(ValueError):
    """Inputs hit a degenerate point of a formula (e.g. exact resonance)."""


class NumericalFailureError(RuntimeError):
    """A numerical routine failed to converge or produced an infeasible result."""
