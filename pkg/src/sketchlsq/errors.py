"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Input shapes violate a documented precondition."""


class SingularMatrixError(RuntimeError):
    """A triangular factor has an exactly zero diagonal entry.

    For sketched factors this signals a numerically rank-deficient sketch;
    the message carries the offending diagonal index.
    """


class SvdError(RuntimeError):
    """SVD failed to converge even after falling back to the QR-based driver."""


class ConfigError(ValueError):
    """Experiment or CLI configuration rejected; message names the field."""
