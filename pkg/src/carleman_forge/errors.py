"""Exception taxonomy shared across the package."""


class DomainError(ValueError):
    """An evaluation point or parameter lies outside the valid domain."""


class ConfigError(ValueError):
    """A configuration value is malformed or inconsistent."""


class InadmissibleHError(DomainError):
    """The semiclassical parameter h violates the admissibility conditions."""


class UnsupportedOperationError(RuntimeError):
    """The requested operation is not available for this object."""


class NumericError(RuntimeError):
    """A numeric routine failed to converge or produced invalid values."""


class CalibrationError(NumericError):
    """The (tau, t) feasibility search was exhausted without a passing pair."""


class ThresholdNotFoundError(NumericError):
    """No admissible h in the searched range passes verification."""


class ResolutionError(NumericError):
    """The discretization is too coarse for the requested accuracy."""
