"""Exception types shared across the package."""


class RenvolError(Exception):
    """Base class for all package errors."""


class SingularMetricError(RenvolError):
    """Metric is not invertible (or not positive definite) at a point."""


class DimensionUnsupportedError(RenvolError):
    """Requested quantity is not defined in this dimension."""


class ShapeError(RenvolError):
    """Field values do not match the family's grid layout."""


class IndeterminacyError(RenvolError):
    """Requested expansion order beyond the formally determined range."""


class InsufficientOrderError(RenvolError):
    """The power series is truncated below the requested order."""


class GaugeBreakdownError(RenvolError):
    """Eikonal marching hit a caustic before the requested radius."""

    def __init__(self, message, breakdown_radius=None):
        super().__init__(message)
        self.breakdown_radius = breakdown_radius


class InversionError(RenvolError):
    """The radial change of gauge could not be inverted."""


class DomainError(RenvolError):
    """Requested evaluation point is outside the solved/valid domain."""


class FitDegeneracyError(RenvolError):
    """Least-squares coefficient extraction is too ill-conditioned."""


class ResolutionError(RenvolError):
    """Cutoff below the resolution of the radial quadrature."""


class ShootingError(RenvolError):
    """Shooting solve failed to bracket or converge."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class SymmetryError(RenvolError):
    """Boundary data lacks the symmetry required by the reduction."""


class ImmersionError(RenvolError):
    """Degenerate induced metric: the map is not an immersion."""
