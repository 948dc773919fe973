"""Exception hierarchy shared by all gaugebeam modules."""


class GaugeBeamError(Exception):
    """Base class for all library errors."""


class ParameterError(GaugeBeamError, ValueError):
    """A constructor or function received parameters violating an invariant."""


class DomainError(GaugeBeamError, ValueError):
    """A field was evaluated at a point outside its declared domain."""

    def __init__(self, message, points=None):
        super().__init__(message)
        self.points = points


class PoleError(DomainError):
    """The Rabi-frequency ratio is infinite (control field vanishes)."""


class DegenerateSystemError(DomainError):
    """The total Rabi frequency vanishes, so the adiabatic frame is undefined."""


class FeasibilityError(DomainError):
    """An inverse-design profile left the physical range |cos 2a| <= 1."""

    def __init__(self, message, exit_radius=None):
        super().__init__(message)
        self.exit_radius = exit_radius


class StepperError(GaugeBeamError, RuntimeError):
    """The time stepper failed to reach its residual tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigError(GaugeBeamError, ValueError):
    """A run configuration is malformed or incomplete."""


def format_points(points, limit=8):
    """Short human-readable list of offending points for error messages."""
    import numpy as np

    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    listed = ", ".join("(" + ", ".join("%.6g" % v for v in p) + ")" for p in pts[:limit])
    more = f" (+{len(pts) - limit} more)" if len(pts) > limit else ""
    return listed + more
