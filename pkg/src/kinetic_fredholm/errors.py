"""Exception types raised by the library."""


class KineticError(Exception):
    pass


class DomainError(KineticError, ValueError):
    """Point on or outside the boundary of the spatial domain."""


class DegenerateVelocity(KineticError, ValueError):
    pass


class DegenerateCollision(KineticError, ValueError):
    """Coincident pre-collision velocities."""


class QuadratureError(KineticError, RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class GridError(KineticError, ValueError):
    pass


class NonContractiveError(KineticError, RuntimeError):
    def __init__(self, message, spectral_radius=None, history=None):
        super().__init__(message)
        self.spectral_radius = spectral_radius
        self.history = history


class BasisError(KineticError, RuntimeError):
    pass


class ProbeInconclusive(KineticError, RuntimeError):
    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class InsufficientData(KineticError, ValueError):
    pass


class ConfigError(KineticError, ValueError):
    pass
