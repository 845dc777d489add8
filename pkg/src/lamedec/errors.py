"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: validation-type errors exit
with 2, resonance guards with 3, anything else with 1.
"""


class LamedecError(Exception):
    """Base class for all package errors."""


class ValidationError(LamedecError):
    """An input violates a documented invariant; the message names it."""


class MeshFormatError(ValidationError):
    """A mesh/surface file could not be parsed; carries line/field context."""


class TopologyError(ValidationError):
    """Non-manifold or otherwise inconsistent mesh connectivity."""


class GeometryError(ValidationError):
    """Degenerate geometry (zero-area triangle, non-positive volume, ...)."""


class ConfigError(ValidationError):
    """A run configuration is malformed or inconsistent."""


class SolverError(LamedecError):
    """An iterative solve failed to reach its tolerance.

    Carries the best iterate's diagnostics so callers can report proximity
    to a resonance.
    """

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class ResonanceError(LamedecError):
    """The requested frequency sits on (or too near) a discrete eigenvalue."""

    def __init__(self, message, omega2=None, nearest_eigenvalue=None):
        super().__init__(message)
        self.omega2 = omega2
        self.nearest_eigenvalue = nearest_eigenvalue
