"""lamedec: finite-element solvers for the time-harmonic Lame system with
third/fourth-kind (slip-type) boundary conditions, decoupled Helmholtz and
Maxwell solvers for its pressure and shear parts, boundary-geometry analysis,
and a manufactured-solution verification pipeline."""

from . import decoupled, fem, lame, linalg, mesh, surface, verify
from .errors import (ConfigError, GeometryError, LamedecError, MeshFormatError,
                     ResonanceError, SolverError, TopologyError, ValidationError)
from .lame import MaterialParams

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "GeometryError", "LamedecError", "MaterialParams",
    "MeshFormatError", "ResonanceError", "SolverError", "TopologyError",
    "ValidationError", "decoupled", "fem", "lame", "linalg", "mesh",
    "surface", "verify",
]
