"""Finite-element core: P1/P2 Lagrange elements on tets, constrained spaces,
assembly, field evaluation, norms and VTK export."""

from .assembly import (assemble_boundary_load, assemble_load, assemble_matrix,
                       boundary_tables, surface_l2, volume_l2, volume_tables)
from .dofmap import DofMap, build_dofmap
from .fields import (DiscreteField, FieldFunction, field_curl, field_div,
                     interpolate, norms)
from .reference import (basis_count, lagrange_nodes, reference_shape,
                        tet_quadrature, tri_quadrature)
from .vtkio import export_vtk

__all__ = [
    "DofMap", "DiscreteField", "FieldFunction",
    "assemble_boundary_load", "assemble_load", "assemble_matrix",
    "basis_count", "boundary_tables", "build_dofmap", "export_vtk",
    "field_curl", "field_div", "interpolate", "lagrange_nodes", "norms",
    "reference_shape", "surface_l2", "tet_quadrature", "tri_quadrature",
    "volume_l2", "volume_tables",
]
