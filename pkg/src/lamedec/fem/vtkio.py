"""Legacy VTK ASCII export (UNSTRUCTURED_GRID, cell type 10).

Numbers are printed with 17 significant digits so re-exporting identical
data is byte-identical.
"""

import numpy as np

from ..errors import ValidationError


def _fmt(x):
    return f"{x:.17g}"


def export_vtk(path, mesh, **fields):
    """Write the mesh and named per-vertex fields.

    Field values are arrays of shape (nv,) for scalars or (nv, 3) for
    vectors; DiscreteFields are exported through their vertex values.
    """
    nv = mesh.num_vertices
    blocks = []
    for name, data in fields.items():
        if hasattr(data, "vertex_values"):
            data = data.vertex_values()
        arr = np.asarray(data, dtype=float)
        if arr.shape == (nv,):
            blocks.append((name, "scalar", arr))
        elif arr.shape == (nv, 3):
            blocks.append((name, "vector", arr))
        else:
            raise ValidationError(
                f"field '{name}' has shape {arr.shape}, expected ({nv},) or ({nv}, 3)")

    lines = [
        "# vtk DataFile Version 3.0",
        "lamedec export",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {nv} double",
    ]
    for v in mesh.vertices:
        lines.append(" ".join(_fmt(c) for c in v))
    nt = mesh.num_tets
    lines.append(f"CELLS {nt} {5 * nt}")
    for t in mesh.tets:
        lines.append("4 " + " ".join(str(int(i)) for i in t))
    lines.append(f"CELL_TYPES {nt}")
    lines.extend(["10"] * nt)

    if blocks:
        lines.append(f"POINT_DATA {nv}")
        for name, kind, arr in blocks:
            if kind == "scalar":
                lines.append(f"SCALARS {name} double 1")
                lines.append("LOOKUP_TABLE default")
                lines.extend(_fmt(x) for x in arr)
            else:
                lines.append(f"VECTORS {name} double")
                lines.extend(" ".join(_fmt(c) for c in row) for row in arr)

    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
