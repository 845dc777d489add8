"""Tetrahedral meshes: structured box generation, JSON I/O, boundary extraction.

Boxes are split into six tetrahedra per cell (Kuhn split with a consistent
main diagonal) so uniform refinement is nested and deterministic. Boundary
facets carry an integer patch label and the index of their owning tet.
"""

from dataclasses import dataclass, field
import json

import numpy as np

from .errors import GeometryError, MeshFormatError, TopologyError, ValidationError

# Local vertex pairs of a tet's six edges, lexicographic.
TET_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
# Local vertex triples of a tet's four faces (face i is opposite vertex i).
TET_FACES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))

_KUHN_PERMS = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))


def _freeze(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Mesh:
    """Immutable tetrahedral volume mesh with labeled boundary facets."""

    vertices: np.ndarray        # (nv, 3) float
    tets: np.ndarray            # (nt, 4) int, positively oriented
    boundary_facets: np.ndarray  # (nf, 3) int vertex triples
    facet_labels: np.ndarray    # (nf,) int patch labels
    facet_tets: np.ndarray      # (nf,) int owning tet per facet

    def __post_init__(self):
        object.__setattr__(self, "vertices", _freeze(np.asarray(self.vertices, dtype=float)))
        object.__setattr__(self, "tets", _freeze(np.asarray(self.tets, dtype=np.int64)))
        object.__setattr__(self, "boundary_facets", _freeze(np.asarray(self.boundary_facets, dtype=np.int64)))
        object.__setattr__(self, "facet_labels", _freeze(np.asarray(self.facet_labels, dtype=np.int64)))
        object.__setattr__(self, "facet_tets", _freeze(np.asarray(self.facet_tets, dtype=np.int64)))

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_tets(self):
        return self.tets.shape[0]

    def tet_volumes(self):
        """Signed volumes of all tets (positive for a valid mesh)."""
        v = self.vertices[self.tets]
        e = v[:, 1:] - v[:, :1]
        return np.linalg.det(e) / 6.0


def tet_edge_matrix(mesh):
    """Edge matrices J (columns v_i - v_0) for all tets, shape (nt, 3, 3)."""
    v = mesh.vertices[mesh.tets]
    return np.transpose(v[:, 1:] - v[:, :1], (0, 2, 1))


def _face_incidence(tets):
    """Map sorted face triple -> list of (tet index, local face index)."""
    nt = tets.shape[0]
    faces = {}
    for t in range(nt):
        for lf, (a, b, c) in enumerate(TET_FACES):
            key = tuple(sorted((tets[t, a], tets[t, b], tets[t, c])))
            faces.setdefault(key, []).append((t, lf))
    return faces


def validate_mesh(mesh):
    """Check the Mesh invariants, raising ValidationError naming the violation."""
    nv = mesh.num_vertices
    if mesh.tets.size and (mesh.tets.min() < 0 or mesh.tets.max() >= nv):
        raise ValidationError("tet references vertex index out of range")
    if mesh.boundary_facets.size and (mesh.boundary_facets.min() < 0 or mesh.boundary_facets.max() >= nv):
        raise ValidationError("boundary facet references vertex index out of range")
    if mesh.facet_tets.size and (mesh.facet_tets.min() < 0 or mesh.facet_tets.max() >= mesh.num_tets):
        raise ValidationError("boundary facet references tet index out of range")

    vols = mesh.tet_volumes()
    if np.any(vols <= 0.0):
        bad = int(np.argmin(vols))
        raise ValidationError(
            f"tet {bad} violates positive signed volume (got {vols[bad]:.3e})")

    faces = _face_incidence(mesh.tets)
    for key, owners in faces.items():
        if len(owners) > 2:
            raise TopologyError(f"face {key} is incident to {len(owners)} tets (non-manifold)")
    boundary_keys = {k for k, owners in faces.items() if len(owners) == 1}

    seen = set()
    for i in range(mesh.boundary_facets.shape[0]):
        key = tuple(sorted(mesh.boundary_facets[i]))
        if key not in boundary_keys:
            raise ValidationError(
                f"boundary facet {key} does not belong to exactly one tet")
        owner = faces[key][0][0]
        if owner != mesh.facet_tets[i]:
            raise ValidationError(
                f"boundary facet {key} lists owning tet {mesh.facet_tets[i]}, expected {owner}")
        seen.add(key)
    if seen != boundary_keys:
        missing = sorted(boundary_keys - seen)[:3]
        raise ValidationError(
            f"boundary facet list incomplete; first missing faces: {missing}")
    return mesh


def _as_triple(x, name, dtype=float):
    arr = np.array(x, dtype=dtype).reshape(-1)
    if arr.size == 1:
        arr = np.repeat(arr, 3)
    if arr.size != 3:
        raise ValidationError(f"{name} must be a scalar or a 3-tuple")
    return arr


def generate_box_mesh(n, lengths):
    """Conforming 6-tets-per-cell mesh of the box (0,L1)x(0,L2)x(0,L3).

    Parameters
    ----------
    n : int or 3-tuple of int
        Subdivisions per axis, >= 1.
    lengths : float or 3-tuple of float
        Edge lengths per axis, > 0.

    Boundary facets are labeled 1..6: x=0 -> 1, x=L1 -> 2, y=0 -> 3,
    y=L2 -> 4, z=0 -> 5, z=L3 -> 6.
    """
    n = _as_triple(n, "n", dtype=np.int64)
    lengths = _as_triple(lengths, "lengths", dtype=float)
    if np.any(n < 1):
        raise ValidationError("box subdivisions must be >= 1 per axis")
    if np.any(lengths <= 0.0):
        raise ValidationError("box edge lengths must be positive")

    nx, ny, nz = (int(v) for v in n)
    xs = [np.linspace(0.0, lengths[d], n[d] + 1) for d in range(3)]

    def vid(i, j, k):
        return (k * (ny + 1) + j) * (nx + 1) + i

    verts = np.empty(((nx + 1) * (ny + 1) * (nz + 1), 3))
    for k in range(nz + 1):
        for j in range(ny + 1):
            for i in range(nx + 1):
                verts[vid(i, j, k)] = (xs[0][i], xs[1][j], xs[2][k])

    tets = []
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                corner = np.array((i, j, k), dtype=np.int64)
                for perm in _KUHN_PERMS:
                    path = [corner.copy()]
                    for axis in perm:
                        nxt = path[-1].copy()
                        nxt[axis] += 1
                        path.append(nxt)
                    ids = [vid(*p) for p in path]
                    p = verts[ids]
                    if np.linalg.det(p[1:] - p[:1]) < 0.0:
                        ids[2], ids[3] = ids[3], ids[2]
                    tets.append(ids)
    tets = np.array(tets, dtype=np.int64)

    faces = _face_incidence(tets)
    boundary = sorted(k for k, owners in faces.items() if len(owners) == 1)
    facets = np.array(boundary, dtype=np.int64).reshape(-1, 3)
    owners = np.array([faces[tuple(f)][0][0] for f in facets], dtype=np.int64)

    labels = np.empty(facets.shape[0], dtype=np.int64)
    for idx, f in enumerate(facets):
        c = verts[f]
        label = 0
        for d in range(3):
            if np.all(c[:, d] == 0.0):
                label = 2 * d + 1
            elif np.all(c[:, d] == lengths[d]):
                label = 2 * d + 2
        if label == 0:
            raise ValidationError("box boundary facet not on any box face")
        labels[idx] = label

    return validate_mesh(Mesh(verts, tets, facets, labels, owners))


def save_mesh(mesh, path):
    """Write a mesh as a single JSON document (full-precision decimals)."""
    validate_mesh(mesh)
    doc = {
        "vertices": [[float(c) for c in v] for v in mesh.vertices],
        "tets": [[int(i) for i in t] for t in mesh.tets],
        "boundary_facets": [
            [int(f[0]), int(f[1]), int(f[2]), int(lab), int(tet)]
            for f, lab, tet in zip(mesh.boundary_facets, mesh.facet_labels, mesh.facet_tets)
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write('{\n"vertices": [\n')
        fh.write(",\n".join(json.dumps(v) for v in doc["vertices"]))
        fh.write('\n],\n"tets": [\n')
        fh.write(",\n".join(json.dumps(t) for t in doc["tets"]))
        fh.write('\n],\n"boundary_facets": [\n')
        fh.write(",\n".join(json.dumps(f) for f in doc["boundary_facets"]))
        fh.write("\n]\n}\n")


def load_mesh(path):
    """Load and validate a mesh saved by :func:`save_mesh`."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MeshFormatError(
            f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    for key in ("vertices", "tets", "boundary_facets"):
        if key not in doc:
            raise MeshFormatError(f"{path}: missing field '{key}'")
    try:
        verts = np.array(doc["vertices"], dtype=float).reshape(-1, 3)
        tets = np.array(doc["tets"], dtype=np.int64).reshape(-1, 4)
        bf = np.array(doc["boundary_facets"], dtype=np.int64).reshape(-1, 5)
    except (TypeError, ValueError) as exc:
        raise MeshFormatError(f"{path}: malformed array field ({exc})") from exc
    mesh = Mesh(verts, tets, bf[:, :3], bf[:, 3], bf[:, 4])
    return validate_mesh(mesh)


@dataclass(frozen=True)
class BoundarySurface:
    """Oriented triangulated surface with per-facet and per-vertex normals.

    Vertex indices refer to ``vertices`` (which may be a volume mesh's full
    coordinate array). ``facet_tets`` is -1 for surfaces loaded standalone.
    Per-vertex normals are angle-weighted averages of adjacent facet normals.
    """

    vertices: np.ndarray        # (nv, 3)
    facets: np.ndarray          # (nf, 3)
    facet_labels: np.ndarray    # (nf,)
    facet_tets: np.ndarray      # (nf,)
    facet_normals: np.ndarray   # (nf, 3) unit
    facet_areas: np.ndarray     # (nf,)
    vertex_normals: np.ndarray  # (nv, 3) unit on surface vertices, 0 elsewhere
    on_surface: np.ndarray      # (nv,) bool
    rim_vertices: np.ndarray    # (nv,) bool; on an edge with a single facet
    vertex_facets: tuple        # per-vertex tuple of adjacent facet indices (ascending)
    closed: bool = field(default=True)

    @property
    def surface_vertex_ids(self):
        return np.nonzero(self.on_surface)[0]


def _triangle_normals_areas(verts, facets):
    p = verts[facets]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    nrm = np.linalg.norm(cross, axis=1)
    if np.any(nrm <= 0.0):
        bad = int(np.argmin(nrm))
        raise GeometryError(f"surface facet {bad} is degenerate (zero area)")
    return cross / nrm[:, None], 0.5 * nrm


def _vertex_angle_weights(verts, facets):
    """Interior angle of each facet at each of its vertices, shape (nf, 3)."""
    p = verts[facets]
    ang = np.empty((facets.shape[0], 3))
    for loc in range(3):
        a = p[:, loc]
        b = p[:, (loc + 1) % 3]
        c = p[:, (loc + 2) % 3]
        u = b - a
        v = c - a
        cosang = np.sum(u * v, axis=1) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        ang[:, loc] = np.arccos(np.clip(cosang, -1.0, 1.0))
    return ang


def _build_surface(verts, facets, labels, owners, normals, areas):
    nv = verts.shape[0]
    nf = facets.shape[0]

    edge_count = {}
    for fi in range(nf):
        a, b, c = facets[fi]
        for e in ((a, b), (b, c), (a, c)):
            key = (min(e), max(e))
            edge_count[key] = edge_count.get(key, 0) + 1
    if any(cnt > 2 for cnt in edge_count.values()):
        bad = next(k for k, cnt in edge_count.items() if cnt > 2)
        raise TopologyError(f"surface edge {bad} belongs to more than two facets")
    closed = all(cnt == 2 for cnt in edge_count.values())

    rim = np.zeros(nv, dtype=bool)
    for (a, b), cnt in edge_count.items():
        if cnt == 1:
            rim[a] = rim[b] = True

    vertex_facets = [[] for _ in range(nv)]
    for fi in range(nf):
        for vtx in facets[fi]:
            vertex_facets[vtx].append(fi)
    vertex_facets = tuple(tuple(lst) for lst in vertex_facets)

    on_surface = np.zeros(nv, dtype=bool)
    on_surface[facets.reshape(-1)] = True

    ang = _vertex_angle_weights(verts, facets)
    vnormals = np.zeros((nv, 3))
    for fi in range(nf):
        for loc in range(3):
            vnormals[facets[fi, loc]] += ang[fi, loc] * normals[fi]
    lens = np.linalg.norm(vnormals, axis=1)
    nz = lens > 0.0
    vnormals[nz] /= lens[nz, None]

    return BoundarySurface(
        vertices=_freeze(verts), facets=_freeze(facets),
        facet_labels=_freeze(labels), facet_tets=_freeze(owners),
        facet_normals=_freeze(normals), facet_areas=_freeze(areas),
        vertex_normals=_freeze(vnormals), on_surface=_freeze(on_surface),
        rim_vertices=_freeze(rim), vertex_facets=vertex_facets, closed=closed)


def extract_boundary(mesh):
    """Boundary surface of a volume mesh with outward unit facet normals."""
    validate_mesh(mesh)
    normals, areas = _triangle_normals_areas(mesh.vertices, mesh.boundary_facets)

    # Orient outward: positive dot with the owning-tet-centroid -> facet-centroid vector.
    tet_cent = mesh.vertices[mesh.tets].mean(axis=1)[mesh.facet_tets]
    fac_cent = mesh.vertices[mesh.boundary_facets].mean(axis=1)
    flip = np.sum(normals * (fac_cent - tet_cent), axis=1) < 0.0
    normals = np.where(flip[:, None], -normals, normals)

    return _build_surface(mesh.vertices, mesh.boundary_facets,
                          mesh.facet_labels, mesh.facet_tets, normals, areas)


def surface_from_triangles(vertices, triangles, labels=None):
    """Build a BoundarySurface from raw triangles, trusting their orientation."""
    verts = np.asarray(vertices, dtype=float).reshape(-1, 3)
    facets = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    if facets.size and (facets.min() < 0 or facets.max() >= verts.shape[0]):
        raise ValidationError("surface triangle references vertex index out of range")
    if labels is None:
        labels = np.ones(facets.shape[0], dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    owners = np.full(facets.shape[0], -1, dtype=np.int64)
    normals, areas = _triangle_normals_areas(verts, facets)
    return _build_surface(verts, facets, labels, owners, normals, areas)


def load_surface(path):
    """Load a triangulated surface from JSON {vertices, triangles[, labels]}."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MeshFormatError(
            f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if "vertices" not in doc or "triangles" not in doc:
        raise MeshFormatError(f"{path}: missing field 'vertices' or 'triangles'")
    return surface_from_triangles(doc["vertices"], doc["triangles"], doc.get("labels"))


def save_surface(surface, path):
    doc = {
        "vertices": [[float(c) for c in v] for v in surface.vertices],
        "triangles": [[int(i) for i in f] for f in surface.facets],
        "labels": [int(x) for x in surface.facet_labels],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
