"""Constrained degree-of-freedom maps for scalar and vector Lagrange spaces.

Boundary constraints are imposed by rotating the three components at each
boundary node into a local orthonormal frame and deleting constrained rows:

* ``tangential_zero`` (vanishing tangential trace): one independent adjacent
  normal constrains the two tangential components; two or more independent
  normals constrain all three.
* ``normal_zero`` (vanishing normal trace): each independent adjacent normal
  constrains one component (an edge node keeps only the edge direction).
* ``scalar_dirichlet_zero``: every boundary node of a scalar space.

Adjacent facet normals are considered distinct when their angle exceeds
1e-8 radians; independence is decided by SVD rank at the same tolerance.
DOF numbering is deterministic: vertex nodes in mesh order, then edge nodes
by sorted edge key, components node-major.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..mesh import TET_EDGES, validate_mesh
from .reference import basis_count, lagrange_nodes

VALUE_KINDS = ("scalar", "vector3")
CONSTRAINT_KINDS = ("none", "tangential_zero", "normal_zero", "scalar_dirichlet_zero")

_ANGLE_TOL = 1e-8


@dataclass(frozen=True)
class DofMap:
    """Finite-element space descriptor over one mesh."""

    mesh: object
    order: int
    value_kind: str
    constraint: str
    node_coords: np.ndarray    # (nn, 3)
    elem_nodes: np.ndarray     # (ne, nbf) scalar node ids
    frames: np.ndarray         # (nn, 3, 3) rows = local basis vectors (identity off boundary)
    constrained: np.ndarray    # (nn, ncomp) bool, in rotated component order
    free_index: np.ndarray     # (nn * ncomp,) free dof id or -1
    n_free: int
    boundary_nodes: np.ndarray     # (nn,) bool
    normal_rank: np.ndarray        # (nn,) number of independent adjacent normals
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def ncomp(self):
        return 3 if self.value_kind == "vector3" else 1

    @property
    def num_nodes(self):
        return self.node_coords.shape[0]

    @property
    def constrained_dofs(self):
        """Rotated global dof indices that are eliminated."""
        return np.nonzero(self.free_index < 0)[0]

    def expand(self, coeffs):
        """Free coefficients -> full Cartesian nodal values (nn, ncomp)."""
        coeffs = np.asarray(coeffs, dtype=float).reshape(-1)
        if coeffs.size != self.n_free:
            raise ValidationError("coefficient vector length does not match free dofs")
        rotated = np.zeros(self.num_nodes * self.ncomp)
        rotated[self.free_index >= 0] = coeffs[self.free_index[self.free_index >= 0]]
        rotated = rotated.reshape(self.num_nodes, self.ncomp)
        if self.value_kind == "scalar":
            return rotated
        return np.einsum("nji,nj->ni", self.frames, rotated)

    def restrict(self, nodal):
        """Full Cartesian nodal values -> free coefficients (constraints dropped)."""
        nodal = np.asarray(nodal, dtype=float).reshape(self.num_nodes, self.ncomp)
        if self.value_kind == "scalar":
            rotated = nodal
        else:
            rotated = np.einsum("nij,nj->ni", self.frames, nodal)
        flat = rotated.reshape(-1)
        out = np.empty(self.n_free)
        mask = self.free_index >= 0
        out[self.free_index[mask]] = flat[mask]
        return out

    def interpolate(self, func):
        """Nodal interpolation of a callable (or FieldFunction) onto free dofs."""
        value = getattr(func, "value", func)
        vals = np.asarray(value(self.node_coords), dtype=float)
        if self.value_kind == "scalar":
            vals = vals.reshape(self.num_nodes, 1)
        else:
            vals = vals.reshape(self.num_nodes, 3)
        return self.restrict(vals)


def _mesh_edges(mesh):
    """Unique sorted vertex pairs and the per-element edge index, lexicographic."""
    nv = mesh.num_vertices
    pairs = mesh.tets[:, np.array(TET_EDGES)]       # (ne, 6, 2)
    pairs = np.sort(pairs, axis=2)
    keys = pairs[..., 0] * nv + pairs[..., 1]
    uniq, inverse = np.unique(keys, return_inverse=True)
    edges = np.stack((uniq // nv, uniq % nv), axis=1)
    return edges, inverse.reshape(mesh.num_tets, 6)


def _facet_normals_outward(mesh):
    p = mesh.vertices[mesh.boundary_facets]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    cross /= np.linalg.norm(cross, axis=1)[:, None]
    tet_cent = mesh.vertices[mesh.tets].mean(axis=1)[mesh.facet_tets]
    fac_cent = p.mean(axis=1)
    flip = np.sum(cross * (fac_cent - tet_cent), axis=1) < 0.0
    return np.where(flip[:, None], -cross, cross)


def _distinct_normals(normals):
    """Deduplicate by line (angle tolerance), keeping first occurrences."""
    kept = []
    for nrm in normals:
        dup = False
        for ref in kept:
            # parallel or antiparallel normals span the same line
            if np.linalg.norm(np.cross(nrm, ref)) <= _ANGLE_TOL:
                dup = True
                break
        if not dup:
            kept.append(nrm)
    return kept


def _completion(nu):
    """Deterministic orthonormal completion (nu, t1, t2)."""
    k = int(np.argmin(np.abs(nu)))
    e = np.zeros(3)
    e[k] = 1.0
    t1 = e - np.dot(e, nu) * nu
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(nu, t1)
    return np.stack((nu, t1, t2))


def _node_frame(distinct, constraint):
    """(frame rows, constrained mask, rank) for one boundary node."""
    stack = np.array(distinct)
    if len(distinct) == 1:
        rank = 1
        frame = _completion(stack[0])
    else:
        _, sv, vt = np.linalg.svd(stack, full_matrices=True)
        rank = int(np.sum(sv > _ANGLE_TOL * sv[0]))
        frame = vt  # rows: span of normals first, then the free directions
    mask = np.zeros(3, dtype=bool)
    if constraint == "tangential_zero":
        if rank >= 2:
            mask[:] = True
        else:
            mask[1] = mask[2] = True   # frame row 0 is the normal, keep it
    elif constraint == "normal_zero":
        mask[:rank] = True
    return frame, mask, rank


def build_dofmap(mesh, order, value_kind, constraint):
    """Build a DofMap; see the module docstring for the constraint rules."""
    if value_kind not in VALUE_KINDS:
        raise ValidationError(f"unknown value kind '{value_kind}'")
    if constraint not in CONSTRAINT_KINDS:
        raise ValidationError(f"unknown constraint kind '{constraint}'")
    if constraint == "scalar_dirichlet_zero" and value_kind != "scalar":
        raise ValidationError("scalar_dirichlet_zero requires a scalar space")
    if constraint in ("tangential_zero", "normal_zero") and value_kind != "vector3":
        raise ValidationError(f"{constraint} requires a vector3 space")
    validate_mesh(mesh)

    nv = mesh.num_vertices
    if order == 1:
        node_coords = mesh.vertices.copy()
        elem_nodes = mesh.tets.copy()
        edge_of = None
    elif order == 2:
        edges, elem_edge = _mesh_edges(mesh)
        node_coords = np.vstack((mesh.vertices,
                                 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])))
        elem_nodes = np.hstack((mesh.tets, nv + elem_edge))
        edge_of = {(int(a), int(b)): nv + i for i, (a, b) in enumerate(edges)}
    else:
        raise ValidationError(f"unsupported element order {order}")

    nn = node_coords.shape[0]
    ncomp = 3 if value_kind == "vector3" else 1

    # Boundary nodes and their adjacent outward facet normals (ascending facet id).
    node_normals = {}
    fnormals = _facet_normals_outward(mesh) if mesh.boundary_facets.size else np.empty((0, 3))
    for fi in range(mesh.boundary_facets.shape[0]):
        a, b, c = (int(v) for v in mesh.boundary_facets[fi])
        nodes = [a, b, c]
        if order == 2:
            for e in ((a, b), (a, c), (b, c)):
                nodes.append(edge_of[(min(e), max(e))])
        for nd in nodes:
            node_normals.setdefault(nd, []).append(fnormals[fi])

    boundary = np.zeros(nn, dtype=bool)
    boundary[list(node_normals.keys())] = True

    frames = np.tile(np.eye(3), (nn, 1, 1))
    constrained = np.zeros((nn, ncomp), dtype=bool)
    rank_arr = np.zeros(nn, dtype=np.int64)

    if constraint == "scalar_dirichlet_zero":
        constrained[boundary, 0] = True
    elif constraint in ("tangential_zero", "normal_zero"):
        for nd in sorted(node_normals):
            distinct = _distinct_normals(node_normals[nd])
            frame, mask, rank = _node_frame(distinct, constraint)
            frames[nd] = frame
            constrained[nd] = mask
            rank_arr[nd] = rank
    elif constraint == "none" and value_kind == "vector3":
        for nd in sorted(node_normals):
            rank_arr[nd] = len(_distinct_normals(node_normals[nd]))

    flat_constrained = constrained.reshape(-1)
    free_index = np.full(nn * ncomp, -1, dtype=np.int64)
    free_ids = np.nonzero(~flat_constrained)[0]
    free_index[free_ids] = np.arange(free_ids.size)

    return DofMap(mesh=mesh, order=order, value_kind=value_kind, constraint=constraint,
                  node_coords=node_coords, elem_nodes=elem_nodes, frames=frames,
                  constrained=constrained, free_index=free_index,
                  n_free=int(free_ids.size), boundary_nodes=boundary,
                  normal_rank=rank_arr)


def reference_nodes(order):
    return lagrange_nodes(order)


def dofs_per_element(dm):
    return basis_count(dm.order) * dm.ncomp
